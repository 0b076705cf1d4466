#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "vulnpred/error.hpp"
#include "vulnpred/eval.hpp"
#include "vulnpred/model.hpp"
#include "vulnpred/pipeline.hpp"

namespace py = pybind11;
using namespace vulnpred;
using ojson = nlohmann::ordered_json;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
ojson parse(const std::string& text) {
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kConfig, std::string("invalid JSON: ") + e.what());
  }
}

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) fail(ErrorKind::kContract, "expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

class PyClassifier {
 public:
  PyClassifier(const std::string& family, const std::string& params)
      : model_(make_classifier(family, parse(params))) {}
  explicit PyClassifier(std::unique_ptr<Classifier> m) : model_(std::move(m)) {}

  void fit(const py::array_t<double, py::array::c_style | py::array::forcecast>& x, const std::vector<int>& y) {
    const Matrix m = to_matrix(x);
    py::gil_scoped_release release;
    model_->fit(m, y, std::nullopt);
  }

  std::vector<double> predict_proba(const py::array_t<double, py::array::c_style | py::array::forcecast>& x) const {
    return model_->predict_proba(to_matrix(x));
  }

  std::string family() const { return std::string(model_->family()); }
  std::string params() const { return model_->params_json().dump(); }
  std::string to_json_text() const { return to_json(*model_).dump(); }
  bool fitted() const { return model_->fitted(); }
  std::vector<double> feature_importance() const { return model_->feature_importance(); }

 private:
  std::unique_ptr<Classifier> model_;
};

}  // namespace

PYBIND11_MODULE(_vulnpred, m) {
  m.doc() = "vulnpred native core";

  // Instances carry the failure category in `.kind` and the CLI status in `.exit_code`.
  static PyObject* error_type = PyErr_NewException("vulnpred._vulnpred.VulnpredError", PyExc_RuntimeError, nullptr);
  m.attr("VulnpredError") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("kind") = to_string(e.kind());
      inst.attr("exit_code") = exit_code_for(e.kind());
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  m.def("report", [](std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    return to_json(report(ConfusionMatrix{tp, fp, tn, fn})).dump();
  }, py::arg("tp"), py::arg("fp"), py::arg("tn"), py::arg("fn"));

  m.def("confusion", [](const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    return to_json(confusion(y_true, y_pred)).dump();
  });

  m.def("roc_auc", [](const std::vector<int>& y, const std::vector<double>& scores) {
    const auto c = roc_auc(y, scores);
    std::vector<std::tuple<double, double, double>> pts;
    for (const auto& p : c.points) pts.emplace_back(p.threshold, p.fpr, p.tpr);
    return py::make_tuple(c.auc, pts);
  });

  m.def("validate_config", [](const std::string& doc) {
    const auto v = validate_config(parse(doc));
    std::vector<std::pair<std::string, std::string>> issues;
    for (const auto& e : v.errors) issues.emplace_back(e.path, e.message);
    return py::make_tuple(v.config ? to_json(*v.config).dump() : std::string(), issues);
  });

  m.def("paper_msft_preset", [] { return paper_msft_preset().dump(); });

  m.def("run", [](const std::string& doc) {
    const auto cfg = load_config(parse(doc));
    py::gil_scoped_release release;
    return to_json(run(cfg)).dump();
  });

  m.def("known_families", &known_families);

  py::class_<PyClassifier>(m, "Classifier")
      .def(py::init<const std::string&, const std::string&>(), py::arg("family"), py::arg("params") = "{}")
      .def_static("from_json", [](const std::string& j) { return PyClassifier(classifier_from_json(parse(j))); })
      .def("fit", &PyClassifier::fit, py::arg("x"), py::arg("y"))
      .def("predict_proba", &PyClassifier::predict_proba, py::arg("x"))
      .def("to_json", &PyClassifier::to_json_text)
      .def("feature_importance", &PyClassifier::feature_importance)
      .def_property_readonly("family", &PyClassifier::family)
      .def_property_readonly("params", &PyClassifier::params)
      .def_property_readonly("fitted", &PyClassifier::fitted);
}
