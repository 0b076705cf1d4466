#include "vulnpred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "vulnpred/error.hpp"
#include "vulnpred/table.hpp"

namespace vulnpred {

using ojson = nlohmann::ordered_json;

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    fail(ErrorKind::kContract, "confusion: " + std::to_string(y_true.size()) + " labels vs " +
                                   std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) fail(ErrorKind::kContract, "confusion: labels must be 0/1");
    if (t == 1) {
      ++(p == 1 ? cm.tp : cm.fn);
    } else {
      ++(p == 1 ? cm.fp : cm.tn);
    }
  }
  return cm;
}

namespace {

double ratio(std::size_t num, std::size_t den, const char* name, std::vector<std::string>& flags) {
  if (den == 0) {
    flags.emplace_back(name);
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r, const char* name, std::vector<std::string>& flags) {
  if (p + r == 0.0) {
    flags.emplace_back(name);
    return 0.0;
  }
  return 2.0 * p * r / (p + r);
}

}  // namespace

ClassificationReport report(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) fail(ErrorKind::kContract, "report: empty confusion matrix");
  ClassificationReport r;
  auto& flags = r.zero_division;
  r.class1.precision = ratio(cm.tp, cm.tp + cm.fp, "precision_1", flags);
  r.class1.recall = ratio(cm.tp, cm.tp + cm.fn, "recall_1", flags);
  r.class1.f1 = f1_of(r.class1.precision, r.class1.recall, "f1_1", flags);
  r.class1.support = cm.tp + cm.fn;
  r.class0.precision = ratio(cm.tn, cm.tn + cm.fn, "precision_0", flags);
  r.class0.recall = ratio(cm.tn, cm.tn + cm.fp, "recall_0", flags);
  r.class0.f1 = f1_of(r.class0.precision, r.class0.recall, "f1_0", flags);
  r.class0.support = cm.tn + cm.fp;

  r.macro.precision = (r.class0.precision + r.class1.precision) / 2.0;
  r.macro.recall = (r.class0.recall + r.class1.recall) / 2.0;
  r.macro.f1 = (r.class0.f1 + r.class1.f1) / 2.0;

  const double n = static_cast<double>(total);
  const double w0 = static_cast<double>(r.class0.support) / n;
  const double w1 = static_cast<double>(r.class1.support) / n;
  r.weighted.precision = w0 * r.class0.precision + w1 * r.class1.precision;
  r.weighted.recall = w0 * r.class0.recall + w1 * r.class1.recall;
  r.weighted.f1 = w0 * r.class0.f1 + w1 * r.class1.f1;
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / n;
  return r;
}

RocCurve roc_auc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) fail(ErrorKind::kContract, "roc_auc: length mismatch");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] != 0 && y_true[i] != 1) fail(ErrorKind::kContract, "roc_auc: labels must be 0/1");
    if (!std::isfinite(scores[i])) fail(ErrorKind::kContract, "roc_auc: non-finite score");
    pos += static_cast<std::size_t>(y_true[i]);
  }
  const std::size_t neg = y_true.size() - pos;
  if (pos == 0 || neg == 0) fail(ErrorKind::kUndefined, "roc_auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  // twice the area in units of (neg * pos) cells, kept integral until the end
  unsigned long long doubled = 0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    std::size_t dtp = 0, dfp = 0;
    while (i < order.size() && scores[order[i]] == s) {
      (y_true[order[i]] ? dtp : dfp) += 1;
      ++i;
    }
    doubled += static_cast<unsigned long long>(dfp) * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos)});
  }
  curve.auc = static_cast<double>(doubled) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return curve;
}

ErrorRates error_rates(const ConfusionMatrix& cm) {
  if (cm.fp + cm.tn == 0) fail(ErrorKind::kUndefined, "error_rates: no actual negatives, type I undefined");
  if (cm.fn + cm.tp == 0) fail(ErrorKind::kUndefined, "error_rates: no actual positives, type II undefined");
  return {static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tn),
          static_cast<double>(cm.fn) / static_cast<double>(cm.fn + cm.tp)};
}

ojson to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

ojson to_json(const ClassificationReport& r) {
  auto cls = [](const ClassMetrics& m) {
    return ojson{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  };
  auto avg = [](const AveragedMetrics& m) {
    return ojson{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  };
  ojson j;
  j["accuracy"] = r.accuracy;
  j["class_0"] = cls(r.class0);
  j["class_1"] = cls(r.class1);
  j["macro"] = avg(r.macro);
  j["weighted"] = avg(r.weighted);
  j["zero_division"] = r.zero_division;
  return j;
}

std::string format_confusion_csv(const std::vector<std::pair<std::string, ConfusionMatrix>>& rows) {
  std::string out = "model,tp,fp,tn,fn\n";
  for (const auto& [name, cm] : rows) {
    out += csv_escape(name) + "," + std::to_string(cm.tp) + "," + std::to_string(cm.fp) + "," +
           std::to_string(cm.tn) + "," + std::to_string(cm.fn) + "\n";
  }
  return out;
}

std::string format_roc_csv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    out += format_number(p.threshold) + "," + format_number(p.fpr) + "," + format_number(p.tpr) + "\n";
  }
  return out;
}

namespace {

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string render_roc_svg(std::span<const NamedCurve> curves) {
  if (curves.empty()) fail(ErrorKind::kContract, "emit_roc_svg: at least one curve required");
  constexpr double left = 60, top = 20, size = 400;
  const double legend_h = 18.0 * static_cast<double>(curves.size());
  const double height = top + size + 50 + legend_h;
  auto px = [&](double fpr) { return fixed3(left + fpr * size); };
  auto py = [&](double tpr) { return fixed3(top + (1.0 - tpr) * size); };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed3(left + size + 20) + "\" height=\"" +
         fixed3(height) + "\">\n";
  out += "<rect x=\"" + fixed3(left) + "\" y=\"" + fixed3(top) + "\" width=\"" + fixed3(size) + "\" height=\"" +
         fixed3(size) + "\" fill=\"none\" stroke=\"#000\"/>\n";
  out += "<line class=\"diagonal\" x1=\"" + px(0) + "\" y1=\"" + py(0) + "\" x2=\"" + px(1) + "\" y2=\"" + py(1) +
         "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  out += "<text x=\"" + fixed3(left + size / 2) + "\" y=\"" + fixed3(top + size + 32) +
         "\" text-anchor=\"middle\" font-size=\"12\">False positive rate</text>\n";
  out += "<text x=\"14\" y=\"" + fixed3(top + size / 2) + "\" transform=\"rotate(-90 14 " +
         fixed3(top + size / 2) + ")\" text-anchor=\"middle\" font-size=\"12\">True positive rate</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    out += "<polyline class=\"roc\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < curves[i].curve.points.size(); ++k) {
      const auto& p = curves[i].curve.points[k];
      if (k) out.push_back(' ');
      out += px(p.fpr) + "," + py(p.tpr);
    }
    out += "\"/>\n";
  }
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    const double y = top + size + 50 + 18.0 * static_cast<double>(i);
    out += "<g class=\"legend\"><line x1=\"" + fixed3(left) + "\" y1=\"" + fixed3(y - 4) + "\" x2=\"" +
           fixed3(left + 20) + "\" y2=\"" + fixed3(y - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>";
    out += "<text x=\"" + fixed3(left + 26) + "\" y=\"" + fixed3(y) + "\" font-size=\"12\">" +
           xml_escape(curves[i].name) + " (AUC = " + fixed3(curves[i].curve.auc) + ")</text></g>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_roc_svg(std::span<const NamedCurve> curves, const std::string& path) {
  const std::string svg = render_roc_svg(curves);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kIngest, "cannot write " + path);
  f << svg;
  if (!f) fail(ErrorKind::kIngest, "write failed: " + path);
}

}  // namespace vulnpred
