#include "vulnpred/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <type_traits>

#include "vulnpred/error.hpp"
#include "vulnpred/model.hpp"
#include "vulnpred/profile.hpp"

namespace vulnpred {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kIngest: return "ingest";
    case Stage::kProfile: return "profile";
    case Stage::kCleanse: return "cleanse";
    case Stage::kEncode: return "encode";
    case Stage::kTune: return "tune";
    case Stage::kTrain: return "train";
    case Stage::kEvaluate: return "evaluate";
    case Stage::kReport: return "report";
  }
  return "unknown";
}

const ModelResult& RunReport::model(const std::string& name) const {
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  fail(ErrorKind::kContract, "run report has no model named '" + name + "'");
}

namespace {

constexpr const char* kFailureMarker = "FAILED";

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) fail(ErrorKind::kIngest, "cannot create output directory " + root_.string() + ": " + ec.message());
  }

  void text(const std::string& rel, const std::string& content) {
    const fs::path path = root_ / rel;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::kIngest, "cannot write " + path.string());
    f << content;
    if (!f) fail(ErrorKind::kIngest, "write failed: " + path.string());
    paths_.push_back(rel);
  }

  void json(const std::string& rel, const ojson& j) { text(rel, j.dump(2) + "\n"); }

  const fs::path& root() const { return root_; }
  const std::vector<std::string>& paths() const { return paths_; }

 private:
  fs::path root_;
  std::vector<std::string> paths_;
};

ojson read_json(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kIngest, "cannot read " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return ojson::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kData, path.string() + ": " + e.what());
  }
}

/// Times stages and tags failures with the stage name; leaves a marker file
/// next to whatever artifacts were already written.
class StageRunner {
 public:
  StageRunner(fs::path out_dir, bool keep_timings) : out_dir_(std::move(out_dir)), keep_(keep_timings) {
    std::error_code ec;
    fs::remove(out_dir_ / kFailureMarker, ec);
  }

  template <typename F>
  auto operator()(Stage stage, F&& f) -> decltype(f()) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        record(stage, start);
      } else {
        auto result = f();
        record(stage, start);
        return result;
      }
    } catch (const Error& e) {
      abort(stage, e.kind(), e.what());
    } catch (const fs::filesystem_error& e) {
      abort(stage, ErrorKind::kIngest, e.what());
    } catch (const std::bad_alloc&) {
      abort(stage, ErrorKind::kTraining, "out of memory");
    }
  }

  const std::vector<std::pair<std::string, double>>& timings() const { return timings_; }

 private:
  void record(Stage stage, std::chrono::steady_clock::time_point start) {
    if (!keep_) return;
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    const std::string name(to_string(stage));
    auto it = std::find_if(timings_.begin(), timings_.end(), [&](const auto& t) { return t.first == name; });
    if (it == timings_.end()) timings_.emplace_back(name, d.count());
    else it->second += d.count();
  }

  [[noreturn]] void abort(Stage stage, ErrorKind kind, const std::string& cause) {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    std::ofstream f(out_dir_ / kFailureMarker, std::ios::binary);
    f << "stage: " << to_string(stage) << "\nkind: " << to_string(kind) << "\ncause: " << cause << "\n";
    throw Error(kind, "stage " + std::string(to_string(stage)) + " failed: " + cause);
  }

  fs::path out_dir_;
  bool keep_;
  std::vector<std::pair<std::string, double>> timings_;
};

Table drop_missing_target(const Table& t, const std::string& target, std::size_t* dropped) {
  const Column& y = t.column(target);
  std::vector<std::size_t> keep;
  keep.reserve(t.row_count());
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    if (!y.is_missing(r)) keep.push_back(r);
  }
  if (dropped) *dropped = t.row_count() - keep.size();
  if (keep.size() == t.row_count()) return t;
  return t.select_rows(keep);
}

EncodedMatrix encode_partition(const Table& table, const std::vector<std::size_t>& rows, const CleansePlan& plan,
                               const FittedEncoders& encoders) {
  return transform(apply_cleanse(table.select_rows(rows), plan), encoders);
}

std::optional<EvalSet> eval_set_of(const EncodedMatrix& m) {
  if (m.x.rows() == 0) return std::nullopt;
  return EvalSet{m.x, m.labels};
}

struct TrainedModel {
  const ModelEntry* entry = nullptr;
  std::unique_ptr<Classifier> model;
  std::optional<CvResult> cv;
};

std::vector<TrainedModel> train_roster(const PipelineConfig& cfg, const PreparedData& data, StageRunner& stage) {
  std::vector<TrainedModel> out;
  for (const auto& entry : cfg.models) {
    TrainedModel t;
    t.entry = &entry;
    ojson params = entry.params;
    auto tuning = std::find_if(cfg.tuning.begin(), cfg.tuning.end(),
                               [&](const TuningEntry& e) { return e.model == entry.name; });
    if (tuning != cfg.tuning.end()) {
      stage(Stage::kTune, [&] {
        GridSpec spec;
        spec.family = entry.family;
        spec.base_params = entry.params;
        spec.grid = tuning->grid;
        spec.k = tuning->k;
        spec.scoring = tuning->scoring;
        spec.stratified = tuning->stratified;
        spec.seed = tuning->seed;
        t.cv = grid_search(data.train.x, data.train.labels, spec);
        params = t.cv->best_params;
      });
    }
    stage(Stage::kTrain, [&] {
      t.model = make_classifier(entry.family, params);
      try {
        t.model->fit(data.train.x, data.train.labels, eval_set_of(data.validation));
      } catch (const Error& e) {
        throw Error(e.kind(), "model '" + entry.name + "' (" + entry.family + "): " + e.what());
      }
    });
    out.push_back(std::move(t));
  }
  return out;
}

std::string cv_results_csv(const std::vector<TrainedModel>& models) {
  std::string out;
  for (const auto& m : models) {
    if (!m.cv) continue;
    std::istringstream lines(format_cv_csv(*m.cv));
    std::string line;
    std::getline(lines, line);
    if (out.empty()) out = "model," + line + "\n";
    while (std::getline(lines, line)) out += csv_escape(m.entry->name) + "," + line + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, double>> top_features(const std::vector<double>& importance,
                                                         const std::vector<std::string>& names, std::size_t n) {
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t i : order) {
    if (out.size() >= n || !(importance[i] > 0.0)) break;
    out.emplace_back(i < names.size() ? names[i] : "f" + std::to_string(i), importance[i]);
  }
  return out;
}

ModelResult evaluate_model(const std::string& name, const Classifier& model, const EncodedMatrix& test,
                           std::size_t n_top) {
  ModelResult r;
  r.name = name;
  r.family = std::string(model.family());
  r.params = model.params_json();
  const auto proba = model.predict_proba(test.x);
  const auto labels = predict_labels(proba);
  r.confusion = confusion(test.labels, labels);
  r.report = report(r.confusion);
  try {
    r.error_rates = error_rates(r.confusion);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefined) throw;
  }
  r.roc = roc_auc(test.labels, proba);
  if (const auto* h = model.history()) r.history = *h;
  r.top_features = top_features(model.feature_importance(), test.feature_names, n_top);
  return r;
}

ojson metrics_json(const ModelResult& r) {
  ojson j;
  j["model"] = r.name;
  j["family"] = r.family;
  j["accuracy"] = r.report.accuracy;
  j["auc"] = r.roc.auc;
  j["report"] = to_json(r.report);
  j["confusion"] = to_json(r.confusion);
  if (r.error_rates) {
    j["error_rates"] = {{"type_i", r.error_rates->type_i}, {"type_ii", r.error_rates->type_ii}};
  } else {
    j["error_rates"] = nullptr;
  }
  if (r.history) {
    j["boosting"] = {{"rounds", r.history->rounds.size()},
                     {"best_round", r.history->best_round},
                     {"stopped_early", r.history->stopped_early}};
  }
  ojson top = ojson::array();
  for (const auto& [f, v] : r.top_features) top.push_back({{"feature", f}, {"importance", v}});
  j["top_features"] = std::move(top);
  if (r.cv) {
    j["tuning"] = {{"scoring", std::string(to_string(r.cv->scoring))},
                   {"best_index", r.cv->best_index},
                   {"best_score", r.cv->best_score},
                   {"best_params", r.cv->best_params}};
  }
  j["params"] = r.params;
  return j;
}

/// metrics, ROC and history per model, then the shared confusion table and plot.
void emit_evaluation(ArtifactWriter& out, const std::vector<ModelResult>& results) {
  std::vector<std::pair<std::string, ConfusionMatrix>> rows;
  std::vector<NamedCurve> curves;
  for (const auto& r : results) {
    out.json(r.name + "/metrics.json", metrics_json(r));
    out.text("roc_" + r.name + ".csv", format_roc_csv(r.roc));
    if (r.history) out.text("history_" + r.name + ".csv", format_history_csv(*r.history));
    rows.emplace_back(r.name, r.confusion);
    curves.push_back({r.name, r.roc});
  }
  out.text("confusion.csv", format_confusion_csv(rows));
  const std::string svg = render_roc_svg(curves);
  out.text("roc.svg", svg);
}

ojson consistency_json(const std::vector<std::pair<ConsistencyCheck, ConsistencyReport>>& checks) {
  ojson arr = ojson::array();
  for (const auto& [c, r] : checks) {
    arr.push_back({{"parent", c.parent}, {"child", c.child}, {"violating_child_values", r.violating_child_values}});
  }
  return arr;
}

void check_declared_columns(const Table& t, const PipelineConfig& cfg) {
  for (const auto& [name, kind] : cfg.kinds) {
    if (!t.find(name)) fail(ErrorKind::kSchema, "columns.kinds names '" + name + "', which the input does not have");
  }
  for (const auto& c : cfg.consistency_checks) {
    for (const auto& name : {c.parent, c.child}) {
      if (!t.find(name)) {
        fail(ErrorKind::kSchema, "cleanse.consistency_checks names '" + name + "', which the input does not have");
      }
    }
  }
}

}  // namespace

Table ingest(const PipelineConfig& cfg, std::size_t* missing_target) {
  Table t;
  if (cfg.synthetic) {
    t = synth_generate(*cfg.synthetic).table;
  } else {
    auto kinds = cfg.kinds;
    kinds[cfg.target] = ColumnKind::kTarget;
    CsvOptions options;
    options.missing_markers = cfg.missing_markers;
    t = read_csv(cfg.input, kinds, options);
  }
  if (!t.find(cfg.target)) fail(ErrorKind::kSchema, "target column '" + cfg.target + "' not found in input");
  check_declared_columns(t, cfg);
  return drop_missing_target(t, cfg.target, missing_target);
}

PreparedData prepare(const PipelineConfig& cfg) {
  PreparedData d;
  d.table = ingest(cfg, &d.rows_missing_target);
  const auto labels = d.table.labels();
  d.indices = split_indices(d.table.row_count(), labels, cfg.split);
  const Table train_raw = d.table.select_rows(d.indices.train);

  d.train_profile = profile(train_raw);
  d.plan = plan_cleanse(d.train_profile, cfg.cleanse);
  if (!cfg.cleanse.drop_rows_with_missing) d.plan.drop_row_policy = RowPolicy::kNone;
  for (const auto& c : cfg.consistency_checks) {
    d.consistency.emplace_back(c, cross_consistency(train_raw, c.parent, c.child));
  }

  const Table train = apply_cleanse(train_raw, d.plan);
  if (train.row_count() == 0) fail(ErrorKind::kData, "no training rows survive cleansing");
  const auto spec = plan_encoding(train, cfg.encoding);
  d.encoders = fit_encoders(train, spec);
  d.train = transform(train, d.encoders);
  d.validation = encode_partition(d.table, d.indices.validation, d.plan, d.encoders);
  d.test = encode_partition(d.table, d.indices.test, d.plan, d.encoders);
  return d;
}

RunReport run(const PipelineConfig& cfg) {
  StageRunner stage(cfg.output_dir, cfg.timings);
  ArtifactWriter out(cfg.output_dir);
  RunReport rep;
  rep.config = to_json(cfg);

  PreparedData d;
  stage(Stage::kIngest, [&] {
    d.table = ingest(cfg, &d.rows_missing_target);
    d.indices = split_indices(d.table.row_count(), d.table.labels(), cfg.split);
  });
  Table train_raw;
  stage(Stage::kProfile, [&] {
    train_raw = d.table.select_rows(d.indices.train);
    d.train_profile = profile(train_raw);
    out.json("profile.json", to_json(d.train_profile));
  });
  Table train;
  stage(Stage::kCleanse, [&] {
    d.plan = plan_cleanse(d.train_profile, cfg.cleanse);
    if (!cfg.cleanse.drop_rows_with_missing) d.plan.drop_row_policy = RowPolicy::kNone;
    for (const auto& c : cfg.consistency_checks) {
      d.consistency.emplace_back(c, cross_consistency(train_raw, c.parent, c.child));
    }
    out.json("cleanse_plan.json", to_json(d.plan));
    train = apply_cleanse(train_raw, d.plan);
    if (train.row_count() == 0) fail(ErrorKind::kData, "no training rows survive cleansing");
  });
  stage(Stage::kEncode, [&] {
    d.encoders = fit_encoders(train, plan_encoding(train, cfg.encoding));
    out.json("encoders.json", to_json(d.encoders));
    d.train = transform(train, d.encoders);
    d.validation = encode_partition(d.table, d.indices.validation, d.plan, d.encoders);
    d.test = encode_partition(d.table, d.indices.test, d.plan, d.encoders);
  });

  auto trained = train_roster(cfg, d, stage);
  stage(Stage::kTrain, [&] {
    for (const auto& t : trained) out.json(t.entry->name + "/model.json", to_json(*t.model));
    const auto cv = cv_results_csv(trained);
    if (!cv.empty()) out.text("cv_results.csv", cv);
  });

  stage(Stage::kEvaluate, [&] {
    for (const auto& t : trained) {
      auto r = evaluate_model(t.entry->name, *t.model, d.test, cfg.top_features);
      r.cv = t.cv;
      rep.models.push_back(std::move(r));
    }
    emit_evaluation(out, rep.models);
  });

  stage(Stage::kReport, [&] {
    rep.rows_ingested = d.table.row_count() + d.rows_missing_target;
    rep.rows_missing_target = d.rows_missing_target;
    rep.rows_train = d.train.x.rows();
    rep.rows_validation = d.validation.x.rows();
    rep.rows_test = d.test.x.rows();
    rep.feature_names = d.train.feature_names;
    rep.timings = stage.timings();
    rep.artifacts = out.paths();
    rep.artifacts.push_back("run_report.json");
    ojson j = to_json(rep);
    j["cleanse"] = {{"dropped_features", to_json(d.plan)["drop_features"]},
                    {"consistency", consistency_json(d.consistency)}};
    out.json("run_report.json", j);
  });
  return rep;
}

ojson to_json(const RunReport& r) {
  ojson j;
  j["format"] = "vulnpred.run_report";
  j["version"] = 1;
  j["rows"] = {{"ingested", r.rows_ingested},
               {"missing_target", r.rows_missing_target},
               {"train", r.rows_train},
               {"validation", r.rows_validation},
               {"test", r.rows_test}};
  j["features"] = {{"count", r.feature_names.size()}, {"names", r.feature_names}};
  ojson models = ojson::array();
  for (const auto& m : r.models) models.push_back(metrics_json(m));
  j["models"] = std::move(models);
  if (!r.timings.empty()) {
    ojson t = ojson::object();
    for (const auto& [stage, secs] : r.timings) t[stage] = secs;
    j["timings"] = std::move(t);
  }
  j["config"] = r.config;
  j["artifacts"] = r.artifacts;
  return j;
}

// ---------------------------------------------------------------------------
// Standalone stages

std::vector<std::string> run_profile(const PipelineConfig& cfg) {
  ArtifactWriter out(cfg.output_dir);
  out.json("profile.json", to_json(profile(ingest(cfg))));
  return out.paths();
}

std::vector<std::string> run_cleanse(const PipelineConfig& cfg) {
  ArtifactWriter out(cfg.output_dir);
  const Table t = ingest(cfg);
  auto plan = plan_cleanse(profile(t), cfg.cleanse);
  if (!cfg.cleanse.drop_rows_with_missing) plan.drop_row_policy = RowPolicy::kNone;
  std::vector<std::pair<ConsistencyCheck, ConsistencyReport>> checks;
  for (const auto& c : cfg.consistency_checks) checks.emplace_back(c, cross_consistency(t, c.parent, c.child));
  const Table cleansed = apply_cleanse(t, plan);
  ojson j = to_json(plan);
  j["consistency"] = consistency_json(checks);
  j["rows_before"] = t.row_count();
  j["rows_after"] = cleansed.row_count();
  j["columns_after"] = cleansed.column_count();
  out.json("cleanse_plan.json", j);
  out.text("cleansed.csv", format_csv(cleansed));
  return out.paths();
}

std::vector<std::string> run_encode(const PipelineConfig& cfg) {
  ArtifactWriter out(cfg.output_dir);
  const auto d = prepare(cfg);
  out.json("cleanse_plan.json", to_json(d.plan));
  out.json("encoders.json", to_json(d.encoders));
  out.text("encoded_train.csv", format_encoded_csv(d.train));
  out.text("encoded_validation.csv", format_encoded_csv(d.validation));
  out.text("encoded_test.csv", format_encoded_csv(d.test));
  return out.paths();
}

std::vector<std::string> run_train(const PipelineConfig& cfg) {
  StageRunner stage(cfg.output_dir, false);
  ArtifactWriter out(cfg.output_dir);
  PreparedData d = stage(Stage::kEncode, [&] { return prepare(cfg); });
  out.json("cleanse_plan.json", to_json(d.plan));
  out.json("encoders.json", to_json(d.encoders));
  auto trained = train_roster(cfg, d, stage);
  for (const auto& t : trained) {
    out.json(t.entry->name + "/model.json", to_json(*t.model));
    if (const auto* h = t.model->history()) out.text("history_" + t.entry->name + ".csv", format_history_csv(*h));
  }
  const auto cv = cv_results_csv(trained);
  if (!cv.empty()) out.text("cv_results.csv", cv);
  return out.paths();
}

RunReport run_evaluate(const PipelineConfig& cfg) {
  StageRunner stage(cfg.output_dir, cfg.timings);
  ArtifactWriter out(cfg.output_dir);
  const fs::path root = cfg.output_dir;
  RunReport rep;
  rep.config = to_json(cfg);

  std::size_t missing_target = 0;
  const Table table = stage(Stage::kIngest, [&] { return ingest(cfg, &missing_target); });
  const auto indices = split_indices(table.row_count(), table.labels(), cfg.split);
  EncodedMatrix test = stage(Stage::kEncode, [&] {
    const auto plan = cleanse_plan_from_json(read_json(root / "cleanse_plan.json"));
    const auto encoders = fitted_encoders_from_json(read_json(root / "encoders.json"));
    return encode_partition(table, indices.test, plan, encoders);
  });
  stage(Stage::kEvaluate, [&] {
    for (const auto& entry : cfg.models) {
      const auto model = classifier_from_json(read_json(root / entry.name / "model.json"));
      if (model->family() != entry.family) {
        fail(ErrorKind::kContract, entry.name + "/model.json holds a " + std::string(model->family()) +
                                       " model, config says " + entry.family);
      }
      rep.models.push_back(evaluate_model(entry.name, *model, test, cfg.top_features));
    }
    emit_evaluation(out, rep.models);
  });
  rep.rows_ingested = table.row_count() + missing_target;
  rep.rows_missing_target = missing_target;
  rep.rows_test = test.x.rows();
  rep.feature_names = test.feature_names;
  rep.timings = stage.timings();
  rep.artifacts = out.paths();
  rep.artifacts.push_back("run_report.json");
  out.json("run_report.json", to_json(rep));
  return rep;
}

}  // namespace vulnpred
