#include "vulnpred/model.hpp"

#include <set>

#include "vulnpred/error.hpp"

namespace vulnpred {

using ojson = nlohmann::ordered_json;

namespace {

/// Reads typed keys from a params object and rejects anything left unread.
class ParamReader {
 public:
  ParamReader(const ojson& j, std::string context) : j_(j), ctx_(std::move(context)) {
    if (!j_.is_object()) fail(ErrorKind::kConfig, ctx_ + ": parameters must be an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void mark(const char* key) { used_.insert(key); }

  const ojson& raw(const char* key) {
    used_.insert(key);
    return j_.at(key);
  }

  double number(const char* key, double def) {
    used_.insert(key);
    if (!j_.contains(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number()) bad(key, "a number");
    return v.get<double>();
  }

  std::size_t count(const char* key, std::size_t def) {
    used_.insert(key);
    if (!j_.contains(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      bad(key, "a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  std::optional<std::size_t> optional_count(const char* key, std::optional<std::size_t> def) {
    if (j_.contains(key) && j_.at(key).is_null()) {
      used_.insert(key);
      return std::nullopt;
    }
    if (!j_.contains(key)) {
      used_.insert(key);
      return def;
    }
    return count(key, 0);
  }

  std::uint64_t seed(const char* key, std::uint64_t def) {
    used_.insert(key);
    if (!j_.contains(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) bad(key, "a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool flag(const char* key, bool def) {
    used_.insert(key);
    if (!j_.contains(key)) return def;
    if (!j_.at(key).is_boolean()) bad(key, "a boolean");
    return j_.at(key).get<bool>();
  }

  std::string text(const char* key, const std::string& def) {
    used_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return def;
    if (!j_.at(key).is_string()) bad(key, "a string");
    return j_.at(key).get<std::string>();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) fail(ErrorKind::kConfig, ctx_ + ": unknown parameter '" + k + "'");
    }
  }

  [[noreturn]] void bad(const std::string& key, const char* what) const {
    fail(ErrorKind::kConfig, ctx_ + "." + key + ": expected " + what);
  }

  const std::string& context() const { return ctx_; }

 private:
  const ojson& j_;
  std::string ctx_;
  std::set<std::string, std::less<>> used_;
};

ojson optional_count_json(const std::optional<std::size_t>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

const char* to_name(Criterion c) { return c == Criterion::kGini ? "gini" : "entropy"; }
const char* to_name(Splitter s) { return s == Splitter::kBest ? "best" : "random"; }
const char* to_name(MaxFeatures m) {
  switch (m) {
    case MaxFeatures::kSqrt: return "sqrt";
    case MaxFeatures::kLog2: return "log2";
    default: return "all";
  }
}
const char* to_name(EvalMetric m) { return m == EvalMetric::kError ? "error" : "logloss"; }

void read_tree_fields(ParamReader& r, TreeParams& p) {
  const auto crit = r.text("criterion", to_name(p.criterion));
  if (crit == "gini") p.criterion = Criterion::kGini;
  else if (crit == "entropy") p.criterion = Criterion::kEntropy;
  else r.bad("criterion", "\"gini\" or \"entropy\"");
  p.max_depth = r.optional_count("max_depth", p.max_depth);
  const auto splitter = r.text("splitter", to_name(p.splitter));
  if (splitter == "best") p.splitter = Splitter::kBest;
  else if (splitter == "random") p.splitter = Splitter::kRandom;
  else r.bad("splitter", "\"best\" or \"random\"");
  const auto mf = r.text("max_features", to_name(p.max_features));
  if (mf == "all") p.max_features = MaxFeatures::kAll;
  else if (mf == "sqrt") p.max_features = MaxFeatures::kSqrt;
  else if (mf == "log2") p.max_features = MaxFeatures::kLog2;
  else r.bad("max_features", "\"all\", \"sqrt\", \"log2\" or null");
  p.min_samples_leaf = r.count("min_samples_leaf", p.min_samples_leaf);
}

void write_tree_fields(ojson& j, const TreeParams& p) {
  j["criterion"] = to_name(p.criterion);
  j["max_depth"] = optional_count_json(p.max_depth);
  j["splitter"] = to_name(p.splitter);
  j["max_features"] = to_name(p.max_features);
  j["min_samples_leaf"] = p.min_samples_leaf;
}

template <typename F>
auto config_errors(F&& body) {
  try {
    return body();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("malformed model document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

void require_fitted(bool fitted, std::string_view family) {
  if (!fitted) fail(ErrorKind::kContract, std::string(family) + ": model is not fitted");
}

class GnbClassifier final : public Classifier {
 public:
  explicit GnbClassifier(const ojson& params) {
    ParamReader r(params, "gnb");
    var_smoothing_ = r.number("var_smoothing", 1e-9);
    r.finish();
    if (!(var_smoothing_ > 0)) r.bad("var_smoothing", "a positive number");
  }
  std::string_view family() const override { return "gnb"; }
  void fit(const Matrix& x, std::span<const int> y, std::optional<EvalSet>) override {
    model_ = fit_gnb(x, y, var_smoothing_);
  }
  std::vector<double> predict_proba(const Matrix& x) const override {
    require_fitted(fitted(), family());
    return model_->predict_proba(x);
  }
  ojson params_json() const override { return {{"var_smoothing", var_smoothing_}}; }
  ojson state_json() const override {
    require_fitted(fitted(), family());
    ojson j;
    j["prior"] = model_->prior;
    j["mean"] = model_->mean;
    j["var"] = model_->var;
    j["epsilon_var"] = model_->epsilon_var;
    return j;
  }
  void load_state(const ojson& j) override {
    config_errors([&] {
      GnbModel m;
      m.prior = j.at("prior").get<std::array<double, 2>>();
      m.mean = j.at("mean").get<std::array<std::vector<double>, 2>>();
      m.var = j.at("var").get<std::array<std::vector<double>, 2>>();
      m.epsilon_var = j.at("epsilon_var").get<double>();
      if (m.mean[0].size() != m.mean[1].size() || m.var[0].size() != m.mean[0].size() ||
          m.var[1].size() != m.mean[0].size()) {
        fail(ErrorKind::kConfig, "gnb: inconsistent state arrays");
      }
      model_ = std::move(m);
      return 0;
    });
  }
  bool fitted() const override { return model_.has_value(); }

 private:
  double var_smoothing_ = 1e-9;
  std::optional<GnbModel> model_;
};

class LogRegClassifier final : public Classifier {
 public:
  explicit LogRegClassifier(const ojson& params) : params_(logreg_params_from_json(params)) {}
  std::string_view family() const override { return "logreg"; }
  void fit(const Matrix& x, std::span<const int> y, std::optional<EvalSet>) override {
    model_ = fit_logreg(x, y, params_);
  }
  std::vector<double> predict_proba(const Matrix& x) const override {
    require_fitted(fitted(), family());
    return model_->predict_proba(x);
  }
  ojson params_json() const override { return to_json(params_); }
  ojson state_json() const override {
    require_fitted(fitted(), family());
    return {{"weights", model_->weights},
            {"intercept", model_->intercept},
            {"converged", model_->converged},
            {"n_iter_run", model_->n_iter_run}};
  }
  void load_state(const ojson& j) override {
    config_errors([&] {
      LogRegModel m;
      m.weights = j.at("weights").get<std::vector<double>>();
      m.intercept = j.at("intercept").get<double>();
      m.converged = j.at("converged").get<bool>();
      m.n_iter_run = j.at("n_iter_run").get<std::size_t>();
      model_ = std::move(m);
      return 0;
    });
  }
  bool fitted() const override { return model_.has_value(); }
  std::vector<double> feature_importance() const override {
    require_fitted(fitted(), family());
    std::vector<double> imp;
    for (double w : model_->weights) imp.push_back(std::abs(w));
    return imp;
  }

 private:
  LogRegParams params_;
  std::optional<LogRegModel> model_;
};

class TreeClassifier final : public Classifier {
 public:
  explicit TreeClassifier(const ojson& params) : params_(tree_params_from_json(params)) {}
  std::string_view family() const override { return "dtree"; }
  void fit(const Matrix& x, std::span<const int> y, std::optional<EvalSet>) override {
    model_ = fit_tree(x, y, params_);
  }
  std::vector<double> predict_proba(const Matrix& x) const override {
    require_fitted(fitted(), family());
    return model_->predict_proba(x);
  }
  ojson params_json() const override { return to_json(params_); }
  ojson state_json() const override {
    require_fitted(fitted(), family());
    return to_json(*model_);
  }
  void load_state(const ojson& j) override { model_ = decision_tree_from_json(j); }
  bool fitted() const override { return model_.has_value(); }
  std::vector<double> feature_importance() const override {
    require_fitted(fitted(), family());
    return model_->feature_importance();
  }

 private:
  TreeParams params_;
  std::optional<DecisionTree> model_;
};

class ForestClassifier final : public Classifier {
 public:
  ForestClassifier(const ojson& params, bool extra)
      : extra_(extra), params_(forest_params_from_json(params, extra)) {}
  std::string_view family() const override { return extra_ ? "xtrees" : "rforest"; }
  void fit(const Matrix& x, std::span<const int> y, std::optional<EvalSet>) override {
    model_ = fit_forest(x, y, params_);
  }
  std::vector<double> predict_proba(const Matrix& x) const override {
    require_fitted(fitted(), family());
    return model_->predict_proba(x);
  }
  ojson params_json() const override { return to_json(params_); }
  ojson state_json() const override {
    require_fitted(fitted(), family());
    ojson trees = ojson::array();
    for (const auto& t : model_->trees()) trees.push_back(to_json(t));
    return {{"trees", trees}};
  }
  void load_state(const ojson& j) override {
    config_errors([&] {
      std::vector<DecisionTree> trees;
      for (const auto& t : j.at("trees")) trees.push_back(decision_tree_from_json(t));
      model_ = Forest(std::move(trees));
      return 0;
    });
  }
  bool fitted() const override { return model_.has_value(); }
  std::vector<double> feature_importance() const override {
    require_fitted(fitted(), family());
    return model_->feature_importance();
  }

 private:
  bool extra_;
  ForestParams params_;
  std::optional<Forest> model_;
};

class GbdtClassifier final : public Classifier {
 public:
  GbdtClassifier(const ojson& params, Growth growth)
      : growth_(growth), params_(gbdt_params_from_json(params, growth)) {}
  std::string_view family() const override {
    return growth_ == Growth::kDepthWise ? "gbdt_depthwise" : "gbdt_leafwise";
  }
  void fit(const Matrix& x, std::span<const int> y, std::optional<EvalSet> eval) override {
    auto fit = fit_gbdt(x, y, params_, eval);
    model_ = std::move(fit.model);
    history_ = std::move(fit.history);
  }
  std::vector<double> predict_proba(const Matrix& x) const override {
    require_fitted(fitted(), family());
    return model_->predict_proba(x);
  }
  ojson params_json() const override { return to_json(params_); }
  ojson state_json() const override {
    require_fitted(fitted(), family());
    ojson j = to_json(*model_);
    j["history"] = to_json(history_);
    return j;
  }
  void load_state(const ojson& j) override {
    model_ = gbdt_model_from_json(j);
    history_ = config_errors([&] { return boost_history_from_json(j.at("history")); });
  }
  bool fitted() const override { return model_.has_value(); }
  std::vector<double> feature_importance() const override {
    require_fitted(fitted(), family());
    return model_->feature_importance();
  }
  const BoostHistory* history() const override { return model_ ? &history_ : nullptr; }

 private:
  Growth growth_;
  GbdtParams params_;
  std::optional<GbdtModel> model_;
  BoostHistory history_;
};

class StackingClassifier final : public Classifier {
 public:
  explicit StackingClassifier(const ojson& params) : spec_(stacking_spec_from_json(params)) {}
  std::string_view family() const override { return "stacking"; }
  void fit(const Matrix& x, std::span<const int> y, std::optional<EvalSet>) override {
    model_ = fit_stacking(x, y, spec_);
  }
  std::vector<double> predict_proba(const Matrix& x) const override {
    require_fitted(fitted(), family());
    return model_->predict_proba(x);
  }
  ojson params_json() const override { return to_json(spec_); }
  ojson state_json() const override {
    require_fitted(fitted(), family());
    ojson bases = ojson::array();
    ojson features = ojson::array();
    for (std::size_t i = 0; i < model_->n_bases(); ++i) {
      bases.push_back(to_json(model_->base(i)));
      const auto& f = model_->base_features(i);
      features.push_back(f ? ojson(*f) : ojson(nullptr));
    }
    ojson j;
    j["bases"] = bases;
    j["features"] = features;
    j["meta"] = to_json(model_->meta());
    j["meta_history"] = to_json(model_->meta_history());
    return j;
  }
  void load_state(const ojson& j) override {
    config_errors([&] {
      std::vector<std::unique_ptr<Classifier>> bases;
      std::vector<std::optional<std::vector<std::size_t>>> features;
      for (const auto& b : j.at("bases")) bases.push_back(classifier_from_json(b));
      for (const auto& f : j.at("features")) {
        features.push_back(f.is_null() ? std::nullopt
                                       : std::optional(f.get<std::vector<std::size_t>>()));
      }
      model_ = StackingModel(std::move(bases), std::move(features), gbdt_model_from_json(j.at("meta")),
                             boost_history_from_json(j.at("meta_history")));
      return 0;
    });
  }
  bool fitted() const override { return model_.has_value(); }
  std::vector<double> feature_importance() const override {
    require_fitted(fitted(), family());
    return vulnpred::feature_importance(*model_);
  }
  const BoostHistory* history() const override { return model_ ? &model_->meta_history() : nullptr; }

 private:
  StackingSpec spec_;
  std::optional<StackingModel> model_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Params

LogRegParams logreg_params_from_json(const ojson& j) {
  LogRegParams p;
  ParamReader r(j, "logreg");
  const auto solver = r.text("solver", "saga");
  if (solver == "sag") p.solver = Solver::kSag;
  else if (solver == "saga") p.solver = Solver::kSaga;
  else r.bad("solver", "\"sag\" or \"saga\"");
  p.C = r.number("C", p.C);
  p.max_iter = r.count("max_iter", p.max_iter);
  p.tol = r.number("tol", p.tol);
  const auto penalty = r.text("penalty", "l2");
  if (penalty == "l2") p.penalty = Penalty::kL2;
  else if (penalty == "l1_l2") p.penalty = Penalty::kL1L2;
  else r.bad("penalty", "\"l2\" or \"l1_l2\"");
  p.l1_weight = r.number("l1_weight", p.l1_weight);
  p.seed = r.seed("seed", p.seed);
  r.finish();
  validate(p);
  return p;
}

ojson to_json(const LogRegParams& p) {
  return {{"solver", p.solver == Solver::kSag ? "sag" : "saga"},
          {"C", p.C},
          {"max_iter", p.max_iter},
          {"tol", p.tol},
          {"penalty", p.penalty == Penalty::kL2 ? "l2" : "l1_l2"},
          {"l1_weight", p.l1_weight},
          {"seed", p.seed}};
}

TreeParams tree_params_from_json(const ojson& j) {
  TreeParams p;
  ParamReader r(j, "dtree");
  read_tree_fields(r, p);
  p.seed = r.seed("seed", p.seed);
  r.finish();
  validate(p);
  return p;
}

ojson to_json(const TreeParams& p) {
  ojson j;
  write_tree_fields(j, p);
  j["seed"] = p.seed;
  return j;
}

ForestParams forest_params_from_json(const ojson& j, bool extra_trees) {
  ForestParams p;
  ParamReader r(j, extra_trees ? "xtrees" : "rforest");
  p.randomized_thresholds = extra_trees;
  p.tree.max_features = MaxFeatures::kSqrt;
  if (extra_trees) p.tree.splitter = Splitter::kRandom;
  p.n_estimators = r.count("n_estimators", p.n_estimators);
  p.bootstrap = r.flag("bootstrap", !extra_trees);
  read_tree_fields(r, p.tree);
  p.seed = r.seed("seed", p.seed);
  p.n_threads = r.count("n_threads", p.n_threads);
  r.finish();
  if (extra_trees && p.bootstrap) r.bad("bootstrap", "false for extra-trees");
  if (extra_trees && p.tree.splitter != Splitter::kRandom) r.bad("splitter", "\"random\" for extra-trees");
  validate(p);
  return p;
}

ojson to_json(const ForestParams& p) {
  ojson j;
  j["n_estimators"] = p.n_estimators;
  j["bootstrap"] = p.bootstrap;
  write_tree_fields(j, p.tree);
  j["seed"] = p.seed;
  j["n_threads"] = p.n_threads;
  return j;
}

GbdtParams gbdt_params_from_json(const ojson& j, Growth growth) {
  GbdtParams p;
  p.growth = growth;
  const bool leafwise = growth == Growth::kLeafWise;
  if (leafwise) {
    p.max_depth = std::nullopt;
    p.num_leaves = 31;
  }
  ParamReader r(j, leafwise ? "gbdt_leafwise" : "gbdt_depthwise");
  p.n_estimators = r.count("n_estimators", p.n_estimators);
  p.learning_rate = r.number("learning_rate", p.learning_rate);
  p.max_depth = r.optional_count("max_depth", p.max_depth);
  p.num_leaves = r.count("num_leaves", p.num_leaves);
  p.max_bin = r.count("max_bin", p.max_bin);
  p.l2_lambda = r.number("reg_lambda", p.l2_lambda);
  p.l1_alpha = r.number("reg_alpha", p.l1_alpha);
  p.min_split_gain = r.number("min_split_gain", p.min_split_gain);
  p.min_child_weight = r.number("min_child_weight", p.min_child_weight);
  p.feature_fraction = r.number("feature_fraction", p.feature_fraction);
  p.early_stopping_rounds = r.count("early_stopping_rounds", p.early_stopping_rounds);
  p.seed = r.seed("seed", p.seed);
  if (r.has("sampling")) {
    ParamReader s(r.raw("sampling"), r.context() + ".sampling");
    const auto type = s.text("type", "none");
    if (type == "none") {
      p.row_sampling = NoSampling{};
    } else if (type == "goss") {
      GossSampling g;
      g.a_top = s.number("a_top", g.a_top);
      g.b_rest = s.number("b_rest", g.b_rest);
      p.row_sampling = g;
    } else if (type == "bagging") {
      BaggingSampling b;
      b.fraction = s.number("fraction", b.fraction);
      b.freq = s.count("freq", b.freq);
      b.seed = s.seed("seed", b.seed);
      p.row_sampling = b;
    } else {
      s.bad("type", "\"none\", \"goss\" or \"bagging\"");
    }
    s.finish();
  } else {
    r.mark("sampling");
  }
  if (r.has("eval_metrics")) {
    const auto& m = r.raw("eval_metrics");
    if (!m.is_array()) r.bad("eval_metrics", "an array");
    p.eval_metrics.clear();
    for (const auto& v : m) {
      const auto name = v.is_string() ? v.get<std::string>() : std::string();
      if (name == "error") p.eval_metrics.push_back(EvalMetric::kError);
      else if (name == "logloss") p.eval_metrics.push_back(EvalMetric::kLogloss);
      else r.bad("eval_metrics", "entries \"error\" or \"logloss\"");
    }
  }
  r.finish();
  validate(p);
  return p;
}

ojson to_json(const GbdtParams& p) {
  ojson j;
  j["n_estimators"] = p.n_estimators;
  j["learning_rate"] = p.learning_rate;
  j["max_depth"] = optional_count_json(p.max_depth);
  j["num_leaves"] = p.num_leaves;
  j["max_bin"] = p.max_bin;
  j["reg_lambda"] = p.l2_lambda;
  j["reg_alpha"] = p.l1_alpha;
  j["min_split_gain"] = p.min_split_gain;
  j["min_child_weight"] = p.min_child_weight;
  j["feature_fraction"] = p.feature_fraction;
  j["early_stopping_rounds"] = p.early_stopping_rounds;
  j["seed"] = p.seed;
  j["sampling"] = std::visit(
      [](const auto& s) -> ojson {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GossSampling>) {
          return {{"type", "goss"}, {"a_top", s.a_top}, {"b_rest", s.b_rest}};
        } else if constexpr (std::is_same_v<T, BaggingSampling>) {
          return {{"type", "bagging"}, {"fraction", s.fraction}, {"freq", s.freq}, {"seed", s.seed}};
        } else {
          return {{"type", "none"}};
        }
      },
      p.row_sampling);
  ojson metrics = ojson::array();
  for (auto m : p.eval_metrics) metrics.push_back(to_name(m));
  j["eval_metrics"] = metrics;
  return j;
}

StackingSpec stacking_spec_from_json(const ojson& j) {
  StackingSpec s;
  ParamReader r(j, "stacking");
  if (!r.has("bases")) fail(ErrorKind::kConfig, "stacking.bases: required");
  const auto& bases = r.raw("bases");
  if (!bases.is_array()) r.bad("bases", "an array");
  for (std::size_t i = 0; i < bases.size(); ++i) {
    ParamReader b(bases[i], "stacking.bases[" + std::to_string(i) + "]");
    BaseLearnerSpec spec;
    spec.family = b.text("family", "");
    if (b.has("params")) spec.params = b.raw("params");
    else b.mark("params");
    if (b.has("features")) {
      const auto& f = b.raw("features");
      if (!f.is_array()) b.bad("features", "an array of column indices");
      spec.features = config_errors([&] { return f.get<std::vector<std::size_t>>(); });
    } else {
      b.mark("features");
    }
    b.finish();
    // normalizes and surfaces parameter errors at config time
    spec.params = make_classifier(spec.family, spec.params)->params_json();
    s.bases.push_back(std::move(spec));
  }
  s.meta = gbdt_params_from_json(r.has("meta") ? r.raw("meta") : ojson::object(), Growth::kDepthWise);
  s.oof_folds = r.count("oof_folds", s.oof_folds);
  s.meta_holdout = r.number("meta_holdout", s.meta_holdout);
  s.seed = r.seed("seed", s.seed);
  r.finish();
  validate(s);
  return s;
}

ojson to_json(const StackingSpec& s) {
  ojson bases = ojson::array();
  for (const auto& b : s.bases) {
    ojson bj{{"family", b.family}, {"params", b.params}};
    if (b.features) bj["features"] = *b.features;
    bases.push_back(std::move(bj));
  }
  return {{"bases", bases},
          {"meta", to_json(s.meta)},
          {"oof_folds", s.oof_folds},
          {"meta_holdout", s.meta_holdout},
          {"seed", s.seed}};
}

// ---------------------------------------------------------------------------
// Learned state

ojson to_json(const DecisionTree& tree) {
  ojson nodes = ojson::array();
  for (const auto& n : tree.nodes()) {
    ojson nj;
    nj["feature"] = n.feature;
    nj["threshold"] = n.threshold;
    nj["left"] = n.left;
    nj["right"] = n.right;
    nj["prob"] = n.prob;
    nj["n_samples"] = n.n_samples;
    nj["gain"] = n.gain;
    nj["depth"] = n.depth;
    nodes.push_back(std::move(nj));
  }
  return {{"n_features", tree.n_features()}, {"nodes", nodes}};
}

DecisionTree decision_tree_from_json(const ojson& j) {
  return config_errors([&] {
    std::vector<TreeNode> nodes;
    for (const auto& nj : j.at("nodes")) {
      TreeNode n;
      n.feature = nj.at("feature").get<int>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<int>();
      n.right = nj.at("right").get<int>();
      n.prob = nj.at("prob").get<double>();
      n.n_samples = nj.at("n_samples").get<std::size_t>();
      n.gain = nj.at("gain").get<double>();
      n.depth = nj.at("depth").get<std::size_t>();
      nodes.push_back(n);
    }
    return DecisionTree(std::move(nodes), j.at("n_features").get<std::size_t>());
  });
}

ojson to_json(const GbdtModel& model) {
  ojson trees = ojson::array();
  for (const auto& t : model.trees()) {
    ojson nodes = ojson::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value},
                       {"gain", n.gain},
                       {"cover", n.cover}});
    }
    trees.push_back({{"nodes", nodes}});
  }
  return {{"base_score", model.base_score()}, {"n_features", model.n_features()}, {"trees", trees}};
}

GbdtModel gbdt_model_from_json(const ojson& j) {
  return config_errors([&] {
    std::vector<RegTree> trees;
    for (const auto& tj : j.at("trees")) {
      RegTree t;
      for (const auto& nj : tj.at("nodes")) {
        RegNode n;
        n.feature = nj.at("feature").get<int>();
        n.threshold = nj.at("threshold").get<double>();
        n.left = nj.at("left").get<int>();
        n.right = nj.at("right").get<int>();
        n.value = nj.at("value").get<double>();
        n.gain = nj.at("gain").get<double>();
        n.cover = nj.at("cover").get<double>();
        t.nodes.push_back(n);
      }
      trees.push_back(std::move(t));
    }
    return GbdtModel(j.at("base_score").get<double>(), std::move(trees),
                     j.at("n_features").get<std::size_t>());
  });
}

ojson to_json(const BoostHistory& h) {
  ojson rounds = ojson::array();
  for (const auto& r : h.rounds) {
    ojson rj{{"train_error", r.train_error}, {"train_logloss", r.train_logloss}};
    rj["val_error"] = r.val_error ? ojson(*r.val_error) : ojson(nullptr);
    rj["val_logloss"] = r.val_logloss ? ojson(*r.val_logloss) : ojson(nullptr);
    rounds.push_back(std::move(rj));
  }
  ojson metrics = ojson::array();
  for (auto m : h.metrics) metrics.push_back(to_name(m));
  return {{"best_round", h.best_round},
          {"stopped_early", h.stopped_early},
          {"rounds_run", h.rounds.size()},
          {"metrics", metrics},
          {"rounds", rounds}};
}

BoostHistory boost_history_from_json(const ojson& j) {
  return config_errors([&] {
    BoostHistory h;
    h.best_round = j.at("best_round").get<std::size_t>();
    h.stopped_early = j.at("stopped_early").get<bool>();
    h.metrics.clear();
    for (const auto& m : j.at("metrics")) {
      h.metrics.push_back(m.get<std::string>() == "error" ? EvalMetric::kError : EvalMetric::kLogloss);
    }
    for (const auto& rj : j.at("rounds")) {
      RoundMetrics r;
      r.train_error = rj.at("train_error").get<double>();
      r.train_logloss = rj.at("train_logloss").get<double>();
      if (!rj.at("val_error").is_null()) r.val_error = rj.at("val_error").get<double>();
      if (!rj.at("val_logloss").is_null()) r.val_logloss = rj.at("val_logloss").get<double>();
      h.rounds.push_back(r);
    }
    return h;
  });
}

// ---------------------------------------------------------------------------
// Factory and envelope

const std::vector<std::string>& known_families() {
  static const std::vector<std::string> families{"gnb",     "logreg",         "dtree",         "rforest",
                                                 "xtrees",  "gbdt_depthwise", "gbdt_leafwise", "stacking"};
  return families;
}

std::unique_ptr<Classifier> make_classifier(std::string_view family, const ojson& params) {
  if (family == "gnb") return std::make_unique<GnbClassifier>(params);
  if (family == "logreg") return std::make_unique<LogRegClassifier>(params);
  if (family == "dtree") return std::make_unique<TreeClassifier>(params);
  if (family == "rforest") return std::make_unique<ForestClassifier>(params, false);
  if (family == "xtrees") return std::make_unique<ForestClassifier>(params, true);
  if (family == "gbdt_depthwise") return std::make_unique<GbdtClassifier>(params, Growth::kDepthWise);
  if (family == "gbdt_leafwise") return std::make_unique<GbdtClassifier>(params, Growth::kLeafWise);
  if (family == "stacking") return std::make_unique<StackingClassifier>(params);
  fail(ErrorKind::kConfig, "unknown model family '" + std::string(family) + "'");
}

ojson to_json(const Classifier& model) {
  return {{"family", std::string(model.family())},
          {"params", model.params_json()},
          {"model", model.state_json()}};
}

std::unique_ptr<Classifier> classifier_from_json(const ojson& j) {
  return config_errors([&] {
    auto clf = make_classifier(j.at("family").get<std::string>(), j.at("params"));
    clf->load_state(j.at("model"));
    return clf;
  });
}

std::vector<int> predict_labels(std::span<const double> proba) {
  std::vector<int> out(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] >= 0.5 ? 1 : 0;
  return out;
}

}  // namespace vulnpred
