#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "vulnpred/error.hpp"
#include "vulnpred/model.hpp"
#include "vulnpred/pipeline.hpp"
#include "vulnpred/rng.hpp"

namespace vulnpred {

using ojson = nlohmann::ordered_json;

namespace {

// Seed streams used when the document leaves a seed unspecified.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kSynthStream = 2;
constexpr std::uint64_t kModelStream = 100;
constexpr std::uint64_t kTuningStream = 200;

bool non_negative_integer(const ojson& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

class Node {
 public:
  Node(const ojson& j, std::string path, std::vector<ConfigIssue>& issues)
      : j_(j), path_(std::move(path)), issues_(issues) {}

  std::string at(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }
  const std::string& path() const { return path_; }
  bool is_object() const { return j_.is_object(); }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }
  const ojson& raw(const char* key) const { return j_.at(key); }

  void issue(const std::string& path, const std::string& message) { issues_.push_back({path, message}); }

  void allow(std::initializer_list<std::string_view> keys) {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) issue(at(k), "unknown key");
    }
  }

  void number(const char* key, double& out) {
    if (!has(key)) return;
    if (!raw(key).is_number()) return issue(at(key), "expected a number");
    out = raw(key).get<double>();
  }

  void count(const char* key, std::size_t& out) {
    if (!has(key)) return;
    if (!non_negative_integer(raw(key))) return issue(at(key), "expected a non-negative integer");
    out = raw(key).get<std::size_t>();
  }

  bool seed(const char* key, std::uint64_t& out) {
    if (!has(key)) return false;
    if (!non_negative_integer(raw(key))) {
      issue(at(key), "expected a non-negative integer");
      return false;
    }
    out = raw(key).get<std::uint64_t>();
    return true;
  }

  void flag(const char* key, bool& out) {
    if (!has(key)) return;
    if (!raw(key).is_boolean()) return issue(at(key), "expected a boolean");
    out = raw(key).get<bool>();
  }

  void text(const char* key, std::string& out) {
    if (!has(key)) return;
    if (!raw(key).is_string()) return issue(at(key), "expected a string");
    out = raw(key).get<std::string>();
  }

  void strings(const char* key, std::vector<std::string>& out) {
    if (!has(key)) return;
    const auto& v = raw(key);
    if (!v.is_array()) return issue(at(key), "expected an array of strings");
    std::vector<std::string> parsed;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) return issue(at(key) + "[" + std::to_string(i) + "]", "expected a string");
      parsed.push_back(v[i].get<std::string>());
    }
    out = std::move(parsed);
  }

  /// Child object; records an issue and returns nullopt when present but not an object.
  std::optional<Node> object(const char* key) {
    if (!has(key)) return std::nullopt;
    if (!raw(key).is_object()) {
      issue(at(key), "expected an object");
      return std::nullopt;
    }
    return Node(raw(key), at(key), issues_);
  }

  std::vector<ConfigIssue>& issues() { return issues_; }

 private:
  const ojson& j_;
  std::string path_;
  std::vector<ConfigIssue>& issues_;
};

/// Runs `f`, turning a thrown library error into an issue at `path`.
template <typename F>
bool guarded(std::vector<ConfigIssue>& issues, const std::string& path, F&& f) {
  try {
    f();
    return true;
  } catch (const Error& e) {
    issues.push_back({path, e.what()});
    return false;
  } catch (const nlohmann::json::exception& e) {
    issues.push_back({path, e.what()});
    return false;
  }
}

void ratio_open_closed(Node& n, const char* key, double v) {
  if (!(v > 0.0 && v <= 1.0)) n.issue(n.at(key), "out of range: " + format_number(v) + " not in (0, 1]");
}

bool safe_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
  });
}

void read_synthetic(Node n, SynthSpec& s, std::uint64_t master) {
  n.allow({"n_rows", "n_numeric", "categorical_cardinalities", "n_binary", "signal_weights", "intercept",
           "noise_scale", "missing_rates", "category_skew", "with_identifier", "seed"});
  n.count("n_rows", s.n_rows);
  n.count("n_numeric", s.n_numeric);
  if (n.has("categorical_cardinalities")) {
    const auto& v = n.raw("categorical_cardinalities");
    bool ok = v.is_array();
    for (const auto& e : v) ok = ok && non_negative_integer(e);
    if (ok) s.categorical_cardinalities = v.get<std::vector<std::size_t>>();
    else n.issue(n.at("categorical_cardinalities"), "expected an array of non-negative integers");
  }
  n.count("n_binary", s.n_binary);
  for (const char* key : {"signal_weights", "missing_rates"}) {
    if (auto m = n.object(key)) {
      auto& dest = std::string_view(key) == "signal_weights" ? s.signal_weights : s.missing_rates;
      dest.clear();
      for (const auto& [name, v] : n.raw(key).items()) {
        if (!v.is_number()) n.issue(m->at(name), "expected a number");
        else dest[name] = v.get<double>();
      }
    }
  }
  n.number("intercept", s.intercept);
  n.number("noise_scale", s.noise_scale);
  n.number("category_skew", s.category_skew);
  n.flag("with_identifier", s.with_identifier);
  if (!n.seed("seed", s.seed)) s.seed = derive_seed(master, kSynthStream);
  if (s.n_rows == 0) n.issue(n.at("n_rows"), "out of range: must be >= 1");
  guarded(n.issues(), n.path(), [&] { validate(s); });
}

void read_columns(Node n, PipelineConfig& cfg) {
  n.allow({"target", "kinds", "missing_markers"});
  n.text("target", cfg.target);
  if (cfg.target.empty()) n.issue(n.at("target"), "must not be empty");
  if (auto kinds = n.object("kinds")) {
    for (const auto& [name, v] : n.raw("kinds").items()) {
      const std::string path = kinds->at(name);
      if (!v.is_string()) {
        n.issue(path, "expected a column kind name");
        continue;
      }
      guarded(n.issues(), path, [&] {
        const ColumnKind k = column_kind_from_string(v.get<std::string>());
        if (k == ColumnKind::kTarget) fail(ErrorKind::kConfig, "declare the target through columns.target");
        cfg.kinds[name] = k;
      });
    }
    if (cfg.kinds.contains(cfg.target)) n.issue(kinds->at(cfg.target), "the target column cannot be re-declared");
  }
  n.strings("missing_markers", cfg.missing_markers);
}

void read_cleanse(Node n, PipelineConfig& cfg) {
  auto& c = cfg.cleanse;
  n.allow({"missing_drop_threshold", "skew_drop_threshold", "drop_rows_with_missing", "forced_drops",
           "forced_keeps", "consistency_checks"});
  n.number("missing_drop_threshold", c.missing_drop_threshold);
  n.number("skew_drop_threshold", c.skew_drop_threshold);
  n.flag("drop_rows_with_missing", c.drop_rows_with_missing);
  n.strings("forced_drops", c.forced_drops);
  n.strings("forced_keeps", c.forced_keeps);
  const std::size_t before = n.issues().size();
  ratio_open_closed(n, "missing_drop_threshold", c.missing_drop_threshold);
  ratio_open_closed(n, "skew_drop_threshold", c.skew_drop_threshold);
  for (const auto& name : c.forced_drops) {
    if (name == cfg.target) n.issue(n.at("forced_drops"), "names the target column '" + name + "'");
  }
  if (n.issues().size() == before) guarded(n.issues(), n.path(), [&] { validate(c); });

  if (n.has("consistency_checks")) {
    const auto& arr = n.raw("consistency_checks");
    if (!arr.is_array()) {
      n.issue(n.at("consistency_checks"), "expected an array");
      return;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Node e(arr[i], n.at("consistency_checks") + "[" + std::to_string(i) + "]", n.issues());
      if (!e.is_object()) {
        e.issue(e.path(), "expected an object");
        continue;
      }
      e.allow({"parent", "child"});
      ConsistencyCheck check;
      e.text("parent", check.parent);
      e.text("child", check.child);
      if (check.parent.empty()) e.issue(e.at("parent"), "required");
      if (check.child.empty()) e.issue(e.at("child"), "required");
      cfg.consistency_checks.push_back(std::move(check));
    }
  }
}

void read_encoding(Node n, PipelineConfig& cfg) {
  auto& e = cfg.encoding;
  n.allow({"onehot_max", "factorize_max", "segment_rules", "overrides"});
  n.count("onehot_max", e.onehot_max);
  n.count("factorize_max", e.factorize_max);
  if (e.onehot_max == 0) n.issue(n.at("onehot_max"), "out of range: must be >= 1");
  if (e.factorize_max < e.onehot_max) n.issue(n.at("factorize_max"), "out of range: must be >= onehot_max");
  if (n.has("segment_rules")) {
    const auto& v = n.raw("segment_rules");
    if (v.is_string()) {
      const auto name = v.get<std::string>();
      if (name == "paper-msft") {
        cfg.segment_rules = name;
        e.segment_rules = paper_msft_segment_rules();
      } else if (name == "none") {
        cfg.segment_rules = name;
      } else {
        n.issue(n.at("segment_rules"), "unknown rule set '" + name + "' (expected \"paper-msft\", \"none\" or an object)");
      }
    } else if (v.is_object()) {
      cfg.segment_rules = "custom";
      for (const auto& [col, rules] : v.items()) {
        const std::string path = n.at("segment_rules") + "." + col;
        guarded(n.issues(), path, [&] {
          auto parsed = version_rules_from_json(rules);
          validate(parsed, col);
          e.segment_rules[col] = std::move(parsed);
        });
      }
    } else {
      n.issue(n.at("segment_rules"), "expected a rule-set name or an object");
    }
  }
  if (auto o = n.object("overrides")) {
    for (const auto& [col, choice] : n.raw("overrides").items()) {
      guarded(n.issues(), o->at(col), [&] { e.overrides.insert_or_assign(col, encoder_choice_from_json(choice)); });
    }
  }
}

void read_split(Node n, PipelineConfig& cfg) {
  auto& s = cfg.split;
  n.allow({"test_fraction", "validation_fraction", "stratified", "seed"});
  n.number("test_fraction", s.test_fraction);
  n.number("validation_fraction", s.validation_fraction);
  n.flag("stratified", s.stratified);
  if (!n.seed("seed", s.seed)) s.seed = derive_seed(cfg.seed, kSplitStream);
  const std::size_t before = n.issues().size();
  if (!(s.test_fraction > 0.0 && s.test_fraction < 1.0)) {
    n.issue(n.at("test_fraction"), "out of range: " + format_number(s.test_fraction) + " not in (0, 1)");
  }
  if (!(s.validation_fraction >= 0.0 && s.validation_fraction < 1.0)) {
    n.issue(n.at("validation_fraction"),
            "out of range: " + format_number(s.validation_fraction) + " not in [0, 1)");
  }
  if (n.issues().size() == before && !(s.test_fraction + s.validation_fraction < 1.0)) {
    n.issue(n.path(), "test_fraction + validation_fraction must be < 1");
  }
}

bool family_takes_seed(const std::string& family) { return family != "gnb"; }

void read_models(Node root, PipelineConfig& cfg) {
  if (!root.has("models")) {
    root.issue("models", "at least one required");
    return;
  }
  const auto& arr = root.raw("models");
  if (!arr.is_array()) {
    root.issue("models", "expected an array");
    return;
  }
  if (arr.empty()) {
    root.issue("models", "at least one required");
    return;
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "models[" + std::to_string(i) + "]";
    Node n(arr[i], path, root.issues());
    if (!n.is_object()) {
      n.issue(path, "expected an object");
      continue;
    }
    n.allow({"name", "family", "params"});
    ModelEntry m;
    n.text("family", m.family);
    if (m.family.empty()) {
      n.issue(n.at("family"), "required");
      continue;
    }
    const auto& families = known_families();
    if (std::find(families.begin(), families.end(), m.family) == families.end()) {
      n.issue(n.at("family"), "unknown model family '" + m.family + "'");
      continue;
    }
    m.name = m.family;
    n.text("name", m.name);
    if (!safe_name(m.name)) n.issue(n.at("name"), "must be non-empty and use only [A-Za-z0-9_.-]");
    if (!names.insert(m.name).second) n.issue(n.at("name"), "duplicate model name '" + m.name + "'");
    ojson params = ojson::object();
    if (n.has("params")) {
      params = n.raw("params");
      if (!params.is_object()) {
        n.issue(n.at("params"), "expected an object");
        continue;
      }
    }
    if (family_takes_seed(m.family) && !params.contains("seed")) {
      params["seed"] = derive_seed(cfg.seed, kModelStream + i);
    }
    const bool ok = guarded(root.issues(), n.at("params"),
                            [&] { m.params = make_classifier(m.family, params)->params_json(); });
    if (!ok) continue;
    if ((m.family == "gbdt_depthwise" || m.family == "gbdt_leafwise") &&
        m.params.value("early_stopping_rounds", std::size_t{0}) > 0 && cfg.split.validation_fraction == 0.0) {
      n.issue(n.at("params") + ".early_stopping_rounds", "early stopping needs split.validation_fraction > 0");
    }
    cfg.models.push_back(std::move(m));
  }
}

void read_tuning(Node root, PipelineConfig& cfg) {
  if (!root.has("tuning")) return;
  const auto& arr = root.raw("tuning");
  if (!arr.is_array()) {
    root.issue("tuning", "expected an array");
    return;
  }
  std::set<std::string> tuned;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "tuning[" + std::to_string(i) + "]";
    Node n(arr[i], path, root.issues());
    if (!n.is_object()) {
      n.issue(path, "expected an object");
      continue;
    }
    n.allow({"model", "k", "scoring", "stratified", "seed", "grid"});
    TuningEntry t;
    n.text("model", t.model);
    n.count("k", t.k);
    if (t.k < 2) n.issue(n.at("k"), "out of range: must be >= 2");
    if (n.has("scoring")) {
      std::string s;
      n.text("scoring", s);
      guarded(root.issues(), n.at("scoring"), [&] { t.scoring = scoring_from_string(s); });
    }
    n.flag("stratified", t.stratified);
    if (!n.seed("seed", t.seed)) t.seed = derive_seed(cfg.seed, kTuningStream + i);

    auto model = std::find_if(cfg.models.begin(), cfg.models.end(),
                              [&](const ModelEntry& m) { return m.name == t.model; });
    if (t.model.empty()) {
      n.issue(n.at("model"), "required");
    } else if (model == cfg.models.end()) {
      n.issue(n.at("model"), "no model named '" + t.model + "'");
    } else if (!tuned.insert(t.model).second) {
      n.issue(n.at("model"), "model '" + t.model + "' is tuned twice");
    }

    auto grid = n.object("grid");
    if (!grid) {
      if (!n.has("grid")) n.issue(n.at("grid"), "required");
      continue;
    }
    for (const auto& [name, values] : n.raw("grid").items()) {
      if (!values.is_array() || values.empty()) {
        n.issue(grid->at(name), "expected a non-empty array of candidate values");
        continue;
      }
      t.grid.emplace_back(name, std::vector<ojson>(values.begin(), values.end()));
    }
    if (t.grid.empty()) n.issue(n.at("grid"), "at least one parameter required");
    if (model != cfg.models.end() && !t.grid.empty()) {
      GridSpec spec;
      spec.family = model->family;
      spec.base_params = model->params;
      spec.grid = t.grid;
      guarded(root.issues(), n.at("grid"), [&] {
        for (const auto& combo : expand_grid(spec)) make_classifier(spec.family, combo);
      });
    }
    cfg.tuning.push_back(std::move(t));
  }
}

}  // namespace

ConfigValidation validate_config(const ojson& doc) {
  ConfigValidation out;
  auto& issues = out.errors;
  if (!doc.is_object()) {
    issues.push_back({"(root)", "config must be an object"});
    return out;
  }
  PipelineConfig cfg;
  Node root(doc, "", issues);
  root.allow({"input", "synthetic", "columns", "cleanse", "encoding", "split", "models", "tuning", "output_dir",
              "seed", "report"});
  root.seed("seed", cfg.seed);
  root.text("input", cfg.input);
  if (auto n = root.object("synthetic")) {
    cfg.synthetic.emplace();
    read_synthetic(*n, *cfg.synthetic, cfg.seed);
  }
  if (cfg.input.empty() && !cfg.synthetic) root.issue("input", "required unless synthetic is given");
  if (!cfg.input.empty() && cfg.synthetic) root.issue("input", "input and synthetic are mutually exclusive");

  if (auto n = root.object("columns")) read_columns(*n, cfg);
  if (cfg.synthetic && cfg.target != kSynthTargetName) {
    root.issue("columns.target", "synthetic data always uses '" + std::string(kSynthTargetName) + "'");
  }
  if (auto n = root.object("cleanse")) read_cleanse(*n, cfg);
  if (auto n = root.object("encoding")) read_encoding(*n, cfg);
  {
    static const ojson kEmpty = ojson::object();
    auto n = root.object("split");
    read_split(n ? *n : Node(kEmpty, "split", issues), cfg);
  }
  read_models(root, cfg);
  read_tuning(root, cfg);
  root.text("output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) root.issue("output_dir", "must not be empty");
  if (auto n = root.object("report")) {
    n->allow({"timings", "top_features"});
    n->flag("timings", cfg.timings);
    n->count("top_features", cfg.top_features);
  }
  if (issues.empty()) out.config = std::move(cfg);
  return out;
}

std::string format_issues(const std::vector<ConfigIssue>& issues) {
  std::string out;
  for (const auto& i : issues) out += i.path + ": " + i.message + "\n";
  return out;
}

PipelineConfig load_config(const ojson& doc) {
  auto v = validate_config(doc);
  if (!v.config) {
    fail(ErrorKind::kConfig, std::to_string(v.errors.size()) + " config error(s):\n" + format_issues(v.errors));
  }
  return std::move(*v.config);
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kConfig, "cannot read config " + path.string());
  std::stringstream buf;
  buf << f.rdbuf();
  ojson doc;
  try {
    doc = ojson::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
  return load_config(doc);
}

ojson to_json(const PipelineConfig& cfg) {
  ojson j;
  j["seed"] = cfg.seed;
  if (cfg.synthetic) {
    const auto& s = *cfg.synthetic;
    ojson sj;
    sj["n_rows"] = s.n_rows;
    sj["n_numeric"] = s.n_numeric;
    sj["categorical_cardinalities"] = s.categorical_cardinalities;
    sj["n_binary"] = s.n_binary;
    sj["signal_weights"] = ojson::object();
    for (const auto& [k, v] : s.signal_weights) sj["signal_weights"][k] = v;
    sj["intercept"] = s.intercept;
    sj["noise_scale"] = s.noise_scale;
    sj["missing_rates"] = ojson::object();
    for (const auto& [k, v] : s.missing_rates) sj["missing_rates"][k] = v;
    sj["category_skew"] = s.category_skew;
    sj["with_identifier"] = s.with_identifier;
    sj["seed"] = s.seed;
    j["synthetic"] = std::move(sj);
  } else {
    j["input"] = cfg.input;
  }

  ojson kinds = ojson::object();
  for (const auto& [k, v] : cfg.kinds) kinds[k] = std::string(to_string(v));
  j["columns"] = {{"target", cfg.target}, {"kinds", kinds}, {"missing_markers", cfg.missing_markers}};

  ojson checks = ojson::array();
  for (const auto& c : cfg.consistency_checks) checks.push_back({{"parent", c.parent}, {"child", c.child}});
  j["cleanse"] = {{"missing_drop_threshold", cfg.cleanse.missing_drop_threshold},
                  {"skew_drop_threshold", cfg.cleanse.skew_drop_threshold},
                  {"drop_rows_with_missing", cfg.cleanse.drop_rows_with_missing},
                  {"forced_drops", cfg.cleanse.forced_drops},
                  {"forced_keeps", cfg.cleanse.forced_keeps},
                  {"consistency_checks", checks}};

  ojson enc;
  enc["onehot_max"] = cfg.encoding.onehot_max;
  enc["factorize_max"] = cfg.encoding.factorize_max;
  if (cfg.segment_rules == "custom") {
    ojson rules = ojson::object();
    for (const auto& [col, r] : cfg.encoding.segment_rules) rules[col] = to_json(r);
    enc["segment_rules"] = std::move(rules);
  } else {
    enc["segment_rules"] = cfg.segment_rules;
  }
  ojson overrides = ojson::object();
  for (const auto& [col, choice] : cfg.encoding.overrides) overrides[col] = to_json(choice);
  enc["overrides"] = std::move(overrides);
  j["encoding"] = std::move(enc);

  j["split"] = {{"test_fraction", cfg.split.test_fraction},
                {"validation_fraction", cfg.split.validation_fraction},
                {"stratified", cfg.split.stratified},
                {"seed", cfg.split.seed}};

  ojson models = ojson::array();
  for (const auto& m : cfg.models) models.push_back({{"name", m.name}, {"family", m.family}, {"params", m.params}});
  j["models"] = std::move(models);

  ojson tuning = ojson::array();
  for (const auto& t : cfg.tuning) {
    ojson grid = ojson::object();
    for (const auto& [name, values] : t.grid) grid[name] = values;
    tuning.push_back({{"model", t.model},
                      {"k", t.k},
                      {"scoring", std::string(to_string(t.scoring))},
                      {"stratified", t.stratified},
                      {"seed", t.seed},
                      {"grid", std::move(grid)}});
  }
  j["tuning"] = std::move(tuning);
  j["output_dir"] = cfg.output_dir;
  j["report"] = {{"timings", cfg.timings}, {"top_features", cfg.top_features}};
  return j;
}

ojson paper_msft_preset() {
  ojson j;
  j["input"] = "train.csv";
  j["seed"] = 42;

  ojson kinds = ojson::object();
  kinds["MachineIdentifier"] = "Identifier";
  for (const char* v : {"AvSigVersion", "EngineVersion", "AppVersion", "OsBuildLab", "Census_OSVersion"}) {
    kinds[v] = "VersionString";
  }
  // numeric codes that name things rather than measure them
  for (const char* c :
       {"AVProductStatesIdentifier", "CountryIdentifier", "CityIdentifier", "OrganizationIdentifier",
        "GeoNameIdentifier", "LocaleEnglishNameIdentifier", "IeVerIdentifier", "DefaultBrowsersIdentifier",
        "Census_OEMNameIdentifier", "Census_OEMModelIdentifier", "Census_ProcessorManufacturerIdentifier",
        "Census_ProcessorModelIdentifier", "Census_OSInstallLanguageIdentifier", "Census_OSUILocaleIdentifier",
        "Census_FirmwareManufacturerIdentifier", "Census_FirmwareVersionIdentifier", "Wdft_RegionIdentifier",
        "OsBuild", "OsSuite", "Census_OSBuildNumber", "Census_OSBuildRevision"}) {
    kinds[c] = "Categorical";
  }
  j["columns"] = {{"target", "HasDetections"}, {"kinds", kinds}, {"missing_markers", {"", "NA"}}};

  j["cleanse"] = {{"missing_drop_threshold", 0.9},
                  {"skew_drop_threshold", 0.9},
                  {"drop_rows_with_missing", true},
                  {"forced_drops", {"CityIdentifier"}},
                  {"consistency_checks", {{{"parent", "CountryIdentifier"}, {"child", "CityIdentifier"}}}}};

  j["encoding"] = {{"onehot_max", 5},
                   {"factorize_max", 20},
                   {"segment_rules", "paper-msft"},
                   {"overrides", {{"Census_OSVersion", {{"type", "drop"}}}}}};

  // 0.7 / 0.3 train-test, then 0.8 / 0.2 of train held out for early stopping
  j["split"] = {{"test_fraction", 0.3}, {"validation_fraction", 0.14}, {"stratified", true}};

  const ojson dtree = {{"criterion", "entropy"}, {"max_depth", 12}, {"splitter", "random"}, {"max_features", "all"}};
  const ojson logreg = {{"solver", "saga"}, {"C", 1.0}, {"max_iter", 500}};
  ojson rforest = dtree;
  rforest["n_estimators"] = 100;
  ojson xtrees = {{"n_estimators", 100}, {"criterion", "entropy"}, {"max_depth", 12}, {"max_features", "all"}};
  const ojson xgboost = {{"n_estimators", 1000},
                         {"learning_rate", 0.1},
                         {"max_depth", 6},
                         {"reg_lambda", 0.15},
                         {"reg_alpha", 0.15},
                         {"min_split_gain", 1.0},
                         {"sampling", {{"type", "goss"}, {"a_top", 0.2}, {"b_rest", 0.1}}},
                         {"max_bin", 1024},
                         {"early_stopping_rounds", 50},
                         {"eval_metrics", {"error", "logloss"}}};
  const ojson lightgbm = {{"n_estimators", 1000},
                          {"learning_rate", 0.05},
                          {"max_depth", 10},
                          {"feature_fraction", 0.9},
                          {"reg_alpha", 0.15},
                          {"reg_lambda", 0.15},
                          {"num_leaves", 2048},
                          {"sampling", {{"type", "bagging"}, {"fraction", 0.8}, {"freq", 8}, {"seed", 15}}},
                          {"early_stopping_rounds", 50},
                          {"eval_metrics", {"error", "logloss"}}};
  const ojson stacking = {{"bases",
                           {{{"family", "dtree"}, {"params", dtree}},
                            {{"family", "logreg"}, {"params", logreg}},
                            {{"family", "gnb"}},
                            {{"family", "xtrees"}, {"params", xtrees}},
                            {{"family", "rforest"}, {"params", rforest}}}},
                          {"meta", xgboost}};

  j["models"] = {{{"name", "gnb"}, {"family", "gnb"}},
                 {{"name", "logreg"}, {"family", "logreg"}, {"params", logreg}},
                 {{"name", "dtree"}, {"family", "dtree"}, {"params", dtree}},
                 {{"name", "rforest"}, {"family", "rforest"}, {"params", rforest}},
                 {{"name", "stacking"}, {"family", "stacking"}, {"params", stacking}},
                 {{"name", "xgboost"}, {"family", "gbdt_depthwise"}, {"params", xgboost}},
                 {{"name", "lightgbm"}, {"family", "gbdt_leafwise"}, {"params", lightgbm}}};
  j["tuning"] = ojson::array();
  j["output_dir"] = "paper_msft_out";
  j["report"] = {{"timings", false}, {"top_features", 20}};
  return j;
}

}  // namespace vulnpred
