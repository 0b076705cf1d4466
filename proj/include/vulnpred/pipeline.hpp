#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpred/cleanse.hpp"
#include "vulnpred/encode.hpp"
#include "vulnpred/eval.hpp"
#include "vulnpred/models_boost.hpp"
#include "vulnpred/profile.hpp"
#include "vulnpred/table.hpp"
#include "vulnpred/tune.hpp"

namespace vulnpred {

struct ModelEntry {
  std::string name;
  std::string family;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
};

struct TuningEntry {
  std::string model;  // ModelEntry::name
  std::size_t k = 5;
  Scoring scoring = Scoring::kAccuracy;
  bool stratified = true;
  std::uint64_t seed = 0;
  /// Ordered: the last parameter varies fastest.
  std::vector<std::pair<std::string, std::vector<nlohmann::ordered_json>>> grid;
};

struct ConsistencyCheck {
  std::string parent;
  std::string child;
};

struct PipelineConfig {
  std::string input;                   // CSV path; empty when `synthetic` is set
  std::optional<SynthSpec> synthetic;
  std::string target = "HasDetections";
  std::map<std::string, ColumnKind> kinds;
  std::vector<std::string> missing_markers{"", "NA"};
  CleanseConfig cleanse;
  std::vector<ConsistencyCheck> consistency_checks;
  EncodingConfig encoding;
  std::string segment_rules = "none";  // "none" | "paper-msft" | "custom"
  SplitSpec split;
  std::vector<ModelEntry> models;
  std::vector<TuningEntry> tuning;
  std::string output_dir = "vulnpred_out";
  std::uint64_t seed = 42;
  bool timings = false;
  std::size_t top_features = 20;
};

struct ConfigIssue {
  std::string path;
  std::string message;
};

struct ConfigValidation {
  std::optional<PipelineConfig> config;  // set iff errors is empty
  std::vector<ConfigIssue> errors;
};

/// Parses and normalizes a config document, collecting every violation.
/// Missing seeds (split, synthetic, per-model, per-tuning) are derived from the
/// master seed, so the normalized form is fully explicit.
ConfigValidation validate_config(const nlohmann::ordered_json& doc);

/// validate_config, throwing a config error listing every issue.
PipelineConfig load_config(const nlohmann::ordered_json& doc);
PipelineConfig load_config_file(const std::filesystem::path& path);

/// Normalized form; validate_config(to_json(cfg)) reproduces cfg.
nlohmann::ordered_json to_json(const PipelineConfig& cfg);

/// Built-in configuration for the Windows Defender telemetry export.
nlohmann::ordered_json paper_msft_preset();

std::string format_issues(const std::vector<ConfigIssue>& issues);

// ---------------------------------------------------------------------------
// Running

enum class Stage { kIngest, kProfile, kCleanse, kEncode, kTune, kTrain, kEvaluate, kReport };
std::string_view to_string(Stage stage);

struct ModelResult {
  std::string name;
  std::string family;
  ClassificationReport report;
  ConfusionMatrix confusion;
  std::optional<ErrorRates> error_rates;
  RocCurve roc;
  std::optional<BoostHistory> history;
  std::vector<std::pair<std::string, double>> top_features;
  std::optional<CvResult> cv;
  nlohmann::ordered_json params;  // as fitted, after tuning
};

struct RunReport {
  std::vector<ModelResult> models;
  std::size_t rows_ingested = 0;
  std::size_t rows_missing_target = 0;
  std::size_t rows_train = 0;
  std::size_t rows_validation = 0;
  std::size_t rows_test = 0;
  std::vector<std::string> feature_names;
  std::vector<std::pair<std::string, double>> timings;  // seconds; only when enabled
  nlohmann::ordered_json config;
  std::vector<std::string> artifacts;  // relative to output_dir, in write order

  const ModelResult& model(const std::string& name) const;
};

nlohmann::ordered_json to_json(const RunReport& report);

/// Every stage in order; artifacts land in cfg.output_dir. A stage failure
/// writes FAILED into the output directory and rethrows with the stage name.
RunReport run(const PipelineConfig& cfg);

/// Rows split, profiled on train, cleansed and encoded; shared by the stages.
struct PreparedData {
  Table table;  // ingested, rows with a missing target removed
  std::size_t rows_missing_target = 0;
  SplitIndices indices;
  ProfileReport train_profile;
  CleansePlan plan;
  std::vector<std::pair<ConsistencyCheck, ConsistencyReport>> consistency;
  FittedEncoders encoders;
  EncodedMatrix train;
  EncodedMatrix validation;
  EncodedMatrix test;
};

/// Reads the CSV (or generates the synthetic table) and removes rows whose
/// target is missing; their count goes to `missing_target` when given.
Table ingest(const PipelineConfig& cfg, std::size_t* missing_target = nullptr);
PreparedData prepare(const PipelineConfig& cfg);

// Standalone subcommands. Each writes its artifacts into cfg.output_dir and
// returns their relative paths.
std::vector<std::string> run_profile(const PipelineConfig& cfg);
std::vector<std::string> run_cleanse(const PipelineConfig& cfg);
std::vector<std::string> run_encode(const PipelineConfig& cfg);
/// Fits the roster and saves <model>/model.json plus the preprocessing artifacts.
std::vector<std::string> run_train(const PipelineConfig& cfg);
/// Scores the test partition with the artifacts run_train left in output_dir.
RunReport run_evaluate(const PipelineConfig& cfg);

}  // namespace vulnpred
