#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpred/matrix.hpp"
#include "vulnpred/table.hpp"

namespace vulnpred {

// ---------------------------------------------------------------------------
// Version-string segment rules

struct SegmentIgnore {
  friend bool operator==(const SegmentIgnore&, const SegmentIgnore&) = default;
};
/// Keep the k most frequent segment values, merge the rest into "other", one-hot.
struct SegmentOneHotTopK {
  std::size_t k = 1;
  friend bool operator==(const SegmentOneHotTopK&, const SegmentOneHotTopK&) = default;
};
/// Keep the k most frequent segment values, merge the rest into "other", factorize.
struct SegmentFactorizeTopK {
  std::size_t k = 1;
  friend bool operator==(const SegmentFactorizeTopK&, const SegmentFactorizeTopK&) = default;
};
struct SegmentFrequency {
  friend bool operator==(const SegmentFrequency&, const SegmentFrequency&) = default;
};
/// Segment duplicates another column; emits nothing.
struct SegmentAlias {
  std::string column;
  friend bool operator==(const SegmentAlias&, const SegmentAlias&) = default;
};

using SegmentAction =
    std::variant<SegmentIgnore, SegmentOneHotTopK, SegmentFactorizeTopK, SegmentFrequency, SegmentAlias>;

struct SegmentRule {
  std::size_t segment_index = 0;
  SegmentAction action;
  friend bool operator==(const SegmentRule&, const SegmentRule&) = default;
};

struct VersionRuleSet {
  std::size_t expected_segments = 4;
  std::vector<SegmentRule> rules;
  friend bool operator==(const VersionRuleSet&, const VersionRuleSet&) = default;
};

void validate(const VersionRuleSet& rules, const std::string& column);

/// Built-in rule set for the five version columns of the Windows Defender
/// telemetry export (AvSigVersion, EngineVersion, AppVersion, OsBuildLab).
/// Census_OSVersion is dropped outright and therefore has no entry here.
std::map<std::string, VersionRuleSet> paper_msft_segment_rules();

/// Splits on '.'; nullopt when the segment count differs from `expected_segments`.
std::optional<std::vector<std::string>> parse_version(std::string_view text,
                                                      std::size_t expected_segments);

// ---------------------------------------------------------------------------
// Encoder choices (what to do per column)

namespace encoder {
struct PassThroughBinary {
  friend bool operator==(const PassThroughBinary&, const PassThroughBinary&) = default;
};
struct MinMax {
  friend bool operator==(const MinMax&, const MinMax&) = default;
};
struct OneHot {
  std::size_t max_categories = 5;
  std::optional<std::size_t> merge_top_k;
  friend bool operator==(const OneHot&, const OneHot&) = default;
};
struct Factorize {
  std::optional<std::size_t> merge_top_k;
  friend bool operator==(const Factorize&, const Factorize&) = default;
};
struct FrequencyThenMinMax {
  friend bool operator==(const FrequencyThenMinMax&, const FrequencyThenMinMax&) = default;
};
struct VersionSegments {
  VersionRuleSet rules;
  friend bool operator==(const VersionSegments&, const VersionSegments&) = default;
};
struct Drop {
  friend bool operator==(const Drop&, const Drop&) = default;
};
}  // namespace encoder

using EncoderChoice =
    std::variant<encoder::PassThroughBinary, encoder::MinMax, encoder::OneHot, encoder::Factorize,
                 encoder::FrequencyThenMinMax, encoder::VersionSegments, encoder::Drop>;

struct ColumnEncoder {
  std::string column;
  EncoderChoice choice;
  friend bool operator==(const ColumnEncoder&, const ColumnEncoder&) = default;
};

using EncoderSpec = std::vector<ColumnEncoder>;

struct EncodingConfig {
  /// Categorical columns with cardinality below this are one-hot encoded.
  std::size_t onehot_max = 5;
  /// Cardinality in [onehot_max, factorize_max] is factorized; above is frequency-encoded.
  std::size_t factorize_max = 20;
  std::map<std::string, VersionRuleSet> segment_rules;
  std::map<std::string, EncoderChoice> overrides;
};

/// One entry per non-Identifier, non-Target column, in table order.
EncoderSpec plan_encoding(const Table& table, const EncodingConfig& cfg);

std::string_view encoder_name(const EncoderChoice& choice);

// ---------------------------------------------------------------------------
// Fitted state

struct FittedMinMax {
  double min = 0.0;
  double max = 0.0;
  double apply(double x) const;
  friend bool operator==(const FittedMinMax&, const FittedMinMax&) = default;
};

struct FittedOneHot {
  std::vector<std::string> categories;  // column order
  bool has_other = false;
  std::size_t width() const { return categories.size() + (has_other ? 1 : 0); }
  friend bool operator==(const FittedOneHot&, const FittedOneHot&) = default;
};

struct FittedFactorize {
  std::vector<std::string> categories;  // index == code
  bool has_other = false;
  double apply(std::string_view value) const;
  friend bool operator==(const FittedFactorize&, const FittedFactorize&) = default;
};

struct FittedFrequency {
  std::map<std::string, double, std::less<>> frequency;
  FittedMinMax scale;
  double apply(std::string_view value) const;
  friend bool operator==(const FittedFrequency&, const FittedFrequency&) = default;
};

struct FittedPassThrough {
  friend bool operator==(const FittedPassThrough&, const FittedPassThrough&) = default;
};
struct FittedDrop {
  friend bool operator==(const FittedDrop&, const FittedDrop&) = default;
};

struct FittedSegment {
  std::size_t segment_index = 0;
  std::variant<SegmentIgnore, FittedOneHot, FittedFactorize, FittedFrequency, SegmentAlias> encoder;
  friend bool operator==(const FittedSegment&, const FittedSegment&) = default;
};

struct FittedVersion {
  std::size_t expected_segments = 4;
  std::vector<FittedSegment> segments;
  std::size_t malformed_rows = 0;  // seen at fit time
  friend bool operator==(const FittedVersion&, const FittedVersion&) = default;
};

using FittedState = std::variant<FittedPassThrough, FittedMinMax, FittedOneHot, FittedFactorize,
                                 FittedFrequency, FittedVersion, FittedDrop>;

struct FittedColumn {
  std::string column;
  FittedState state;
  friend bool operator==(const FittedColumn&, const FittedColumn&) = default;
};

struct FittedEncoders {
  std::vector<FittedColumn> columns;
  std::string target;  // empty when the training table had none
  friend bool operator==(const FittedEncoders&, const FittedEncoders&) = default;
};

struct EncodedMatrix {
  Matrix x;
  std::vector<std::string> feature_names;
  std::vector<std::string> provenance;  // source column per feature
  std::vector<int> labels;              // empty when no target
};

// Per-encoder building blocks. "fit" sees training values only.

struct MinMaxResult {
  std::vector<double> scaled;
  FittedMinMax fitted;
};
MinMaxResult minmax_fit_apply(std::span<const double> values);

struct FrequencyResult {
  std::vector<double> scaled;
  FittedFrequency fitted;
};
FittedFrequency frequency_fit(std::span<const std::string> values);
FrequencyResult frequency_fit_apply(std::span<const std::string> values);

struct OneHotResult {
  Matrix indicators;  // rows x width
  FittedOneHot fitted;
};
FittedOneHot onehot_fit(std::span<const std::string> values, std::optional<std::size_t> merge_top_k);
OneHotResult onehot_fit_apply(std::span<const std::string> values,
                              std::optional<std::size_t> merge_top_k = std::nullopt);
/// Writes fitted.width() indicators into `out`; unseen values go to "other" (or all zeros).
void onehot_apply(const FittedOneHot& fitted, std::string_view value, std::span<double> out);

struct FactorizeResult {
  std::vector<double> scaled;
  FittedFactorize fitted;
};
FittedFactorize factorize_fit(std::span<const std::string> values,
                              std::optional<std::size_t> merge_top_k);
FactorizeResult factorize_fit_apply(std::span<const std::string> values,
                                    std::optional<std::size_t> merge_top_k = std::nullopt);

/// Categories ordered by descending count, ties lexicographic.
std::vector<std::pair<std::string, std::size_t>> ranked_categories(std::span<const std::string> values);

FittedEncoders fit_encoders(const Table& train, const EncoderSpec& spec);

/// Number of output features each fitted column produces.
std::size_t feature_width(const FittedState& state);

EncodedMatrix transform(const Table& table, const FittedEncoders& fitted);

nlohmann::ordered_json to_json(const FittedEncoders& fitted);
FittedEncoders fitted_encoders_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const EncoderChoice& choice);
EncoderChoice encoder_choice_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const VersionRuleSet& rules);
VersionRuleSet version_rules_from_json(const nlohmann::ordered_json& j);

/// Header + one row per sample; label column last when present.
std::string format_encoded_csv(const EncodedMatrix& m);

}  // namespace vulnpred
