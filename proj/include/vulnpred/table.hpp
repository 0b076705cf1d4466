#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace vulnpred {

enum class ColumnKind { kBinary, kCategorical, kNumerical, kVersionString, kIdentifier, kTarget };

std::string_view to_string(ColumnKind kind);
ColumnKind column_kind_from_string(std::string_view name);

/// Binary, Numerical and Target columns hold doubles; the rest hold text.
bool holds_numbers(ColumnKind kind);

using NumericValues = std::vector<double>;
using TextValues = std::vector<std::string>;

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumerical;
  std::variant<NumericValues, TextValues> values;
  std::vector<std::uint8_t> missing;  // 1 = missing; value slot holds 0 / ""

  std::size_t size() const { return missing.size(); }
  bool is_missing(std::size_t row) const { return missing[row] != 0; }

  const NumericValues& numbers() const { return std::get<NumericValues>(values); }
  const TextValues& texts() const { return std::get<TextValues>(values); }

  /// Cell rendered as text ("NA" when missing); numbers use shortest round-trip form.
  std::string cell_text(std::size_t row) const;

  static Column numeric(std::string name, ColumnKind kind, NumericValues values,
                        std::vector<std::uint8_t> missing = {});
  static Column text(std::string name, ColumnKind kind, TextValues values,
                     std::vector<std::uint8_t> missing = {});

  friend bool operator==(const Column&, const Column&) = default;
};

/// Immutable column-major table. Construction validates shape invariants.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<Column> columns);

  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t column_count() const noexcept { return columns_.size(); }
  const std::vector<Column>& columns() const noexcept { return columns_; }
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> find(std::string_view name) const;
  std::optional<std::size_t> target_index() const;

  /// Target as 0/1 ints; throws if there is no target or it has missing cells.
  std::vector<int> labels() const;

  Table select_rows(std::span<const std::size_t> rows) const;
  Table drop_columns(std::span<const std::string> names) const;

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::vector<Column> columns_;
  std::size_t row_count_ = 0;
};

struct CsvOptions {
  std::vector<std::string> missing_markers{"", "NA"};
};

/// Parses an RFC 4180 CSV file. Undeclared columns get inferred kinds.
Table read_csv(const std::filesystem::path& path,
               const std::map<std::string, ColumnKind>& declared_kinds = {},
               const CsvOptions& options = {});
Table parse_csv(std::string_view text, const std::map<std::string, ColumnKind>& declared_kinds = {},
                const CsvOptions& options = {});

/// Missing cells are written as "NA".
void write_csv(const Table& table, const std::filesystem::path& path);
std::string format_csv(const Table& table);

/// Quotes a field when it contains a separator, quote or line break.
std::string csv_escape(std::string_view field);

std::string format_number(double value);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double test_fraction = 0.3;
  double validation_fraction = 0.0;
  std::uint64_t seed = 42;
  bool stratified = true;
};

void validate(const SplitSpec& spec);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct TableSplit {
  Table train;
  Table validation;
  Table test;
  SplitIndices indices;
};

/// Deterministic partition of row indices; each part is sorted ascending.
/// `labels` drives stratification when `spec.stratified` is set.
SplitIndices split_indices(std::size_t n, std::span<const int> labels, const SplitSpec& spec);
TableSplit split(const Table& table, const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Synthetic data

struct SynthSpec {
  std::size_t n_rows = 1000;
  std::size_t n_numeric = 4;
  std::vector<std::size_t> categorical_cardinalities{3, 12, 40};
  std::size_t n_binary = 2;
  /// True log-odds weight per column name (num_i, cat_i, bin_i).
  std::map<std::string, double> signal_weights;
  double intercept = 0.0;
  double noise_scale = 0.0;
  std::map<std::string, double> missing_rates;
  /// Zipf exponent for category popularity; 0 = uniform.
  double category_skew = 0.8;
  bool with_identifier = true;
  std::uint64_t seed = 7;
};

void validate(const SynthSpec& spec);

struct SynthData {
  Table table;
  /// Accuracy of sign(w·x) against the drawn labels (noise-free true scorer).
  double bayes_accuracy = 0.0;
  std::vector<double> true_logit;
};

inline constexpr std::string_view kSynthTargetName = "HasDetections";
inline constexpr std::string_view kSynthIdName = "MachineIdentifier";

/// Numeric features ~ N(0,1); binary ~ Bernoulli(0.5) entering as (x - 0.5);
/// each categorical column contributes a per-category latent effect ~ N(0,1).
/// Target ~ Bernoulli(sigmoid(intercept + sum w_j x_j + noise_scale * N(0,1))).
SynthData synth_generate(const SynthSpec& spec);

}  // namespace vulnpred
