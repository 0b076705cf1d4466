#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpred/table.hpp"

namespace vulnpred {

struct ColumnProfile {
  std::string name;
  ColumnKind kind = ColumnKind::kNumerical;
  double missing_fraction = 0.0;
  std::size_t cardinality = 0;
  /// Share of the modal non-missing value; 0 when the column is all-missing.
  double dominant_share = 0.0;
  /// Most frequent values (count desc, ties by first appearance), at most 10.
  std::vector<std::pair<std::string, std::size_t>> top_values;
};

struct ProfileReport {
  std::size_t row_count = 0;
  std::vector<ColumnProfile> columns;
  /// Keyed by class label ("0"/"1"); empty when there is no target.
  std::map<std::string, double> class_balance;
  std::map<ColumnKind, std::size_t> kind_histogram;

  const ColumnProfile& column(const std::string& name) const;
};

inline constexpr std::size_t kTopValues = 10;

ProfileReport profile(const Table& table);
ColumnProfile profile_column(const Column& column, std::size_t row_count);

/// Throws kUndefined when every cell is missing.
double dominant_share(std::span<const std::string> values, std::span<const std::uint8_t> missing);
double dominant_share(std::span<const double> values, std::span<const std::uint8_t> missing);

nlohmann::ordered_json to_json(const ProfileReport& report);

}  // namespace vulnpred
