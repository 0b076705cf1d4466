#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpred/profile.hpp"
#include "vulnpred/table.hpp"

namespace vulnpred {

struct CleanseConfig {
  double missing_drop_threshold = 0.9;
  double skew_drop_threshold = 0.9;
  bool drop_rows_with_missing = true;
  std::vector<std::string> forced_drops;
  std::vector<std::string> forced_keeps;
};

void validate(const CleanseConfig& cfg);

enum class DropReason { kHighMissing, kSkewed, kForced, kInconsistent };
enum class RowPolicy { kNone, kAnyMissing };

std::string_view to_string(DropReason reason);
DropReason drop_reason_from_string(std::string_view s);

struct DroppedFeature {
  std::string name;
  DropReason reason = DropReason::kForced;
  friend bool operator==(const DroppedFeature&, const DroppedFeature&) = default;
};

struct CleansePlan {
  std::vector<DroppedFeature> drop_features;
  RowPolicy drop_row_policy = RowPolicy::kAnyMissing;

  std::vector<std::string> dropped_names() const;
  friend bool operator==(const CleansePlan&, const CleansePlan&) = default;
};

/// Rule order: forced, then missing_fraction > threshold, then dominant_share > threshold.
/// Identifier and Target columns are exempt from the threshold rules.
CleansePlan plan_cleanse(const ProfileReport& report, const CleanseConfig& cfg);

/// Drops the planned columns, then (policy kAnyMissing) every row with a missing
/// cell among the surviving columns. Surviving rows keep their order.
Table apply_cleanse(const Table& table, const CleansePlan& plan);

/// Row indices (into `table`) that apply_cleanse keeps.
std::vector<std::size_t> surviving_rows(const Table& table, const CleansePlan& plan);

struct ConsistencyReport {
  std::size_t violating_child_values = 0;
  std::map<std::string, std::set<std::string>> mapping;  // child -> parents
};

/// Counts child values observed under two or more distinct parent values.
ConsistencyReport cross_consistency(const Table& table, const std::string& parent,
                                    const std::string& child);

nlohmann::ordered_json to_json(const CleansePlan& plan);
CleansePlan cleanse_plan_from_json(const nlohmann::ordered_json& j);

}  // namespace vulnpred
