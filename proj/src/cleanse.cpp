#include "vulnpred/cleanse.hpp"

#include <algorithm>

#include "vulnpred/error.hpp"

namespace vulnpred {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string_view to_string(DropReason reason) {
  switch (reason) {
    case DropReason::kHighMissing: return "high_missing";
    case DropReason::kSkewed: return "skewed";
    case DropReason::kForced: return "forced";
    case DropReason::kInconsistent: return "inconsistent";
  }
  return "unknown";
}

DropReason drop_reason_from_string(std::string_view s) {
  for (auto r : {DropReason::kHighMissing, DropReason::kSkewed, DropReason::kForced,
                 DropReason::kInconsistent}) {
    if (to_string(r) == s) return r;
  }
  fail(ErrorKind::kConfig, "unknown drop reason '" + std::string(s) + "'");
}

void validate(const CleanseConfig& cfg) {
  if (!(cfg.missing_drop_threshold > 0.0 && cfg.missing_drop_threshold <= 1.0)) {
    fail(ErrorKind::kConfig, "cleanse.missing_drop_threshold must be in (0,1]");
  }
  if (!(cfg.skew_drop_threshold > 0.0 && cfg.skew_drop_threshold <= 1.0)) {
    fail(ErrorKind::kConfig, "cleanse.skew_drop_threshold must be in (0,1]");
  }
  for (const auto& name : cfg.forced_drops) {
    if (contains(cfg.forced_keeps, name)) {
      fail(ErrorKind::kConfig, "cleanse: '" + name + "' is both a forced drop and a forced keep");
    }
  }
}

std::vector<std::string> CleansePlan::dropped_names() const {
  std::vector<std::string> names;
  names.reserve(drop_features.size());
  for (const auto& d : drop_features) names.push_back(d.name);
  return names;
}

CleansePlan plan_cleanse(const ProfileReport& report, const CleanseConfig& cfg) {
  validate(cfg);
  for (const auto& name : cfg.forced_drops) {
    const auto it = std::find_if(report.columns.begin(), report.columns.end(),
                                 [&](const ColumnProfile& c) { return c.name == name; });
    if (it == report.columns.end()) {
      fail(ErrorKind::kConfig, "cleanse.forced_drops names unknown column '" + name + "'");
    }
    if (it->kind == ColumnKind::kTarget) {
      fail(ErrorKind::kConfig, "cleanse.forced_drops names the Target column '" + name + "'");
    }
  }

  CleansePlan plan;
  plan.drop_row_policy = cfg.drop_rows_with_missing ? RowPolicy::kAnyMissing : RowPolicy::kNone;
  for (const auto& c : report.columns) {
    if (contains(cfg.forced_drops, c.name)) {
      plan.drop_features.push_back({c.name, DropReason::kForced});
      continue;
    }
    if (c.kind == ColumnKind::kTarget || c.kind == ColumnKind::kIdentifier) continue;
    if (contains(cfg.forced_keeps, c.name)) continue;
    if (c.missing_fraction > cfg.missing_drop_threshold) {
      plan.drop_features.push_back({c.name, DropReason::kHighMissing});
    } else if (c.dominant_share > cfg.skew_drop_threshold) {
      plan.drop_features.push_back({c.name, DropReason::kSkewed});
    }
  }
  return plan;
}

std::vector<std::size_t> surviving_rows(const Table& table, const CleansePlan& plan) {
  const auto dropped = plan.dropped_names();
  std::vector<const Column*> kept;
  for (const Column& c : table.columns()) {
    if (!contains(dropped, c.name)) kept.push_back(&c);
  }
  std::vector<std::size_t> rows;
  rows.reserve(table.row_count());
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    bool ok = true;
    if (plan.drop_row_policy == RowPolicy::kAnyMissing) {
      for (const Column* c : kept) {
        if (c->is_missing(r)) {
          ok = false;
          break;
        }
      }
    }
    if (ok) rows.push_back(r);
  }
  return rows;
}

Table apply_cleanse(const Table& table, const CleansePlan& plan) {
  const auto dropped = plan.dropped_names();
  Table reduced = table.drop_columns(dropped);
  if (plan.drop_row_policy == RowPolicy::kNone) return reduced;
  const auto rows = surviving_rows(table, plan);
  if (rows.size() == reduced.row_count()) return reduced;
  return reduced.select_rows(rows);
}

ConsistencyReport cross_consistency(const Table& table, const std::string& parent,
                                    const std::string& child) {
  const Column& p = table.column(parent);
  const Column& c = table.column(child);
  for (const Column* col : {&p, &c}) {
    if (col->kind != ColumnKind::kCategorical && col->kind != ColumnKind::kIdentifier) {
      fail(ErrorKind::kSchema, "cross_consistency: column '" + col->name +
                                   "' must be Categorical or Identifier, not " +
                                   std::string(to_string(col->kind)));
    }
  }
  ConsistencyReport out;
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    if (p.is_missing(r) || c.is_missing(r)) continue;
    out.mapping[c.texts()[r]].insert(p.texts()[r]);
  }
  for (const auto& [child_value, parents] : out.mapping) {
    if (parents.size() >= 2) ++out.violating_child_values;
  }
  return out;
}

nlohmann::ordered_json to_json(const CleansePlan& plan) {
  nlohmann::ordered_json j;
  auto& drops = j["drop_features"] = nlohmann::ordered_json::array();
  for (const auto& d : plan.drop_features) {
    drops.push_back({{"name", d.name}, {"reason", std::string(to_string(d.reason))}});
  }
  j["drop_row_policy"] = plan.drop_row_policy == RowPolicy::kAnyMissing ? "any_missing" : "none";
  return j;
}

CleansePlan cleanse_plan_from_json(const nlohmann::ordered_json& j) {
  CleansePlan plan;
  try {
    for (const auto& d : j.at("drop_features")) {
      plan.drop_features.push_back(
          {d.at("name").get<std::string>(), drop_reason_from_string(d.at("reason").get<std::string>())});
    }
    const auto policy = j.at("drop_row_policy").get<std::string>();
    if (policy == "any_missing") {
      plan.drop_row_policy = RowPolicy::kAnyMissing;
    } else if (policy == "none") {
      plan.drop_row_policy = RowPolicy::kNone;
    } else {
      fail(ErrorKind::kConfig, "unknown drop_row_policy '" + policy + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("malformed cleanse plan: ") + e.what());
  }
  return plan;
}

}  // namespace vulnpred
