#include "vulnpred/profile.hpp"

#include <algorithm>
#include <unordered_map>

#include "vulnpred/error.hpp"

namespace vulnpred {

namespace {

struct Tally {
  std::size_t count = 0;
  std::size_t first_seen = 0;
};

template <typename T>
std::vector<std::pair<T, Tally>> tally(std::span<const T> values,
                                       std::span<const std::uint8_t> missing) {
  std::unordered_map<T, Tally> counts;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (missing[i]) continue;
    auto [it, inserted] = counts.try_emplace(values[i], Tally{0, i});
    ++it->second.count;
  }
  std::vector<std::pair<T, Tally>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  return out;
}

template <typename T>
double share_of_mode(std::span<const T> values, std::span<const std::uint8_t> missing) {
  const auto counts = tally(values, missing);
  if (counts.empty()) fail(ErrorKind::kUndefined, "dominant share of an all-missing column");
  std::size_t present = 0;
  for (const auto& [v, t] : counts) present += t.count;
  return static_cast<double>(counts.front().second.count) / static_cast<double>(present);
}

template <typename T, typename Render>
void fill_counts(ColumnProfile& p, std::span<const T> values, std::span<const std::uint8_t> missing,
                 Render render) {
  const auto counts = tally(values, missing);
  p.cardinality = counts.size();
  std::size_t present = 0;
  for (const auto& [v, t] : counts) present += t.count;
  p.dominant_share =
      counts.empty() ? 0.0
                     : static_cast<double>(counts.front().second.count) / static_cast<double>(present);
  for (std::size_t i = 0; i < counts.size() && i < kTopValues; ++i) {
    p.top_values.emplace_back(render(counts[i].first), counts[i].second.count);
  }
}

}  // namespace

double dominant_share(std::span<const std::string> values, std::span<const std::uint8_t> missing) {
  return share_of_mode(values, missing);
}

double dominant_share(std::span<const double> values, std::span<const std::uint8_t> missing) {
  return share_of_mode(values, missing);
}

ColumnProfile profile_column(const Column& column, std::size_t row_count) {
  ColumnProfile p;
  p.name = column.name;
  p.kind = column.kind;
  const auto n_missing =
      static_cast<std::size_t>(std::count(column.missing.begin(), column.missing.end(), 1));
  p.missing_fraction =
      row_count ? static_cast<double>(n_missing) / static_cast<double>(row_count) : 0.0;
  if (holds_numbers(column.kind)) {
    fill_counts(p, std::span<const double>(column.numbers()), column.missing,
                [](double v) { return format_number(v); });
  } else {
    fill_counts(p, std::span<const std::string>(column.texts()), column.missing,
                [](const std::string& v) { return v; });
  }
  return p;
}

ProfileReport profile(const Table& table) {
  ProfileReport report;
  report.row_count = table.row_count();
  for (const Column& c : table.columns()) {
    report.columns.push_back(profile_column(c, table.row_count()));
    ++report.kind_histogram[c.kind];
  }
  if (auto t = table.target_index()) {
    const Column& target = table.column(*t);
    std::size_t ones = 0, present = 0;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
      if (target.is_missing(r)) continue;
      ++present;
      if (target.numbers()[r] != 0.0) ++ones;
    }
    if (present > 0) {
      report.class_balance["1"] = static_cast<double>(ones) / static_cast<double>(present);
      report.class_balance["0"] = static_cast<double>(present - ones) / static_cast<double>(present);
    }
  }
  return report;
}

const ColumnProfile& ProfileReport::column(const std::string& name) const {
  for (const auto& c : columns) {
    if (c.name == name) return c;
  }
  fail(ErrorKind::kSchema, "profile has no column '" + name + "'");
}

nlohmann::ordered_json to_json(const ProfileReport& report) {
  nlohmann::ordered_json j;
  j["row_count"] = report.row_count;
  auto& cols = j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : report.columns) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["kind"] = std::string(to_string(c.kind));
    cj["missing_fraction"] = c.missing_fraction;
    cj["cardinality"] = c.cardinality;
    cj["dominant_share"] = c.dominant_share;
    auto& top = cj["top_values"] = nlohmann::ordered_json::array();
    for (const auto& [v, n] : c.top_values) top.push_back({{"value", v}, {"count", n}});
    cols.push_back(std::move(cj));
  }
  auto& balance = j["class_balance"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.class_balance) balance[k] = v;
  auto& kinds = j["kind_histogram"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.kind_histogram) kinds[std::string(to_string(k))] = v;
  return j;
}

}  // namespace vulnpred
