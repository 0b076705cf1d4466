#include "vulnpred/table.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "vulnpred/error.hpp"

namespace vulnpred {

namespace {

constexpr std::pair<ColumnKind, std::string_view> kKindNames[] = {
    {ColumnKind::kBinary, "Binary"},
    {ColumnKind::kCategorical, "Categorical"},
    {ColumnKind::kNumerical, "Numerical"},
    {ColumnKind::kVersionString, "VersionString"},
    {ColumnKind::kIdentifier, "Identifier"},
    {ColumnKind::kTarget, "Target"},
};

}  // namespace

std::string_view to_string(ColumnKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "Unknown";
}

ColumnKind column_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  fail(ErrorKind::kConfig, "unknown column kind '" + std::string(name) + "'");
}

bool holds_numbers(ColumnKind kind) {
  return kind == ColumnKind::kBinary || kind == ColumnKind::kNumerical ||
         kind == ColumnKind::kTarget;
}

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, end);
}

std::string Column::cell_text(std::size_t row) const {
  if (is_missing(row)) return "NA";
  if (holds_numbers(kind)) return format_number(numbers()[row]);
  return texts()[row];
}

Column Column::numeric(std::string name, ColumnKind kind, NumericValues values,
                       std::vector<std::uint8_t> missing) {
  if (!holds_numbers(kind)) {
    fail(ErrorKind::kSchema, "column '" + name + "': kind " + std::string(to_string(kind)) +
                                 " stores text, not numbers");
  }
  if (missing.empty()) missing.assign(values.size(), 0);
  Column c{std::move(name), kind, std::move(values), std::move(missing)};
  return c;
}

Column Column::text(std::string name, ColumnKind kind, TextValues values,
                    std::vector<std::uint8_t> missing) {
  if (holds_numbers(kind)) {
    fail(ErrorKind::kSchema, "column '" + name + "': kind " + std::string(to_string(kind)) +
                                 " stores numbers, not text");
  }
  if (missing.empty()) missing.assign(values.size(), 0);
  Column c{std::move(name), kind, std::move(values), std::move(missing)};
  return c;
}

Table::Table(std::vector<Column> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> names;
  std::size_t targets = 0;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& c = columns_[i];
    if (!names.insert(c.name).second) {
      fail(ErrorKind::kSchema, "duplicate column name '" + c.name + "'");
    }
    const std::size_t n = std::visit([](const auto& v) { return v.size(); }, c.values);
    if (n != c.missing.size()) {
      fail(ErrorKind::kSchema, "column '" + c.name + "': missing mask length mismatch");
    }
    if (holds_numbers(c.kind) != std::holds_alternative<NumericValues>(c.values)) {
      fail(ErrorKind::kSchema, "column '" + c.name + "': value storage does not match kind");
    }
    if (i == 0) {
      row_count_ = n;
    } else if (n != row_count_) {
      fail(ErrorKind::kSchema, "column '" + c.name + "' has " + std::to_string(n) +
                                   " rows, expected " + std::to_string(row_count_));
    }
    if (c.kind == ColumnKind::kTarget) ++targets;
  }
  if (targets > 1) fail(ErrorKind::kSchema, "more than one Target column");
}

const Column& Table::column(std::string_view name) const {
  auto idx = find(name);
  if (!idx) fail(ErrorKind::kSchema, "unknown column '" + std::string(name) + "'");
  return columns_[*idx];
}

std::optional<std::size_t> Table::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Table::target_index() const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].kind == ColumnKind::kTarget) return i;
  }
  return std::nullopt;
}

std::vector<int> Table::labels() const {
  auto t = target_index();
  if (!t) fail(ErrorKind::kSchema, "table has no Target column");
  const Column& c = columns_[*t];
  std::vector<int> y(row_count_);
  for (std::size_t r = 0; r < row_count_; ++r) {
    if (c.is_missing(r)) {
      fail(ErrorKind::kData, "target '" + c.name + "' is missing at row " + std::to_string(r));
    }
    y[r] = c.numbers()[r] != 0.0 ? 1 : 0;
  }
  return y;
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const Column& c : columns_) {
    Column picked{c.name, c.kind, {}, {}};
    picked.missing.reserve(rows.size());
    for (auto r : rows) picked.missing.push_back(c.missing.at(r));
    picked.values = std::visit(
        [&](const auto& v) -> std::variant<NumericValues, TextValues> {
          std::remove_cvref_t<decltype(v)> sel;
          sel.reserve(rows.size());
          for (auto r : rows) sel.push_back(v[r]);
          return sel;
        },
        c.values);
    out.push_back(std::move(picked));
  }
  if (out.empty()) return Table{};
  return Table(std::move(out));
}

Table Table::drop_columns(std::span<const std::string> names) const {
  std::set<std::string, std::less<>> drop(names.begin(), names.end());
  std::vector<Column> kept;
  for (const Column& c : columns_) {
    if (!drop.contains(c.name)) kept.push_back(c);
  }
  Table t(std::move(kept));
  if (t.columns_.empty()) t.row_count_ = 0;
  return t;
}

}  // namespace vulnpred
