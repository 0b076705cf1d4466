#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "vulnpred/error.hpp"
#include "vulnpred/table.hpp"

namespace vulnpred {

namespace {

using Record = std::vector<std::string>;

// RFC 4180 reader: comma separator, double-quote quoting, "" escapes,
// LF or CRLF record ends, line breaks allowed inside quotes.
std::vector<Record> parse_records(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (current.empty() && field.empty() && !field_started) return;  // blank line
    end_field();
    records.push_back(std::move(current));
    current.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) {
          fail(ErrorKind::kData, "stray quote inside unquoted field on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_record();
        ++line;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) fail(ErrorKind::kData, "unterminated quoted field at end of input");
  if (field_started || !field.empty() || !current.empty()) end_record();
  return records;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<double> parse_binary(std::string_view s) {
  if (s == "0" || s == "false" || s == "False" || s == "FALSE") return 0.0;
  if (s == "1" || s == "true" || s == "True" || s == "TRUE") return 1.0;
  return std::nullopt;
}

ColumnKind infer_kind(const std::vector<const std::string*>& present) {
  std::set<std::string_view> distinct;
  for (const auto* s : present) {
    distinct.insert(*s);
    if (distinct.size() > 2) break;
  }
  if (distinct.size() == 2) {
    std::set<double> mapped;
    bool all_binary = true;
    for (auto s : distinct) {
      auto b = parse_binary(s);
      if (!b) {
        all_binary = false;
        break;
      }
      mapped.insert(*b);
    }
    if (all_binary && mapped.size() == 2) return ColumnKind::kBinary;
  }
  for (const auto* s : present) {
    if (!parse_double(*s)) return ColumnKind::kCategorical;
  }
  return ColumnKind::kNumerical;
}

}  // namespace

Table parse_csv(std::string_view text, const std::map<std::string, ColumnKind>& declared_kinds,
                const CsvOptions& options) {
  auto records = parse_records(text);
  if (records.empty()) fail(ErrorKind::kSchema, "CSV has no header row");
  const Record header = std::move(records.front());
  const std::size_t n_cols = header.size();
  const std::size_t n_rows = records.size() - 1;

  {
    std::unordered_set<std::string> seen;
    for (const auto& name : header) {
      if (!seen.insert(name).second) fail(ErrorKind::kSchema, "duplicate header name '" + name + "'");
    }
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != n_cols) {
      fail(ErrorKind::kData, "ragged row " + std::to_string(r - 1) + ": expected " +
                                 std::to_string(n_cols) + " fields, found " +
                                 std::to_string(records[r].size()));
    }
  }

  const std::unordered_set<std::string> markers(options.missing_markers.begin(),
                                                options.missing_markers.end());
  std::vector<Column> columns;
  columns.reserve(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    const std::string& name = header[c];
    std::vector<std::uint8_t> missing(n_rows, 0);
    std::vector<const std::string*> present;
    present.reserve(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const std::string& cell = records[r + 1][c];
      if (markers.contains(cell)) {
        missing[r] = 1;
      } else {
        present.push_back(&cell);
      }
    }

    ColumnKind kind;
    if (auto it = declared_kinds.find(name); it != declared_kinds.end()) {
      kind = it->second;
    } else {
      kind = infer_kind(present);
    }

    if (holds_numbers(kind)) {
      NumericValues values(n_rows, 0.0);
      const bool binary_like = kind != ColumnKind::kNumerical;
      for (std::size_t r = 0; r < n_rows; ++r) {
        if (missing[r]) continue;
        const std::string& cell = records[r + 1][c];
        auto v = binary_like ? parse_binary(cell) : parse_double(cell);
        if (!v) {
          fail(ErrorKind::kData, "column '" + name + "' (" + std::string(to_string(kind)) +
                                     "): cannot parse '" + cell + "' at row " + std::to_string(r));
        }
        values[r] = *v;
      }
      columns.push_back(Column::numeric(name, kind, std::move(values), std::move(missing)));
    } else {
      TextValues values(n_rows);
      for (std::size_t r = 0; r < n_rows; ++r) {
        if (!missing[r]) values[r] = std::move(records[r + 1][c]);
      }
      columns.push_back(Column::text(name, kind, std::move(values), std::move(missing)));
    }
  }
  return Table(std::move(columns));
}

Table read_csv(const std::filesystem::path& path,
               const std::map<std::string, ColumnKind>& declared_kinds, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIngest, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorKind::kIngest, "read failed for '" + path.string() + "'");
  return parse_csv(buf.str(), declared_kinds, options);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string format_csv(const Table& table) {
  std::string out;
  const auto& cols = table.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out.push_back(',');
    out += csv_escape(cols[c].name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out.push_back(',');
      out += csv_escape(cols[c].cell_text(r));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIngest, "cannot write '" + path.string() + "'");
  out << format_csv(table);
  if (!out) fail(ErrorKind::kIngest, "write failed for '" + path.string() + "'");
}

}  // namespace vulnpred
