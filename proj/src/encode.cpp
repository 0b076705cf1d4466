#include "vulnpred/encode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "vulnpred/error.hpp"

namespace vulnpred {

namespace {

constexpr const char* kOtherLabel = "__other__";
constexpr int kFormatVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_model_input(ColumnKind kind) {
  return kind != ColumnKind::kIdentifier && kind != ColumnKind::kTarget;
}

std::size_t distinct_present(const Column& c) {
  if (holds_numbers(c.kind)) {
    std::set<double> s;
    for (std::size_t r = 0; r < c.size(); ++r) {
      if (!c.is_missing(r)) s.insert(c.numbers()[r]);
    }
    return s.size();
  }
  std::set<std::string_view> s;
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (!c.is_missing(r)) s.insert(c.texts()[r]);
  }
  return s.size();
}

void require_no_missing(const Column& c, const char* stage) {
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c.is_missing(r)) {
      fail(ErrorKind::kData, std::string(stage) + ": column '" + c.name + "' has a missing cell at row " +
                                 std::to_string(r) + " (cleanse rows first)");
    }
  }
}

std::vector<std::string> text_values(const Column& c) {
  if (holds_numbers(c.kind)) {
    std::vector<std::string> out(c.size());
    for (std::size_t r = 0; r < c.size(); ++r) out[r] = format_number(c.numbers()[r]);
    return out;
  }
  return c.texts();
}

const std::vector<double>& numeric_values(const Column& c, const char* encoder) {
  if (!holds_numbers(c.kind)) {
    fail(ErrorKind::kSchema, std::string(encoder) + " needs a numeric column; '" + c.name + "' is " +
                                 std::string(to_string(c.kind)));
  }
  return c.numbers();
}

struct SegmentColumns {
  std::vector<std::vector<std::string>> segments;  // [segment][row]; empty text when malformed
  std::vector<std::uint8_t> malformed;
  std::size_t malformed_count = 0;
};

SegmentColumns split_segments(const std::vector<std::string>& values, std::size_t expected) {
  SegmentColumns out;
  out.segments.assign(expected, std::vector<std::string>(values.size()));
  out.malformed.assign(values.size(), 0);
  for (std::size_t r = 0; r < values.size(); ++r) {
    auto parts = parse_version(values[r], expected);
    if (!parts) {
      out.malformed[r] = 1;
      ++out.malformed_count;
      continue;
    }
    for (std::size_t s = 0; s < expected; ++s) out.segments[s][r] = std::move((*parts)[s]);
  }
  return out;
}

std::vector<std::string> well_formed(const std::vector<std::string>& seg,
                                     const std::vector<std::uint8_t>& malformed) {
  std::vector<std::string> out;
  out.reserve(seg.size());
  for (std::size_t r = 0; r < seg.size(); ++r) {
    if (!malformed[r]) out.push_back(seg[r]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Version rules

void validate(const VersionRuleSet& rules, const std::string& column) {
  if (rules.expected_segments != 4 && rules.expected_segments != 5) {
    fail(ErrorKind::kConfig, "segment rules for '" + column + "': expected_segments must be 4 or 5");
  }
  std::set<std::size_t> seen;
  for (const auto& r : rules.rules) {
    if (r.segment_index >= rules.expected_segments) {
      fail(ErrorKind::kConfig, "segment rules for '" + column + "': segment index " +
                                   std::to_string(r.segment_index) + " out of range");
    }
    if (!seen.insert(r.segment_index).second) {
      fail(ErrorKind::kConfig, "segment rules for '" + column + "': segment " +
                                   std::to_string(r.segment_index) + " has two rules");
    }
    const bool bad_k = std::visit(Overloaded{[](const SegmentOneHotTopK& a) { return a.k == 0; },
                                             [](const SegmentFactorizeTopK& a) { return a.k == 0; },
                                             [](const auto&) { return false; }},
                                  r.action);
    if (bad_k) fail(ErrorKind::kConfig, "segment rules for '" + column + "': k must be >= 1");
  }
}

std::map<std::string, VersionRuleSet> paper_msft_segment_rules() {
  std::map<std::string, VersionRuleSet> rules;
  rules["AvSigVersion"] = {4,
                           {{0, SegmentIgnore{}},
                            {1, SegmentOneHotTopK{2}},
                            {2, SegmentFrequency{}},
                            {3, SegmentIgnore{}}}};
  rules["EngineVersion"] = {4,
                            {{0, SegmentIgnore{}},
                             {1, SegmentIgnore{}},
                             {2, SegmentOneHotTopK{2}},
                             {3, SegmentOneHotTopK{1}}}};
  rules["AppVersion"] = {4,
                         {{0, SegmentIgnore{}},
                          {1, SegmentOneHotTopK{1}},
                          {2, SegmentOneHotTopK{1}},
                          {3, SegmentOneHotTopK{1}}}};
  rules["OsBuildLab"] = {5,
                         {{0, SegmentFactorizeTopK{7}},
                          {1, SegmentFactorizeTopK{4}},
                          {2, SegmentOneHotTopK{1}},
                          {3, SegmentAlias{"Census_OSBranch"}},
                          {4, SegmentFactorizeTopK{4}}}};
  return rules;
}

std::optional<std::vector<std::string>> parse_version(std::string_view text,
                                                      std::size_t expected_segments) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = text.find('.', start);
    parts.emplace_back(text.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (parts.size() != expected_segments) return std::nullopt;
  return parts;
}

// ---------------------------------------------------------------------------
// Planning

std::string_view encoder_name(const EncoderChoice& choice) {
  return std::visit(Overloaded{[](const encoder::PassThroughBinary&) { return "passthrough"; },
                               [](const encoder::MinMax&) { return "minmax"; },
                               [](const encoder::OneHot&) { return "onehot"; },
                               [](const encoder::Factorize&) { return "factorize"; },
                               [](const encoder::FrequencyThenMinMax&) { return "frequency"; },
                               [](const encoder::VersionSegments&) { return "version_segments"; },
                               [](const encoder::Drop&) { return "drop"; }},
                    choice);
}

EncoderSpec plan_encoding(const Table& table, const EncodingConfig& cfg) {
  if (cfg.onehot_max == 0 || cfg.factorize_max < cfg.onehot_max) {
    fail(ErrorKind::kConfig, "encoding: need 0 < onehot_max <= factorize_max");
  }
  EncoderSpec spec;
  for (const Column& c : table.columns()) {
    if (!is_model_input(c.kind)) continue;
    require_no_missing(c, "plan_encoding");
    if (auto it = cfg.overrides.find(c.name); it != cfg.overrides.end()) {
      if (const auto* vs = std::get_if<encoder::VersionSegments>(&it->second)) {
        if (c.kind != ColumnKind::kVersionString) {
          fail(ErrorKind::kConfig, "encoding override: VersionSegments on non-VersionString column '" +
                                       c.name + "'");
        }
        validate(vs->rules, c.name);
      }
      spec.push_back({c.name, it->second});
      continue;
    }
    switch (c.kind) {
      case ColumnKind::kBinary:
        spec.push_back({c.name, encoder::PassThroughBinary{}});
        break;
      case ColumnKind::kNumerical:
        spec.push_back({c.name, encoder::MinMax{}});
        break;
      case ColumnKind::kCategorical: {
        const std::size_t k = distinct_present(c);
        if (k < cfg.onehot_max) {
          spec.push_back({c.name, encoder::OneHot{cfg.onehot_max, std::nullopt}});
        } else if (k <= cfg.factorize_max) {
          spec.push_back({c.name, encoder::Factorize{}});
        } else {
          spec.push_back({c.name, encoder::FrequencyThenMinMax{}});
        }
        break;
      }
      case ColumnKind::kVersionString: {
        auto it = cfg.segment_rules.find(c.name);
        if (it == cfg.segment_rules.end()) {
          fail(ErrorKind::kConfig, "VersionString column '" + c.name + "' has no segment rules configured");
        }
        validate(it->second, c.name);
        spec.push_back({c.name, encoder::VersionSegments{it->second}});
        break;
      }
      default:
        break;
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Building blocks

double FittedMinMax::apply(double x) const {
  const double range = max - min;
  if (!(range > 0.0)) return 0.0;
  return std::clamp((x - min) / range, 0.0, 1.0);
}

MinMaxResult minmax_fit_apply(std::span<const double> values) {
  MinMaxResult out;
  if (values.empty()) fail(ErrorKind::kContract, "minmax: empty input");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  out.fitted = {*lo, *hi};
  out.scaled.reserve(values.size());
  for (double v : values) out.scaled.push_back(out.fitted.apply(v));
  return out;
}

std::vector<std::pair<std::string, std::size_t>> ranked_categories(std::span<const std::string> values) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [k, n] : counts) ranked.emplace_back(std::string(k), n);
  // counts is already lexicographic, so a stable sort on count keeps ties in that order
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

FittedFrequency frequency_fit(std::span<const std::string> values) {
  if (values.empty()) fail(ErrorKind::kContract, "frequency: empty input");
  FittedFrequency f;
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& v : values) ++counts[v];
  const double total = static_cast<double>(values.size());
  double lo = 1.0, hi = 0.0;
  for (const auto& [k, n] : counts) {
    const double freq = static_cast<double>(n) / total;
    f.frequency.emplace(k, freq);
    lo = std::min(lo, freq);
    hi = std::max(hi, freq);
  }
  f.scale = {lo, hi};
  return f;
}

double FittedFrequency::apply(std::string_view value) const {
  auto it = frequency.find(value);
  return scale.apply(it == frequency.end() ? 0.0 : it->second);
}

FrequencyResult frequency_fit_apply(std::span<const std::string> values) {
  FrequencyResult out;
  out.fitted = frequency_fit(values);
  out.scaled.reserve(values.size());
  for (const auto& v : values) out.scaled.push_back(out.fitted.apply(v));
  return out;
}

FittedOneHot onehot_fit(std::span<const std::string> values, std::optional<std::size_t> merge_top_k) {
  const auto ranked = ranked_categories(values);
  FittedOneHot f;
  std::size_t keep = ranked.size();
  if (merge_top_k && *merge_top_k < ranked.size()) {
    keep = *merge_top_k;
    f.has_other = true;
  }
  for (std::size_t i = 0; i < keep; ++i) f.categories.push_back(ranked[i].first);
  return f;
}

void onehot_apply(const FittedOneHot& fitted, std::string_view value, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < fitted.categories.size(); ++i) {
    if (fitted.categories[i] == value) {
      out[i] = 1.0;
      return;
    }
  }
  if (fitted.has_other) out[fitted.categories.size()] = 1.0;
}

OneHotResult onehot_fit_apply(std::span<const std::string> values,
                              std::optional<std::size_t> merge_top_k) {
  OneHotResult out;
  out.fitted = onehot_fit(values, merge_top_k);
  out.indicators = Matrix(values.size(), out.fitted.width());
  for (std::size_t r = 0; r < values.size(); ++r) {
    onehot_apply(out.fitted, values[r], out.indicators.row(r));
  }
  return out;
}

FittedFactorize factorize_fit(std::span<const std::string> values,
                              std::optional<std::size_t> merge_top_k) {
  if (values.empty()) fail(ErrorKind::kContract, "factorize: empty input");
  const auto ranked = ranked_categories(values);
  FittedFactorize f;
  std::size_t keep = ranked.size();
  if (merge_top_k && *merge_top_k < ranked.size()) {
    keep = *merge_top_k;
    f.has_other = true;
  }
  for (std::size_t i = 0; i < keep; ++i) f.categories.push_back(ranked[i].first);
  return f;
}

double FittedFactorize::apply(std::string_view value) const {
  const std::size_t max_code = has_other ? categories.size() : categories.size() - 1;
  std::size_t code = max_code;  // unseen: "other" when present, else the max code
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == value) {
      code = i;
      break;
    }
  }
  return max_code == 0 ? 0.0 : static_cast<double>(code) / static_cast<double>(max_code);
}

FactorizeResult factorize_fit_apply(std::span<const std::string> values,
                                    std::optional<std::size_t> merge_top_k) {
  FactorizeResult out;
  out.fitted = factorize_fit(values, merge_top_k);
  out.scaled.reserve(values.size());
  for (const auto& v : values) out.scaled.push_back(out.fitted.apply(v));
  return out;
}

// ---------------------------------------------------------------------------
// Fit / transform

namespace {

FittedVersion fit_version(const Column& c, const VersionRuleSet& rules) {
  if (c.kind != ColumnKind::kVersionString) {
    fail(ErrorKind::kSchema, "VersionSegments on non-VersionString column '" + c.name + "'");
  }
  validate(rules, c.name);
  const auto seg = split_segments(c.texts(), rules.expected_segments);
  FittedVersion fv;
  fv.expected_segments = rules.expected_segments;
  fv.malformed_rows = seg.malformed_count;
  auto ordered = rules.rules;
  std::sort(ordered.begin(), ordered.end(),
            [](const SegmentRule& a, const SegmentRule& b) { return a.segment_index < b.segment_index; });
  for (const auto& rule : ordered) {
    const auto values = well_formed(seg.segments[rule.segment_index], seg.malformed);
    FittedSegment fs;
    fs.segment_index = rule.segment_index;
    auto need_values = [&] {
      if (values.empty()) {
        fail(ErrorKind::kData, "column '" + c.name + "': no well-formed version strings to fit segment " +
                                   std::to_string(rule.segment_index));
      }
    };
    std::visit(Overloaded{[&](const SegmentIgnore& a) { fs.encoder = a; },
                          [&](const SegmentAlias& a) { fs.encoder = a; },
                          [&](const SegmentOneHotTopK& a) {
                            need_values();
                            fs.encoder = onehot_fit(values, a.k);
                          },
                          [&](const SegmentFactorizeTopK& a) {
                            need_values();
                            fs.encoder = factorize_fit(values, a.k);
                          },
                          [&](const SegmentFrequency&) {
                            need_values();
                            fs.encoder = frequency_fit(values);
                          }},
               rule.action);
    fv.segments.push_back(std::move(fs));
  }
  return fv;
}

std::size_t segment_width(const FittedSegment& s) {
  return std::visit(Overloaded{[](const FittedOneHot& f) { return f.width(); },
                               [](const FittedFactorize&) -> std::size_t { return 1; },
                               [](const FittedFrequency&) -> std::size_t { return 1; },
                               [](const auto&) -> std::size_t { return 0; }},
                    s.encoder);
}

void append_names(const std::string& base, const FittedState& state, std::vector<std::string>& names) {
  auto onehot_names = [&](const std::string& prefix, const FittedOneHot& f) {
    for (const auto& cat : f.categories) names.push_back(prefix + "=" + cat);
    if (f.has_other) names.push_back(prefix + "=" + kOtherLabel);
  };
  std::visit(Overloaded{[&](const FittedOneHot& f) { onehot_names(base, f); },
                        [&](const FittedVersion& v) {
                          for (const auto& s : v.segments) {
                            const std::string prefix = base + "[" + std::to_string(s.segment_index) + "]";
                            std::visit(Overloaded{[&](const FittedOneHot& f) { onehot_names(prefix, f); },
                                                  [&](const FittedFactorize&) { names.push_back(prefix); },
                                                  [&](const FittedFrequency&) { names.push_back(prefix); },
                                                  [](const auto&) {}},
                                       s.encoder);
                          }
                        },
                        [&](const FittedDrop&) {},
                        [&](const auto&) { names.push_back(base); }},
             state);
}

}  // namespace

std::size_t feature_width(const FittedState& state) {
  return std::visit(Overloaded{[](const FittedOneHot& f) { return f.width(); },
                               [](const FittedVersion& v) {
                                 std::size_t w = 0;
                                 for (const auto& s : v.segments) w += segment_width(s);
                                 return w;
                               },
                               [](const FittedDrop&) -> std::size_t { return 0; },
                               [](const auto&) -> std::size_t { return 1; }},
                    state);
}

FittedEncoders fit_encoders(const Table& train, const EncoderSpec& spec) {
  FittedEncoders out;
  if (auto t = train.target_index()) out.target = train.column(*t).name;
  for (const auto& ce : spec) {
    const Column& c = train.column(ce.column);
    if (!is_model_input(c.kind)) {
      fail(ErrorKind::kContract, "encoder configured for " + std::string(to_string(c.kind)) +
                                     " column '" + c.name + "'");
    }
    if (std::holds_alternative<encoder::Drop>(ce.choice)) {
      out.columns.push_back({c.name, FittedDrop{}});
      continue;
    }
    require_no_missing(c, "fit_encoders");
    if (c.size() == 0) fail(ErrorKind::kData, "fit_encoders: empty training table");
    FittedState state = std::visit(
        Overloaded{[&](const encoder::PassThroughBinary&) -> FittedState {
                     const auto& v = numeric_values(c, "passthrough");
                     for (double x : v) {
                       if (x != 0.0 && x != 1.0) {
                         fail(ErrorKind::kData, "passthrough column '" + c.name + "' is not 0/1");
                       }
                     }
                     return FittedPassThrough{};
                   },
                   [&](const encoder::MinMax&) -> FittedState {
                     return minmax_fit_apply(numeric_values(c, "minmax")).fitted;
                   },
                   [&](const encoder::OneHot& o) -> FittedState {
                     return onehot_fit(text_values(c), o.merge_top_k);
                   },
                   [&](const encoder::Factorize& f) -> FittedState {
                     return factorize_fit(text_values(c), f.merge_top_k);
                   },
                   [&](const encoder::FrequencyThenMinMax&) -> FittedState {
                     return frequency_fit(text_values(c));
                   },
                   [&](const encoder::VersionSegments& vs) -> FittedState {
                     return fit_version(c, vs.rules);
                   },
                   [&](const encoder::Drop&) -> FittedState { return FittedDrop{}; }},
        ce.choice);
    out.columns.push_back({c.name, std::move(state)});
  }
  return out;
}

EncodedMatrix transform(const Table& table, const FittedEncoders& fitted) {
  std::set<std::string, std::less<>> known;
  for (const auto& fc : fitted.columns) known.insert(fc.column);
  for (const Column& c : table.columns()) {
    if (is_model_input(c.kind) && !known.contains(c.name)) {
      fail(ErrorKind::kContract, "transform: column '" + c.name + "' has no fitted encoder");
    }
  }

  EncodedMatrix out;
  std::vector<std::size_t> offsets;
  std::size_t width = 0;
  for (const auto& fc : fitted.columns) {
    if (!table.find(fc.column)) {
      fail(ErrorKind::kContract, "transform: fitted column '" + fc.column + "' missing from table");
    }
    offsets.push_back(width);
    const std::size_t w = feature_width(fc.state);
    append_names(fc.column, fc.state, out.feature_names);
    for (std::size_t i = 0; i < w; ++i) out.provenance.push_back(fc.column);
    width += w;
  }

  const std::size_t n = table.row_count();
  out.x = Matrix(n, width);
  for (std::size_t k = 0; k < fitted.columns.size(); ++k) {
    const auto& fc = fitted.columns[k];
    const Column& c = table.column(fc.column);
    if (std::holds_alternative<FittedDrop>(fc.state)) continue;
    require_no_missing(c, "transform");
    const std::size_t off = offsets[k];
    std::visit(
        Overloaded{
            [&](const FittedPassThrough&) {
              const auto& v = numeric_values(c, "passthrough");
              for (std::size_t r = 0; r < n; ++r) out.x(r, off) = v[r] != 0.0 ? 1.0 : 0.0;
            },
            [&](const FittedMinMax& f) {
              const auto& v = numeric_values(c, "minmax");
              for (std::size_t r = 0; r < n; ++r) out.x(r, off) = f.apply(v[r]);
            },
            [&](const FittedOneHot& f) {
              const auto v = text_values(c);
              for (std::size_t r = 0; r < n; ++r) {
                onehot_apply(f, v[r], out.x.row(r).subspan(off, f.width()));
              }
            },
            [&](const FittedFactorize& f) {
              const auto v = text_values(c);
              for (std::size_t r = 0; r < n; ++r) out.x(r, off) = f.apply(v[r]);
            },
            [&](const FittedFrequency& f) {
              const auto v = text_values(c);
              for (std::size_t r = 0; r < n; ++r) out.x(r, off) = f.apply(v[r]);
            },
            [&](const FittedVersion& fv) {
              if (c.kind != ColumnKind::kVersionString) {
                fail(ErrorKind::kSchema, "column '" + c.name + "' is no longer a VersionString");
              }
              const auto seg = split_segments(c.texts(), fv.expected_segments);
              std::size_t col = off;
              for (const auto& s : fv.segments) {
                const auto& vals = seg.segments[s.segment_index];
                std::visit(Overloaded{[&](const FittedOneHot& f) {
                                        for (std::size_t r = 0; r < n; ++r) {
                                          auto cells = out.x.row(r).subspan(col, f.width());
                                          if (seg.malformed[r]) {
                                            std::fill(cells.begin(), cells.end(), 0.0);
                                            if (f.has_other) cells[f.categories.size()] = 1.0;
                                          } else {
                                            onehot_apply(f, vals[r], cells);
                                          }
                                        }
                                      },
                                      [&](const FittedFactorize& f) {
                                        for (std::size_t r = 0; r < n; ++r) {
                                          // malformed rows map to the "other"/max code, like unseen values
                                          out.x(r, col) = seg.malformed[r] ? f.apply(kOtherLabel)
                                                                           : f.apply(vals[r]);
                                        }
                                      },
                                      [&](const FittedFrequency& f) {
                                        for (std::size_t r = 0; r < n; ++r) {
                                          out.x(r, col) = seg.malformed[r] ? f.scale.apply(0.0)
                                                                           : f.apply(vals[r]);
                                        }
                                      },
                                      [](const auto&) {}},
                           s.encoder);
                col += segment_width(s);
              }
            },
            [](const FittedDrop&) {}},
        fc.state);
  }

  if (auto t = table.target_index()) out.labels = table.labels();
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using ojson = nlohmann::ordered_json;

ojson minmax_json(const FittedMinMax& f) { return {{"min", f.min}, {"max", f.max}}; }

ojson fitted_block(const std::variant<SegmentIgnore, FittedOneHot, FittedFactorize, FittedFrequency,
                                      SegmentAlias>& e) {
  return std::visit(
      Overloaded{[](const SegmentIgnore&) { return ojson{{"encoder", "ignore"}}; },
                 [](const SegmentAlias& a) { return ojson{{"encoder", "alias"}, {"column", a.column}}; },
                 [](const FittedOneHot& f) {
                   return ojson{{"encoder", "onehot"}, {"categories", f.categories}, {"has_other", f.has_other}};
                 },
                 [](const FittedFactorize& f) {
                   return ojson{{"encoder", "factorize"}, {"categories", f.categories}, {"has_other", f.has_other}};
                 },
                 [](const FittedFrequency& f) {
                   ojson freq = ojson::object();
                   for (const auto& [k, v] : f.frequency) freq[k] = v;
                   ojson j{{"encoder", "frequency"}, {"frequency", freq}};
                   j["scale"] = minmax_json(f.scale);
                   return j;
                 }},
      e);
}

FittedMinMax minmax_from(const ojson& j) { return {j.at("min").get<double>(), j.at("max").get<double>()}; }

FittedOneHot onehot_from(const ojson& j) {
  return {j.at("categories").get<std::vector<std::string>>(), j.at("has_other").get<bool>()};
}
FittedFactorize factorize_from(const ojson& j) {
  return {j.at("categories").get<std::vector<std::string>>(), j.at("has_other").get<bool>()};
}
FittedFrequency frequency_from(const ojson& j) {
  FittedFrequency f;
  for (const auto& [k, v] : j.at("frequency").items()) f.frequency.emplace(k, v.get<double>());
  f.scale = minmax_from(j.at("scale"));
  return f;
}

ojson segment_action_json(const SegmentAction& a) {
  return std::visit(Overloaded{[](const SegmentIgnore&) { return ojson{{"action", "ignore"}}; },
                               [](const SegmentOneHotTopK& x) {
                                 return ojson{{"action", "onehot_top_k"}, {"k", x.k}};
                               },
                               [](const SegmentFactorizeTopK& x) {
                                 return ojson{{"action", "factorize_top_k"}, {"k", x.k}};
                               },
                               [](const SegmentFrequency&) { return ojson{{"action", "frequency"}}; },
                               [](const SegmentAlias& x) {
                                 return ojson{{"action", "alias"}, {"column", x.column}};
                               }},
                    a);
}

SegmentAction segment_action_from(const ojson& j) {
  const auto action = j.at("action").get<std::string>();
  if (action == "ignore") return SegmentIgnore{};
  if (action == "onehot_top_k") return SegmentOneHotTopK{j.at("k").get<std::size_t>()};
  if (action == "factorize_top_k") return SegmentFactorizeTopK{j.at("k").get<std::size_t>()};
  if (action == "frequency") return SegmentFrequency{};
  if (action == "alias") return SegmentAlias{j.at("column").get<std::string>()};
  fail(ErrorKind::kConfig, "unknown segment action '" + action + "'");
}

}  // namespace

ojson to_json(const VersionRuleSet& rules) {
  ojson j;
  j["expected_segments"] = rules.expected_segments;
  auto& arr = j["rules"] = ojson::array();
  for (const auto& r : rules.rules) {
    ojson rj{{"segment", r.segment_index}};
    rj.update(segment_action_json(r.action));
    arr.push_back(std::move(rj));
  }
  return j;
}

VersionRuleSet version_rules_from_json(const ojson& j) {
  try {
    VersionRuleSet rules;
    rules.expected_segments = j.at("expected_segments").get<std::size_t>();
    for (const auto& rj : j.at("rules")) {
      rules.rules.push_back({rj.at("segment").get<std::size_t>(), segment_action_from(rj)});
    }
    return rules;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("malformed segment rules: ") + e.what());
  }
}

ojson to_json(const EncoderChoice& choice) {
  ojson j{{"type", std::string(encoder_name(choice))}};
  std::visit(Overloaded{[&](const encoder::OneHot& o) {
                          j["max_categories"] = o.max_categories;
                          if (o.merge_top_k) j["merge_top_k"] = *o.merge_top_k;
                        },
                        [&](const encoder::Factorize& f) {
                          if (f.merge_top_k) j["merge_top_k"] = *f.merge_top_k;
                        },
                        [&](const encoder::VersionSegments& v) { j["rules"] = to_json(v.rules); },
                        [](const auto&) {}},
             choice);
  return j;
}

EncoderChoice encoder_choice_from_json(const ojson& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    auto top_k = [&]() -> std::optional<std::size_t> {
      if (j.contains("merge_top_k")) return j.at("merge_top_k").get<std::size_t>();
      return std::nullopt;
    };
    if (type == "passthrough") return encoder::PassThroughBinary{};
    if (type == "minmax") return encoder::MinMax{};
    if (type == "onehot") return encoder::OneHot{j.value("max_categories", std::size_t{5}), top_k()};
    if (type == "factorize") return encoder::Factorize{top_k()};
    if (type == "frequency") return encoder::FrequencyThenMinMax{};
    if (type == "version_segments") return encoder::VersionSegments{version_rules_from_json(j.at("rules"))};
    if (type == "drop") return encoder::Drop{};
    fail(ErrorKind::kConfig, "unknown encoder type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("malformed encoder choice: ") + e.what());
  }
}

ojson to_json(const FittedEncoders& fitted) {
  ojson j;
  j["format"] = "vulnpred.encoders";
  j["version"] = kFormatVersion;
  j["target"] = fitted.target;
  auto& cols = j["columns"] = ojson::array();
  for (const auto& fc : fitted.columns) {
    ojson cj{{"column", fc.column}};
    std::visit(Overloaded{[&](const FittedPassThrough&) { cj["encoder"] = "passthrough"; },
                          [&](const FittedDrop&) { cj["encoder"] = "drop"; },
                          [&](const FittedMinMax& f) {
                            cj["encoder"] = "minmax";
                            cj.update(minmax_json(f));
                          },
                          [&](const FittedOneHot& f) { cj.update(fitted_block(f)); },
                          [&](const FittedFactorize& f) { cj.update(fitted_block(f)); },
                          [&](const FittedFrequency& f) { cj.update(fitted_block(f)); },
                          [&](const FittedVersion& v) {
                            cj["encoder"] = "version_segments";
                            cj["expected_segments"] = v.expected_segments;
                            cj["malformed_rows"] = v.malformed_rows;
                            auto& segs = cj["segments"] = ojson::array();
                            for (const auto& s : v.segments) {
                              ojson sj{{"segment", s.segment_index}};
                              sj.update(fitted_block(s.encoder));
                              segs.push_back(std::move(sj));
                            }
                          }},
               fc.state);
    cols.push_back(std::move(cj));
  }
  return j;
}

FittedEncoders fitted_encoders_from_json(const ojson& j) {
  try {
    if (j.at("format").get<std::string>() != "vulnpred.encoders") {
      fail(ErrorKind::kConfig, "not an encoders document");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      fail(ErrorKind::kConfig, "unsupported encoders version " + j.at("version").dump());
    }
    FittedEncoders out;
    out.target = j.at("target").get<std::string>();
    for (const auto& cj : j.at("columns")) {
      FittedColumn fc;
      fc.column = cj.at("column").get<std::string>();
      const auto enc = cj.at("encoder").get<std::string>();
      if (enc == "passthrough") {
        fc.state = FittedPassThrough{};
      } else if (enc == "drop") {
        fc.state = FittedDrop{};
      } else if (enc == "minmax") {
        fc.state = minmax_from(cj);
      } else if (enc == "onehot") {
        fc.state = onehot_from(cj);
      } else if (enc == "factorize") {
        fc.state = factorize_from(cj);
      } else if (enc == "frequency") {
        fc.state = frequency_from(cj);
      } else if (enc == "version_segments") {
        FittedVersion v;
        v.expected_segments = cj.at("expected_segments").get<std::size_t>();
        v.malformed_rows = cj.at("malformed_rows").get<std::size_t>();
        for (const auto& sj : cj.at("segments")) {
          FittedSegment s;
          s.segment_index = sj.at("segment").get<std::size_t>();
          const auto se = sj.at("encoder").get<std::string>();
          if (se == "ignore") {
            s.encoder = SegmentIgnore{};
          } else if (se == "alias") {
            s.encoder = SegmentAlias{sj.at("column").get<std::string>()};
          } else if (se == "onehot") {
            s.encoder = onehot_from(sj);
          } else if (se == "factorize") {
            s.encoder = factorize_from(sj);
          } else if (se == "frequency") {
            s.encoder = frequency_from(sj);
          } else {
            fail(ErrorKind::kConfig, "unknown segment encoder '" + se + "'");
          }
          v.segments.push_back(std::move(s));
        }
        fc.state = std::move(v);
      } else {
        fail(ErrorKind::kConfig, "unknown encoder '" + enc + "'");
      }
      out.columns.push_back(std::move(fc));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("malformed encoders document: ") + e.what());
  }
}

std::string format_encoded_csv(const EncodedMatrix& m) {
  std::string out;
  for (std::size_t j = 0; j < m.feature_names.size(); ++j) {
    if (j) out.push_back(',');
    out += csv_escape(m.feature_names[j]);
  }
  const bool with_labels = !m.labels.empty();
  if (with_labels) out += m.feature_names.empty() ? "label" : ",label";
  out.push_back('\n');
  for (std::size_t r = 0; r < m.x.rows(); ++r) {
    for (std::size_t j = 0; j < m.x.cols(); ++j) {
      if (j) out.push_back(',');
      out += format_number(m.x(r, j));
    }
    if (with_labels) {
      if (m.x.cols()) out.push_back(',');
      out += std::to_string(m.labels[r]);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace vulnpred
