#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "vulnpred/error.hpp"
#include "vulnpred/rng.hpp"
#include "vulnpred/table.hpp"

namespace vulnpred {

namespace {

std::string numeric_name(std::size_t i) { return "num_" + std::to_string(i); }
std::string categorical_name(std::size_t i) { return "cat_" + std::to_string(i); }
std::string binary_name(std::size_t i) { return "bin_" + std::to_string(i); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void validate(const SynthSpec& spec) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < spec.n_numeric; ++i) names.push_back(numeric_name(i));
  for (std::size_t i = 0; i < spec.categorical_cardinalities.size(); ++i) {
    if (spec.categorical_cardinalities[i] == 0) {
      fail(ErrorKind::kConfig, "synth: categorical cardinality must be >= 1");
    }
    names.push_back(categorical_name(i));
  }
  for (std::size_t i = 0; i < spec.n_binary; ++i) names.push_back(binary_name(i));
  auto known = [&](const std::string& n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };
  for (const auto& [name, w] : spec.signal_weights) {
    if (!known(name)) fail(ErrorKind::kConfig, "synth: signal weight for unknown column '" + name + "'");
    if (!std::isfinite(w)) fail(ErrorKind::kConfig, "synth: non-finite weight for '" + name + "'");
  }
  for (const auto& [name, rate] : spec.missing_rates) {
    if (!known(name)) fail(ErrorKind::kConfig, "synth: missing rate for unknown column '" + name + "'");
    if (!(rate >= 0.0 && rate <= 1.0)) {
      fail(ErrorKind::kConfig, "synth: missing rate for '" + name + "' must be in [0,1]");
    }
  }
  if (spec.noise_scale < 0.0) fail(ErrorKind::kConfig, "synth: noise_scale must be >= 0");
  if (spec.category_skew < 0.0) fail(ErrorKind::kConfig, "synth: category_skew must be >= 0");
}

SynthData synth_generate(const SynthSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n_rows;
  Rng feature_rng(derive_seed(spec.seed, 1));
  Rng effect_rng(derive_seed(spec.seed, 2));
  Rng label_rng(derive_seed(spec.seed, 3));
  Rng missing_rng(derive_seed(spec.seed, 4));
  std::normal_distribution<double> normal(0.0, 1.0);

  auto weight_of = [&](const std::string& name) {
    auto it = spec.signal_weights.find(name);
    return it == spec.signal_weights.end() ? 0.0 : it->second;
  };

  std::vector<double> logit(n, spec.intercept);
  std::vector<Column> columns;

  if (spec.with_identifier) {
    TextValues ids(n);
    for (std::size_t r = 0; r < n; ++r) {
      char buf[24];
      std::snprintf(buf, sizeof(buf), "m%016llx",
                    static_cast<unsigned long long>(derive_seed(spec.seed, 1000 + r)));
      ids[r] = buf;
    }
    columns.push_back(Column::text(std::string(kSynthIdName), ColumnKind::kIdentifier, std::move(ids)));
  }

  for (std::size_t i = 0; i < spec.n_numeric; ++i) {
    const auto name = numeric_name(i);
    const double w = weight_of(name);
    NumericValues v(n);
    for (std::size_t r = 0; r < n; ++r) {
      v[r] = normal(feature_rng);
      logit[r] += w * v[r];
    }
    columns.push_back(Column::numeric(name, ColumnKind::kNumerical, std::move(v)));
  }

  for (std::size_t i = 0; i < spec.categorical_cardinalities.size(); ++i) {
    const auto name = categorical_name(i);
    const double w = weight_of(name);
    const std::size_t k = spec.categorical_cardinalities[i];
    std::vector<double> effect(k);
    for (auto& e : effect) e = normal(effect_rng);
    std::vector<double> cdf(k);
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      acc += 1.0 / std::pow(static_cast<double>(c + 1), spec.category_skew);
      cdf[c] = acc;
    }
    TextValues v(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double u = uniform01(feature_rng) * acc;
      auto c = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      c = std::min(c, k - 1);
      v[r] = "v" + std::to_string(c);
      logit[r] += w * effect[c];
    }
    columns.push_back(Column::text(name, ColumnKind::kCategorical, std::move(v)));
  }

  for (std::size_t i = 0; i < spec.n_binary; ++i) {
    const auto name = binary_name(i);
    const double w = weight_of(name);
    NumericValues v(n);
    for (std::size_t r = 0; r < n; ++r) {
      v[r] = uniform01(feature_rng) < 0.5 ? 0.0 : 1.0;
      logit[r] += w * (v[r] - 0.5);
    }
    columns.push_back(Column::numeric(name, ColumnKind::kBinary, std::move(v)));
  }

  NumericValues target(n);
  std::size_t bayes_hits = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double noisy = logit[r] + spec.noise_scale * normal(label_rng);
    target[r] = uniform01(label_rng) < sigmoid(noisy) ? 1.0 : 0.0;
    const double guess = logit[r] > 0.0 ? 1.0 : 0.0;
    if (guess == target[r]) ++bayes_hits;
  }

  for (auto& col : columns) {
    auto it = spec.missing_rates.find(col.name);
    if (it == spec.missing_rates.end() || it->second == 0.0) continue;
    for (std::size_t r = 0; r < n; ++r) {
      if (uniform01(missing_rng) < it->second) {
        col.missing[r] = 1;
        std::visit([r](auto& vals) { vals[r] = {}; }, col.values);
      }
    }
  }

  columns.push_back(Column::numeric(std::string(kSynthTargetName), ColumnKind::kTarget, std::move(target)));

  SynthData out;
  out.table = Table(std::move(columns));
  out.bayes_accuracy = n ? static_cast<double>(bayes_hits) / static_cast<double>(n) : 0.0;
  out.true_logit = std::move(logit);
  return out;
}

}  // namespace vulnpred
