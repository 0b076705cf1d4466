#include <algorithm>
#include <cmath>

#include "vulnpred/error.hpp"
#include "vulnpred/rng.hpp"
#include "vulnpred/table.hpp"

namespace vulnpred {

void validate(const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    fail(ErrorKind::kConfig, "split: test_fraction must be in (0,1)");
  }
  if (!(spec.validation_fraction >= 0.0 && spec.validation_fraction < 1.0)) {
    fail(ErrorKind::kConfig, "split: validation_fraction must be in [0,1)");
  }
  if (spec.test_fraction + spec.validation_fraction >= 1.0) {
    fail(ErrorKind::kConfig, "split: test_fraction + validation_fraction must be < 1");
  }
}

SplitIndices split_indices(std::size_t n, std::span<const int> labels, const SplitSpec& spec) {
  validate(spec);
  std::vector<std::vector<std::size_t>> groups;
  if (spec.stratified) {
    if (labels.size() != n) fail(ErrorKind::kSplit, "stratified split needs one label per row");
    groups.resize(2);
    for (std::size_t i = 0; i < n; ++i) groups[labels[i] != 0 ? 1 : 0].push_back(i);
  } else {
    groups.emplace_back(n);
    for (std::size_t i = 0; i < n; ++i) groups[0][i] = i;
  }

  const std::size_t parts = spec.validation_fraction > 0.0 ? 3 : 2;
  Rng rng(spec.seed);
  SplitIndices out;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& idx = groups[g];
    if (idx.empty()) continue;
    if (spec.stratified && idx.size() < parts) {
      fail(ErrorKind::kSplit, "class " + std::to_string(g) + " has " + std::to_string(idx.size()) +
                                  " rows, fewer than the " + std::to_string(parts) +
                                  " partitions requested");
    }
    deterministic_shuffle(idx.begin(), idx.end(), rng);
    const double m = static_cast<double>(idx.size());
    auto n_test = static_cast<std::size_t>(std::llround(m * spec.test_fraction));
    auto n_val = static_cast<std::size_t>(std::llround(m * spec.validation_fraction));
    n_test = std::min(n_test, idx.size());
    n_val = std::min(n_val, idx.size() - n_test);
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + n_test);
    out.validation.insert(out.validation.end(), idx.begin() + n_test, idx.begin() + n_test + n_val);
    out.train.insert(out.train.end(), idx.begin() + n_test + n_val, idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

TableSplit split(const Table& table, const SplitSpec& spec) {
  std::vector<int> labels;
  if (spec.stratified) {
    if (!table.target_index()) fail(ErrorKind::kSplit, "stratified split requires a Target column");
    try {
      labels = table.labels();
    } catch (const Error& e) {
      fail(ErrorKind::kSplit, std::string("stratified split: ") + e.what());
    }
  }
  TableSplit out;
  out.indices = split_indices(table.row_count(), labels, spec);
  out.train = table.select_rows(out.indices.train);
  out.validation = table.select_rows(out.indices.validation);
  out.test = table.select_rows(out.indices.test);
  return out;
}

}  // namespace vulnpred
