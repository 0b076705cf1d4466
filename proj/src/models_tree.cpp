#include "vulnpred/models_tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <numeric>
#include <thread>

#include "vulnpred/error.hpp"

namespace vulnpred {

void validate(const TreeParams& p) {
  if (p.max_depth && *p.max_depth == 0) fail(ErrorKind::kConfig, "tree: max_depth must be >= 1");
  if (p.min_samples_leaf == 0) fail(ErrorKind::kConfig, "tree: min_samples_leaf must be >= 1");
}

void validate(const ForestParams& p) {
  if (p.n_estimators == 0) fail(ErrorKind::kConfig, "forest: n_estimators must be >= 1");
  validate(p.tree);
}

std::size_t features_per_node(MaxFeatures mf, std::size_t n_features) {
  switch (mf) {
    case MaxFeatures::kAll:
      return n_features;
    case MaxFeatures::kSqrt:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n_features))));
    case MaxFeatures::kLog2:
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::log2(static_cast<double>(n_features))));
  }
  return n_features;
}

double impurity(std::span<const double> class_counts, Criterion criterion) {
  double total = 0.0;
  for (double c : class_counts) total += c;
  if (!(total > 0)) fail(ErrorKind::kContract, "impurity: counts must sum to a positive value");
  double acc = 0.0;
  for (double c : class_counts) {
    const double p = c / total;
    if (criterion == Criterion::kGini) {
      acc += p * p;
    } else if (p > 0) {
      acc -= p * std::log2(p);
    }
  }
  return criterion == Criterion::kGini ? 1.0 - acc : acc;
}

namespace {

double impurity2(double c0, double c1, Criterion criterion) {
  const double counts[2] = {c0, c1};
  return impurity(counts, criterion);
}

struct Scan {
  std::optional<SplitCandidate> best;

  void offer(std::size_t feature, double threshold, double gain) {
    if (!(gain > kMinGain)) return;
    if (best && !(gain > best->gain + kMinGain)) return;
    best = SplitCandidate{feature, threshold, gain};
  }
};

}  // namespace

std::optional<SplitCandidate> best_split(const Matrix& x, std::span<const int> y,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         const TreeParams& params, Rng& rng) {
  if (rows.size() < 2) return std::nullopt;
  double c1 = 0.0;
  for (auto r : rows) c1 += y[r];
  const double n = static_cast<double>(rows.size());
  const double c0 = n - c1;
  if (c0 == 0 || c1 == 0) return std::nullopt;
  const double parent = impurity2(c0, c1, params.criterion);
  const double min_leaf = static_cast<double>(params.min_samples_leaf);

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  auto gain_of = [&](double l0, double l1) {
    const double nl = l0 + l1;
    const double nr = n - nl;
    return parent - (nl / n) * impurity2(l0, l1, params.criterion) -
           (nr / n) * impurity2(c0 - l0, c1 - l1, params.criterion);
  };

  Scan scan;
  std::vector<std::pair<double, int>> column(rows.size());
  for (std::size_t f : features) {
    if (params.splitter == Splitter::kBest) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x(rows[i], f), y[rows[i]]};
      std::sort(column.begin(), column.end());
      double l0 = 0.0, l1 = 0.0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        (column[i].second ? l1 : l0) += 1.0;
        const double a = column[i].first;
        const double b = column[i + 1].first;
        if (!(a < b)) continue;
        const double nl = l0 + l1;
        if (nl < min_leaf || n - nl < min_leaf) continue;
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        scan.offer(f, mid, gain_of(l0, l1));
      }
    } else {
      double lo = x(rows[0], f), hi = lo;
      for (auto r : rows) {
        lo = std::min(lo, x(r, f));
        hi = std::max(hi, x(r, f));
      }
      if (!(lo < hi)) continue;
      const double threshold = lo + uniform01(rng) * (hi - lo);
      double l0 = 0.0, l1 = 0.0;
      for (auto r : rows) {
        if (x(r, f) <= threshold) (y[r] ? l1 : l0) += 1.0;
      }
      const double nl = l0 + l1;
      if (nl < min_leaf || n - nl < min_leaf) continue;
      scan.offer(f, threshold, gain_of(l0, l1));
    }
  }
  return scan.best;
}

// ---------------------------------------------------------------------------

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  if (nodes_.empty()) fail(ErrorKind::kContract, "tree: no nodes");
  for (const auto& node : nodes_) {
    if (node.is_leaf()) continue;
    const auto count = static_cast<int>(nodes_.size());
    if (node.left <= 0 || node.right <= 0 || node.left >= count || node.right >= count ||
        static_cast<std::size_t>(node.feature) >= n_features_) {
      fail(ErrorKind::kContract, "tree: malformed node links");
    }
  }
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes_) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double DecisionTree::predict_proba(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].prob;
}

std::vector<double> DecisionTree::predict_proba(const Matrix& x) const {
  if (x.cols() != n_features_) fail(ErrorKind::kContract, "tree: feature count mismatch");
  std::vector<double> p(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) p[r] = predict_proba(x.row(r));
  return p;
}

std::vector<double> DecisionTree::feature_importance() const {
  std::vector<double> imp(n_features_, 0.0);
  for (const auto& n : nodes_) {
    if (!n.is_leaf()) imp[static_cast<std::size_t>(n.feature)] += n.gain;
  }
  return imp;
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> y, const TreeParams& params) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree(x, y, rows, params);
}

DecisionTree fit_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                      const TreeParams& params) {
  validate(params);
  if (x.rows() == 0 || rows.empty()) fail(ErrorKind::kContract, "fit_tree: empty training set");
  if (x.rows() != y.size()) fail(ErrorKind::kContract, "fit_tree: X rows != y length");
  if (x.cols() == 0) fail(ErrorKind::kContract, "fit_tree: no features");
  for (double v : x.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::kContract, "fit_tree: non-finite cell in X");
  }

  const std::size_t p = x.cols();
  const std::size_t k = features_per_node(params.max_features, p);
  Rng rng(params.seed);
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), std::size_t{0});

  struct Pending {
    std::size_t node;
    std::vector<std::size_t> rows;
  };
  std::vector<TreeNode> nodes;
  std::deque<Pending> queue;

  auto make_node = [&](std::span<const std::size_t> r, std::size_t depth) {
    TreeNode node;
    double ones = 0.0;
    for (auto i : r) ones += y[i];
    node.n_samples = r.size();
    node.prob = ones / static_cast<double>(r.size());
    node.depth = depth;
    nodes.push_back(node);
    return nodes.size() - 1;
  };

  queue.push_back({make_node(rows, 0), std::vector<std::size_t>(rows.begin(), rows.end())});
  std::vector<std::size_t> candidates;
  while (!queue.empty()) {
    Pending cur = std::move(queue.front());
    queue.pop_front();
    const TreeNode snapshot = nodes[cur.node];
    if (params.max_depth && snapshot.depth >= *params.max_depth) continue;
    if (snapshot.prob == 0.0 || snapshot.prob == 1.0) continue;
    if (cur.rows.size() < 2 * params.min_samples_leaf) continue;

    if (k >= p) {
      candidates = all;
    } else {
      candidates = all;
      for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + uniform_index(rng, p - i);
        std::swap(candidates[i], candidates[j]);
      }
      candidates.resize(k);
    }
    const auto split = best_split(x, y, cur.rows, candidates, params, rng);
    if (!split) continue;

    std::vector<std::size_t> left, right;
    for (auto r : cur.rows) (x(r, split->feature) <= split->threshold ? left : right).push_back(r);
    const std::size_t li = make_node(left, snapshot.depth + 1);
    const std::size_t ri = make_node(right, snapshot.depth + 1);
    TreeNode& node = nodes[cur.node];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = static_cast<int>(li);
    node.right = static_cast<int>(ri);
    node.gain = split->gain * static_cast<double>(snapshot.n_samples);
    queue.push_back({li, std::move(left)});
    queue.push_back({ri, std::move(right)});
  }
  return DecisionTree(std::move(nodes), p);
}

// ---------------------------------------------------------------------------

Forest::Forest(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {
  if (trees_.empty()) fail(ErrorKind::kContract, "forest: no trees");
}

std::vector<double> Forest::predict_proba(const Matrix& x) const {
  std::vector<double> p(x.rows(), 0.0);
  for (const auto& t : trees_) {
    const auto q = t.predict_proba(x);
    for (std::size_t r = 0; r < p.size(); ++r) p[r] += q[r];
  }
  for (auto& v : p) v /= static_cast<double>(trees_.size());
  return p;
}

std::vector<double> Forest::feature_importance() const {
  std::vector<double> imp(trees_.front().n_features(), 0.0);
  for (const auto& t : trees_) {
    const auto ti = t.feature_importance();
    for (std::size_t j = 0; j < imp.size(); ++j) imp[j] += ti[j];
  }
  return imp;
}

Forest fit_forest(const Matrix& x, std::span<const int> y, const ForestParams& params) {
  validate(params);
  if (x.rows() == 0) fail(ErrorKind::kContract, "fit_forest: empty training set");
  const bool bootstrap = params.bootstrap && !params.randomized_thresholds;
  std::vector<DecisionTree> trees(params.n_estimators);

  auto build = [&](std::size_t i) {
    TreeParams tp = params.tree;
    tp.seed = derive_seed(params.seed, i);
    if (params.randomized_thresholds) tp.splitter = Splitter::kRandom;
    std::vector<std::size_t> rows(x.rows());
    if (bootstrap) {
      Rng rng(derive_seed(tp.seed, 0xB007));
      for (auto& r : rows) r = uniform_index(rng, x.rows());
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[i] = fit_tree(x, y, rows, tp);
  };

  const std::size_t n_threads = std::clamp<std::size_t>(params.n_threads, 1, params.n_estimators);
  if (n_threads == 1) {
    for (std::size_t i = 0; i < params.n_estimators; ++i) build(i);
  } else {
    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < params.n_estimators; i += n_threads) build(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return Forest(std::move(trees));
}

}  // namespace vulnpred
