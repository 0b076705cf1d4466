#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vulnpred/matrix.hpp"
#include "vulnpred/rng.hpp"

namespace vulnpred {

enum class Criterion { kGini, kEntropy };
enum class Splitter { kBest, kRandom };
enum class MaxFeatures { kAll, kSqrt, kLog2 };

struct TreeParams {
  Criterion criterion = Criterion::kGini;
  std::optional<std::size_t> max_depth;  // nullopt: grow until pure
  Splitter splitter = Splitter::kBest;
  MaxFeatures max_features = MaxFeatures::kAll;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
};

void validate(const TreeParams& p);

/// Features considered at each node for a total of `n_features`.
std::size_t features_per_node(MaxFeatures mf, std::size_t n_features);

/// gini = 1 - sum p^2, entropy = -sum p log2 p.
double impurity(std::span<const double> class_counts, Criterion criterion);

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;  // rows with x <= threshold go left
  double gain = 0.0;       // parent impurity - size-weighted child impurity
};

/// Splits with gain at or below this are treated as no split.
inline constexpr double kMinGain = 1e-12;

/// Best splitter: every midpoint between consecutive distinct values.
/// Random splitter: one uniform threshold in [min, max) per feature.
/// Ties (within kMinGain) keep the lowest feature, then the lowest threshold.
std::optional<SplitCandidate> best_split(const Matrix& x, std::span<const int> y,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> candidate_features,
                                         const TreeParams& params, Rng& rng);

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double prob = 0.0;  // class-1 fraction of the node's training rows
  std::size_t n_samples = 0;
  double gain = 0.0;  // impurity decrease * n_samples, internal nodes only
  std::size_t depth = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  explicit DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Matrix& x) const;
  /// Sum of weighted impurity decrease per feature.
  std::vector<double> feature_importance() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
  std::size_t n_features_ = 0;
};

/// Nodes are expanded breadth-first. `rows` may repeat indices (bootstrap).
DecisionTree fit_tree(const Matrix& x, std::span<const int> y, const TreeParams& params);
DecisionTree fit_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> rows,
                      const TreeParams& params);

struct ForestParams {
  std::size_t n_estimators = 100;
  TreeParams tree;
  bool bootstrap = true;
  bool randomized_thresholds = false;  // extra-trees: no bootstrap, random splitter
  std::uint64_t seed = 0;
  std::size_t n_threads = 1;
};

void validate(const ForestParams& p);

/// Tree i uses seed derive_seed(seed, i), so results do not depend on n_threads.
class Forest {
 public:
  Forest() = default;
  explicit Forest(std::vector<DecisionTree> trees);

  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::vector<double> predict_proba(const Matrix& x) const;
  std::vector<double> feature_importance() const;

 private:
  std::vector<DecisionTree> trees_;
};

Forest fit_forest(const Matrix& x, std::span<const int> y, const ForestParams& params);

}  // namespace vulnpred
