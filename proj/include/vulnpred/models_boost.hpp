#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulnpred/matrix.hpp"
#include "vulnpred/rng.hpp"

namespace vulnpred {

class Classifier;

// ---------------------------------------------------------------------------
// Binning

struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> edges;  // per feature, strictly increasing
  std::vector<std::uint16_t> bins;         // column-major: bins[f * rows + r]

  std::size_t n_bins(std::size_t f) const { return edges[f].size() + 1; }
  std::uint16_t bin(std::size_t r, std::size_t f) const { return bins[f * rows + r]; }
};

/// bin(v) = number of edges <= v, so bin <= t  <=>  v < edges[t].
std::size_t bin_index(std::span<const double> edges, double v);

/// Features with <= max_bin distinct values get one bin per value (edges at
/// midpoints); others get quantile edges over the sorted column.
BinnedMatrix bin_features(const Matrix& x, std::size_t max_bin);
BinnedMatrix apply_bins(const std::vector<std::vector<double>>& edges, const Matrix& x);

// ---------------------------------------------------------------------------
// Loss pieces

struct GradHess {
  std::vector<double> g;
  std::vector<double> h;
};

GradHess grad_hess_logloss(std::span<const int> y, std::span<const double> scores);

/// -sign(G) * max(|G| - alpha, 0) / (H + lambda)
double leaf_weight(double G, double H, double l2_lambda, double l1_alpha);
/// min over w of G*w + (H + lambda) * w^2 / 2 + alpha * |w|
double leaf_objective(double G, double H, double l2_lambda, double l1_alpha);
/// objective(parent) - objective(left) - objective(right)
double split_gain(double GL, double HL, double GR, double HR, double l2_lambda, double l1_alpha);

struct GossSample {
  std::vector<std::size_t> indices;  // ascending
  std::vector<double> weights;       // aligned with indices
};

/// Keeps floor(a_top*n) rows with the largest |g| and a uniform
/// floor(b_rest*n) of the rest, weighted (1 - a_top) / b_rest.
GossSample goss_sample(std::span<const double> g, double a_top, double b_rest, Rng& rng);

// ---------------------------------------------------------------------------
// Boosted trees

enum class Growth { kDepthWise, kLeafWise };
enum class EvalMetric { kError, kLogloss };

struct NoSampling {
  friend bool operator==(const NoSampling&, const NoSampling&) = default;
};
struct GossSampling {
  double a_top = 0.2;
  double b_rest = 0.1;
  friend bool operator==(const GossSampling&, const GossSampling&) = default;
};
struct BaggingSampling {
  double fraction = 1.0;
  std::size_t freq = 1;  // redraw every freq rounds
  std::uint64_t seed = 3;
  friend bool operator==(const BaggingSampling&, const BaggingSampling&) = default;
};
using RowSampling = std::variant<NoSampling, GossSampling, BaggingSampling>;

struct GbdtParams {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  std::optional<std::size_t> max_depth = 6;
  std::size_t num_leaves = 0;  // leaf-wise only
  Growth growth = Growth::kDepthWise;
  std::size_t max_bin = 256;
  double l2_lambda = 1.0;
  double l1_alpha = 0.0;
  double min_split_gain = 0.0;
  double min_child_weight = 1e-3;
  RowSampling row_sampling = NoSampling{};
  double feature_fraction = 1.0;
  std::size_t early_stopping_rounds = 0;
  std::vector<EvalMetric> eval_metrics{EvalMetric::kError, EvalMetric::kLogloss};
  std::uint64_t seed = 0;
};

void validate(const GbdtParams& p);

struct RegNode {
  int feature = -1;
  double threshold = 0.0;  // x < threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, learning rate applied
  double gain = 0.0;
  double cover = 0.0;  // sum of hessians
  friend bool operator==(const RegNode&, const RegNode&) = default;
};

struct RegTree {
  std::vector<RegNode> nodes;
  double predict(std::span<const double> x) const;
  std::size_t leaf_count() const;
  std::size_t depth() const;
  friend bool operator==(const RegTree&, const RegTree&) = default;
};

struct RoundMetrics {
  double train_error = 0.0;
  double train_logloss = 0.0;
  std::optional<double> val_error;
  std::optional<double> val_logloss;
};

struct BoostHistory {
  std::vector<RoundMetrics> rounds;
  std::size_t best_round = 0;  // trees kept in the model
  bool stopped_early = false;
  std::vector<EvalMetric> metrics{EvalMetric::kError, EvalMetric::kLogloss};
};

class GbdtModel {
 public:
  GbdtModel() = default;
  GbdtModel(double base_score, std::vector<RegTree> trees, std::size_t n_features);

  double base_score() const { return base_score_; }
  const std::vector<RegTree>& trees() const { return trees_; }
  std::size_t n_features() const { return n_features_; }

  /// Raw score using the first `n_trees` trees (all when nullopt).
  double decision(std::span<const double> x, std::optional<std::size_t> n_trees = std::nullopt) const;
  std::vector<double> predict_proba(const Matrix& x,
                                    std::optional<std::size_t> n_trees = std::nullopt) const;
  /// Total split gain per feature.
  std::vector<double> feature_importance() const;

 private:
  double base_score_ = 0.0;
  std::vector<RegTree> trees_;
  std::size_t n_features_ = 0;
};

struct EvalSet {
  const Matrix& x;
  std::span<const int> y;
};

struct GbdtFit {
  GbdtModel model;
  BoostHistory history;
};

GbdtFit fit_gbdt(const Matrix& x, std::span<const int> y, const GbdtParams& params,
                 std::optional<EvalSet> eval_set = std::nullopt);

std::string format_history_csv(const BoostHistory& history);

// ---------------------------------------------------------------------------
// Stacking

struct BaseLearnerSpec {
  std::string family;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::optional<std::vector<std::size_t>> features;  // column subset, all when empty
};

struct StackingSpec {
  std::vector<BaseLearnerSpec> bases;
  GbdtParams meta;
  std::size_t oof_folds = 5;
  double meta_holdout = 0.2;  // used only when meta has early stopping
  std::uint64_t seed = 0;
};

void validate(const StackingSpec& spec);

class StackingModel {
 public:
  StackingModel();
  StackingModel(std::vector<std::unique_ptr<Classifier>> bases,
                std::vector<std::optional<std::vector<std::size_t>>> features, GbdtModel meta,
                BoostHistory meta_history);
  StackingModel(StackingModel&&) noexcept;
  StackingModel& operator=(StackingModel&&) noexcept;
  ~StackingModel();

  std::size_t n_bases() const { return bases_.size(); }
  const Classifier& base(std::size_t i) const { return *bases_[i]; }
  const std::optional<std::vector<std::size_t>>& base_features(std::size_t i) const {
    return features_[i];
  }
  const GbdtModel& meta() const { return meta_; }
  const BoostHistory& meta_history() const { return meta_history_; }

  /// (rows, n_bases) matrix of base class-1 probabilities.
  Matrix base_outputs(const Matrix& x) const;
  std::vector<double> predict_proba(const Matrix& x) const;

 private:
  std::vector<std::unique_ptr<Classifier>> bases_;
  std::vector<std::optional<std::vector<std::size_t>>> features_;
  GbdtModel meta_;
  BoostHistory meta_history_;
};

/// Out-of-fold base probabilities, shape (rows, n_bases).
Matrix stacking_oof(const Matrix& x, std::span<const int> y, const StackingSpec& spec);

StackingModel fit_stacking(const Matrix& x, std::span<const int> y, const StackingSpec& spec);

/// Total split gain per feature of a boosted model (meta inputs for stacking).
std::vector<double> feature_importance(const GbdtModel& model);
std::vector<double> feature_importance(const StackingModel& model);

}  // namespace vulnpred
