#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "vulnpred/matrix.hpp"

namespace vulnpred {

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

struct GnbModel {
  std::array<double, 2> prior{};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> var;  // floored
  double epsilon_var = 0.0;

  std::size_t n_features() const { return mean[0].size(); }
  /// log P(y=c) + sum_j log N(x_j; mean, var)
  double log_joint(std::span<const double> x, int cls) const;
  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Matrix& x) const;
};

/// Variance floor is var_smoothing * (largest per-feature variance), with an
/// absolute fallback of var_smoothing when every feature is constant.
GnbModel fit_gnb(const Matrix& x, std::span<const int> y, double var_smoothing = 1e-9);

// ---------------------------------------------------------------------------
// Logistic regression

enum class Solver { kSag, kSaga };
enum class Penalty { kL2, kL1L2 };

struct LogRegParams {
  Solver solver = Solver::kSaga;
  double C = 1.0;
  std::size_t max_iter = 500;
  double tol = 1e-4;
  Penalty penalty = Penalty::kL2;
  double l1_weight = 0.0;  // only with Penalty::kL1L2
  std::uint64_t seed = 0;
};

void validate(const LogRegParams& p);

struct LogRegModel {
  std::vector<double> weights;
  double intercept = 0.0;
  bool converged = false;
  std::size_t n_iter_run = 0;
  std::vector<double> objective_trace;  // objective after each accepted epoch, [0] at start

  double decision(std::span<const double> x) const;
  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Matrix& x) const;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d w
  double grad_intercept = 0.0;
};

/// loss = mean logloss + ||w||^2 / (2C) + l1_weight * ||w||_1; the l1
/// subgradient at 0 is taken as 0. Intercept unregularized.
LossGrad logreg_loss_grad(std::span<const double> w, double intercept, const Matrix& x,
                          std::span<const int> y, double C, double l1_weight);

/// Stochastic average gradient (SAG) or its proximal variant (SAGA) with a
/// per-sample gradient table. Epochs whose objective rises are rolled back and
/// retried with half the step, so the accepted trace is non-increasing.
LogRegModel fit_logreg(const Matrix& x, std::span<const int> y, const LogRegParams& params);

double sigmoid(double z);
/// Per-sample log loss with probabilities clipped to [1e-15, 1 - 1e-15].
double logloss(std::span<const int> y, std::span<const double> p);

}  // namespace vulnpred
