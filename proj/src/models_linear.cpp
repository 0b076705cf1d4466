#include "vulnpred/models_linear.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "vulnpred/error.hpp"
#include "vulnpred/rng.hpp"

namespace vulnpred {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logloss(std::span<const int> y, std::span<const double> p) {
  if (y.size() != p.size()) fail(ErrorKind::kContract, "logloss: length mismatch");
  if (y.empty()) fail(ErrorKind::kContract, "logloss: empty input");
  constexpr double eps = 1e-15;
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p[i], eps, 1.0 - eps);
    sum -= y[i] ? std::log(q) : std::log1p(-q);
  }
  return sum / static_cast<double>(y.size());
}

namespace {

void check_xy(const Matrix& x, std::span<const int> y, const char* who) {
  if (x.rows() != y.size()) fail(ErrorKind::kContract, std::string(who) + ": X rows != y length");
  if (x.rows() == 0) fail(ErrorKind::kContract, std::string(who) + ": empty training set");
  for (double v : x.values()) {
    if (!std::isfinite(v)) fail(ErrorKind::kContract, std::string(who) + ": non-finite cell in X");
  }
  for (int v : y) {
    if (v != 0 && v != 1) fail(ErrorKind::kContract, std::string(who) + ": labels must be 0/1");
  }
}

// log(1 + exp(-m)) for margin m, stable.
double softplus_neg(double m) {
  return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

}  // namespace

// ---------------------------------------------------------------------------
// GNB

double GnbModel::log_joint(std::span<const double> x, int cls) const {
  const auto& mu = mean[cls];
  const auto& v = var[cls];
  double acc = std::log(prior[cls]);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double d = x[j] - mu[j];
    acc -= 0.5 * (std::log(2.0 * std::numbers::pi * v[j]) + d * d / v[j]);
  }
  return acc;
}

double GnbModel::predict_proba(std::span<const double> x) const {
  const double l0 = log_joint(x, 0);
  const double l1 = log_joint(x, 1);
  return sigmoid(l1 - l0);
}

std::vector<double> GnbModel::predict_proba(const Matrix& x) const {
  if (x.cols() != n_features()) fail(ErrorKind::kContract, "gnb: feature count mismatch");
  std::vector<double> p(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) p[r] = predict_proba(x.row(r));
  return p;
}

GnbModel fit_gnb(const Matrix& x, std::span<const int> y, double var_smoothing) {
  check_xy(x, y, "fit_gnb");
  if (!(var_smoothing > 0)) fail(ErrorKind::kConfig, "gnb: var_smoothing must be > 0");
  const std::size_t p = x.cols();
  std::array<std::size_t, 2> count{};
  GnbModel m;
  for (int c = 0; c < 2; ++c) {
    m.mean[c].assign(p, 0.0);
    m.var[c].assign(p, 0.0);
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int c = y[r];
    ++count[c];
    for (std::size_t j = 0; j < p; ++j) m.mean[c][j] += x(r, j);
  }
  if (count[0] == 0 || count[1] == 0) {
    fail(ErrorKind::kDegenerate, "gnb: training labels contain a single class");
  }
  for (int c = 0; c < 2; ++c) {
    for (auto& v : m.mean[c]) v /= static_cast<double>(count[c]);
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int c = y[r];
    for (std::size_t j = 0; j < p; ++j) {
      const double d = x(r, j) - m.mean[c][j];
      m.var[c][j] += d * d;
    }
  }
  // overall per-feature variance sets the floor
  double max_var = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    double mu = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mu += x(r, j);
    mu /= static_cast<double>(x.rows());
    double s = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) s += (x(r, j) - mu) * (x(r, j) - mu);
    max_var = std::max(max_var, s / static_cast<double>(x.rows()));
  }
  m.epsilon_var = max_var > 0 ? var_smoothing * max_var : var_smoothing;
  for (int c = 0; c < 2; ++c) {
    for (auto& v : m.var[c]) v = v / static_cast<double>(count[c]) + m.epsilon_var;
  }
  const double n = static_cast<double>(x.rows());
  m.prior = {static_cast<double>(count[0]) / n, static_cast<double>(count[1]) / n};
  return m;
}

// ---------------------------------------------------------------------------
// Logistic regression

void validate(const LogRegParams& p) {
  if (!(p.C > 0) || !std::isfinite(p.C)) fail(ErrorKind::kConfig, "logreg: C must be a positive number");
  if (p.max_iter == 0) fail(ErrorKind::kConfig, "logreg: max_iter must be >= 1");
  if (!(p.tol >= 0)) fail(ErrorKind::kConfig, "logreg: tol must be >= 0");
  if (!(p.l1_weight >= 0)) fail(ErrorKind::kConfig, "logreg: l1_weight must be >= 0");
  if (p.penalty == Penalty::kL2 && p.l1_weight > 0) {
    fail(ErrorKind::kConfig, "logreg: l1_weight > 0 needs penalty l1_l2");
  }
  if (p.l1_weight > 0 && p.solver != Solver::kSaga) {
    fail(ErrorKind::kConfig, "logreg: an l1 term requires the saga solver");
  }
}

double LogRegModel::decision(std::span<const double> x) const {
  return std::inner_product(weights.begin(), weights.end(), x.begin(), intercept);
}

double LogRegModel::predict_proba(std::span<const double> x) const { return sigmoid(decision(x)); }

std::vector<double> LogRegModel::predict_proba(const Matrix& x) const {
  if (x.cols() != weights.size()) fail(ErrorKind::kContract, "logreg: feature count mismatch");
  std::vector<double> p(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) p[r] = predict_proba(x.row(r));
  return p;
}

LossGrad logreg_loss_grad(std::span<const double> w, double intercept, const Matrix& x,
                          std::span<const int> y, double C, double l1_weight) {
  if (x.rows() != y.size() || x.cols() != w.size()) {
    fail(ErrorKind::kContract, "logreg_loss_grad: shape mismatch");
  }
  if (x.rows() == 0) fail(ErrorKind::kContract, "logreg_loss_grad: empty input");
  const double n = static_cast<double>(x.rows());
  LossGrad out;
  out.grad.assign(w.size(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const double z = std::inner_product(w.begin(), w.end(), row.begin(), intercept);
    const double s = y[r] ? 1.0 : -1.0;
    out.loss += softplus_neg(s * z);
    const double d = sigmoid(z) - y[r];
    for (std::size_t j = 0; j < w.size(); ++j) out.grad[j] += d * row[j];
    out.grad_intercept += d;
  }
  out.loss /= n;
  out.grad_intercept /= n;
  for (std::size_t j = 0; j < w.size(); ++j) {
    out.grad[j] = out.grad[j] / n + w[j] / C;
    out.loss += w[j] * w[j] / (2.0 * C) + l1_weight * std::abs(w[j]);
    if (w[j] > 0) out.grad[j] += l1_weight;
    if (w[j] < 0) out.grad[j] -= l1_weight;
  }
  return out;
}

namespace {

double objective(const std::vector<double>& w, double b, const Matrix& x, std::span<const int> y,
                 double C, double l1) {
  double loss = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const double z = std::inner_product(w.begin(), w.end(), row.begin(), b);
    loss += softplus_neg(y[r] ? z : -z);
  }
  loss /= static_cast<double>(x.rows());
  for (double v : w) loss += v * v / (2.0 * C) + l1 * std::abs(v);
  return loss;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct SagState {
  std::vector<double> w;
  double b = 0.0;
  std::vector<double> memory;  // sigmoid(z_i) - y_i at last visit
  std::vector<double> avg;     // (1/n) sum memory_i * x_i
  double avg_b = 0.0;
};

}  // namespace

LogRegModel fit_logreg(const Matrix& x, std::span<const int> y, const LogRegParams& params) {
  validate(params);
  check_xy(x, y, "fit_logreg");
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  const double nd = static_cast<double>(n);
  const double C = params.C;
  const double l1 = params.l1_weight;

  double max_sq = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = x.row(r);
    max_sq = std::max(max_sq, std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
  }
  const double lipschitz = 0.25 * (max_sq + 1.0) + 1.0 / C;
  double step = params.solver == Solver::kSag ? 1.0 / lipschitz : 1.0 / (3.0 * lipschitz);

  SagState st;
  st.w.assign(p, 0.0);
  st.memory.resize(n);
  st.avg.assign(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    st.memory[r] = 0.5 - y[r];
    const auto row = x.row(r);
    for (std::size_t j = 0; j < p; ++j) st.avg[j] += st.memory[r] * row[j] / nd;
    st.avg_b += st.memory[r] / nd;
  }

  LogRegModel model;
  double current = objective(st.w, st.b, x, y, C, l1);
  model.objective_trace.push_back(current);
  std::vector<std::size_t> order(n);
  std::size_t epoch = 0;
  std::size_t attempt = 0;
  while (epoch < params.max_iter) {
    SagState trial = st;
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(params.seed, attempt++));
    deterministic_shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto row = x.row(i);
      const double z = std::inner_product(trial.w.begin(), trial.w.end(), row.begin(), trial.b);
      const double d = sigmoid(z) - y[i];
      const double delta = d - trial.memory[i];
      trial.memory[i] = d;
      if (params.solver == Solver::kSag) {
        for (std::size_t j = 0; j < p; ++j) {
          trial.avg[j] += delta * row[j] / nd;
          trial.w[j] -= step * (trial.avg[j] + trial.w[j] / C);
        }
        trial.avg_b += delta / nd;
        trial.b -= step * trial.avg_b;
      } else {
        for (std::size_t j = 0; j < p; ++j) {
          const double g = delta * row[j] + trial.avg[j] + trial.w[j] / C;
          trial.avg[j] += delta * row[j] / nd;
          trial.w[j] = soft_threshold(trial.w[j] - step * g, step * l1);
        }
        trial.b -= step * (delta + trial.avg_b);
        trial.avg_b += delta / nd;
      }
    }
    const double next = objective(trial.w, trial.b, x, y, C, l1);
    if (!std::isfinite(next)) {
      fail(ErrorKind::kDivergence, "logreg: non-finite objective at epoch " + std::to_string(epoch + 1));
    }
    ++epoch;
    if (next > current) {
      step *= 0.5;  // reject the epoch, retry from the same point
      continue;
    }
    double max_change = 0.0, max_w = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      max_change = std::max(max_change, std::abs(trial.w[j] - st.w[j]));
      max_w = std::max(max_w, std::abs(trial.w[j]));
    }
    max_change = std::max(max_change, std::abs(trial.b - st.b));
    max_w = std::max(max_w, std::abs(trial.b));
    st = std::move(trial);
    current = next;
    model.objective_trace.push_back(current);
    if (max_change <= params.tol * std::max(1.0, max_w)) {
      model.converged = true;
      break;
    }
  }
  model.weights = std::move(st.w);
  model.intercept = st.b;
  model.n_iter_run = epoch;
  return model;
}

}  // namespace vulnpred
