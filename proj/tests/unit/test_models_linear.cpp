#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "vulnpred/error.hpp"
#include "vulnpred/models_linear.hpp"
#include "vulnpred/table.hpp"

using namespace vulnpred;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::vector<std::vector<double>> random_rows(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> rows(n, std::vector<double>(p));
  for (auto& r : rows) {
    for (auto& v : r) v = nd(rng);
  }
  return rows;
}

double max_population_variance(const std::vector<std::vector<double>>& rows) {
  double best = 0;
  for (std::size_t j = 0; j < rows[0].size(); ++j) {
    double mu = 0, s = 0;
    for (const auto& r : rows) mu += r[j];
    mu /= static_cast<double>(rows.size());
    for (const auto& r : rows) s += (r[j] - mu) * (r[j] - mu);
    best = std::max(best, s / static_cast<double>(rows.size()));
  }
  return best;
}

}  // namespace

TEST(Gnb, SymmetricClassesGiveHalf) {
  const Matrix x(4, 1, std::vector<double>{-2, -1, 1, 2});
  const std::vector<int> y{0, 0, 1, 1};
  const auto m = fit_gnb(x, y);
  const std::vector<double> zero{0.0};
  EXPECT_NEAR(m.predict_proba(zero), 0.5, 1e-15);
}

TEST(Gnb, SixPointHandOracle) {
  const std::vector<std::vector<double>> rows{{0.0, 1.0}, {0.5, 2.0}, {1.0, 0.5},
                                              {2.0, 1.5}, {2.5, 3.0}, {3.5, 2.0}};
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const auto m = fit_gnb(to_matrix(rows), y, 1e-9);
  const double eps = 1e-9 * max_population_variance(rows);
  const std::vector<std::vector<double>> probes{{0, 0}, {1.5, 1.5}, {3, 3}, {2, 0.5}, {-1, 4}};
  for (const auto& q : probes) {
    EXPECT_NEAR(m.predict_proba(q), oracle::gnb_posterior(rows, y, q, eps), 1e-9);
  }
  EXPECT_NEAR(m.prior[0] + m.prior[1], 1.0, 1e-15);
}

TEST(Gnb, FeaturePermutationInvariant) {
  std::mt19937_64 rng(4);
  auto rows = random_rows(60, 4, rng);
  std::vector<int> y(60);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rows[i][0] + 0.5 * rows[i][2] > 0;
  auto permuted = rows;
  for (auto& r : permuted) r = {r[3], r[1], r[0], r[2]};
  const auto a = fit_gnb(to_matrix(rows), y).predict_proba(to_matrix(rows));
  const auto b = fit_gnb(to_matrix(permuted), y).predict_proba(to_matrix(permuted));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Gnb, ConstantFeatureAndSingleClass) {
  const Matrix x(4, 2, std::vector<double>{1, 0, 1, 1, 1, 2, 1, 3});
  const std::vector<int> y{0, 0, 1, 1};
  const auto m = fit_gnb(x, y);
  EXPECT_GT(m.var[0][0], 0.0);
  for (double p : m.predict_proba(x)) EXPECT_TRUE(std::isfinite(p));
  const std::vector<int> one{1, 1, 1, 1};
  try {
    fit_gnb(x, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerate);
  }
}

TEST(LogRegLoss, BalancedZeroWeightsIsLn2) {
  const Matrix x(4, 2, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
  const std::vector<int> y{0, 1, 0, 1};
  const std::vector<double> w{0, 0};
  EXPECT_NEAR(logreg_loss_grad(w, 0.0, x, y, 1.0, 0.0).loss, std::log(2.0), 1e-15);
}

TEST(LogRegLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  const auto rows = random_rows(20, 5, rng);
  const Matrix x = to_matrix(rows);
  std::vector<int> y(20);
  for (auto& v : y) v = static_cast<int>(rng() % 2);
  std::normal_distribution<double> nd;
  for (double l1 : {0.0, 0.05}) {
    std::vector<double> w(5);
    for (auto& v : w) v = nd(rng);
    const double b = nd(rng);
    const double C = 0.7;
    const auto lg = logreg_loss_grad(w, b, x, y, C, l1);
    EXPECT_NEAR(lg.loss, oracle::logreg_objective(w, b, rows, y, C, l1), 1e-12);
    const double h = 1e-6;
    for (std::size_t j = 0; j < w.size(); ++j) {
      auto wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd =
          (oracle::logreg_objective(wp, b, rows, y, C, l1) - oracle::logreg_objective(wm, b, rows, y, C, l1)) /
          (2 * h);
      EXPECT_LT(std::abs(fd - lg.grad[j]), 1e-4 * std::max(1.0, std::abs(fd))) << j;
    }
    const double fd_b =
        (oracle::logreg_objective(w, b + h, rows, y, C, l1) - oracle::logreg_objective(w, b - h, rows, y, C, l1)) /
        (2 * h);
    EXPECT_LT(std::abs(fd_b - lg.grad_intercept), 1e-4 * std::max(1.0, std::abs(fd_b)));
  }
}

TEST(LogRegLoss, LargeCIsPureLogLoss) {
  std::mt19937_64 rng(9);
  const auto rows = random_rows(30, 3, rng);
  std::vector<int> y(30);
  for (auto& v : y) v = static_cast<int>(rng() % 2);
  const std::vector<double> w{0.3, -1.2, 2.0};
  const auto m = to_matrix(rows);
  const double pure = oracle::logreg_objective(w, 0.1, rows, y, 1e300, 0.0);
  EXPECT_NEAR(logreg_loss_grad(w, 0.1, m, y, 1e12, 0.0).loss, pure, 1e-10);
}

TEST(LogRegFit, SeparableReachesFullAccuracy) {
  const Matrix x(6, 2, std::vector<double>{0, 0, 0.2, 0.1, 0.1, 0.3, 1, 1, 0.9, 0.8, 0.8, 1.0});
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  LogRegParams p;
  p.C = 1e4;
  p.max_iter = 2000;
  const auto m = fit_logreg(x, y, p);
  const auto proba = m.predict_proba(x);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(proba[i] >= 0.5, y[i] == 1) << i;
}

TEST(LogRegFit, MonotoneTraceBeatsZeroAndDeterministic) {
  std::mt19937_64 rng(10);
  const auto rows = random_rows(400, 6, rng);
  std::vector<int> y(400);
  std::uniform_real_distribution<double> u;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = u(rng) < sigmoid(1.5 * rows[i][0] - rows[i][3]);
  }
  const Matrix x = to_matrix(rows);
  for (auto solver : {Solver::kSag, Solver::kSaga}) {
    LogRegParams p;
    p.solver = solver;
    p.C = 10.0;
    p.max_iter = 100;
    p.seed = 3;
    if (solver == Solver::kSaga) {
      p.penalty = Penalty::kL1L2;
      p.l1_weight = 0.001;
    }
    const auto m = fit_logreg(x, y, p);
    ASSERT_FALSE(m.objective_trace.empty());
    for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
      EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] + 1e-8);
    }
    const std::vector<double> zero(6, 0.0);
    const double at_zero = logreg_loss_grad(zero, 0.0, x, y, p.C, p.l1_weight).loss;
    EXPECT_LE(logreg_loss_grad(m.weights, m.intercept, x, y, p.C, p.l1_weight).loss, at_zero);
    const auto again = fit_logreg(x, y, p);
    EXPECT_EQ(again.weights, m.weights);
    EXPECT_EQ(again.intercept, m.intercept);
    for (double w : m.weights) EXPECT_TRUE(std::isfinite(w));
  }
}

TEST(LogRegFit, ProbabilityMonotoneInProjection) {
  std::mt19937_64 rng(12);
  const auto rows = random_rows(200, 3, rng);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = rows[i][1] > 0;
  LogRegParams p;
  p.C = 100;
  p.max_iter = 50;
  const auto m = fit_logreg(to_matrix(rows), y, p);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double da = m.decision(rows[i]), db = m.decision(rows[i + 1]);
    const double pa = m.predict_proba(rows[i]), pb = m.predict_proba(rows[i + 1]);
    if (da < db) EXPECT_LE(pa, pb);
    if (da > db) EXPECT_GE(pa, pb);
  }
}

TEST(LogRegFit, RecoversSignalSigns) {
  SynthSpec spec;
  spec.n_rows = 50000;
  spec.n_numeric = 5;
  spec.categorical_cardinalities = {};
  spec.n_binary = 0;
  spec.with_identifier = false;
  spec.signal_weights = {{"num_0", 1.2}, {"num_2", -0.8}, {"num_4", 0.5}};
  spec.seed = 21;
  const auto d = synth_generate(spec);
  Matrix x(spec.n_rows, 5);
  for (std::size_t j = 0; j < 5; ++j) {
    const auto& col = d.table.column("num_" + std::to_string(j)).numbers();
    for (std::size_t r = 0; r < spec.n_rows; ++r) x(r, j) = col[r];
  }
  LogRegParams p;
  p.C = 1e4;
  p.max_iter = 30;
  const auto m = fit_logreg(x, d.table.labels(), p);
  EXPECT_GT(m.weights[0], 0.0);
  EXPECT_LT(m.weights[2], 0.0);
  EXPECT_GT(m.weights[4], 0.0);
}

TEST(LogRegParamsCheck, Validation) {
  LogRegParams p;
  p.C = 0;
  EXPECT_THROW(validate(p), Error);
  p = {};
  p.solver = Solver::kSag;
  p.penalty = Penalty::kL1L2;
  p.l1_weight = 0.1;
  EXPECT_THROW(validate(p), Error);
  p.solver = Solver::kSaga;
  EXPECT_NO_THROW(validate(p));
}

TEST(LogLoss, ClipsProbabilities) {
  const std::vector<int> y{1};
  const std::vector<double> p{0.0};
  EXPECT_NEAR(logloss(y, p), -std::log(1e-15), 1e-9);
  const std::vector<int> y0{0};
  const std::vector<double> p1{1.0};
  EXPECT_TRUE(std::isfinite(logloss(y0, p1)));
}
