#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "vulnpred/error.hpp"
#include "vulnpred/model.hpp"
#include "vulnpred/models_boost.hpp"

using namespace vulnpred;

namespace {

struct Data {
  Matrix x;
  std::vector<int> y;
};

// Label driven by features 0 and 1 through a logistic link; the rest are noise.
Data logistic_data(std::size_t n, std::size_t p, std::uint64_t seed, double w0 = 2.5, double w1 = -1.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  Data d{Matrix(n, p), std::vector<int>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < p; ++c) d.x(r, c) = nd(rng);
    const double z = w0 * d.x(r, 0) + w1 * d.x(r, 1) + 0.8 * d.x(r, 0) * d.x(r, 1);
    d.y[r] = u(rng) < 1.0 / (1.0 + std::exp(-z));
  }
  return d;
}

double per_sample_logloss(int y, double s) {
  const double p = 1.0 / (1.0 + std::exp(-s));
  return y ? -std::log(p) : -std::log(1 - p);
}

}  // namespace

TEST(Binning, ExactForFewDistinctValues) {
  const Matrix x(6, 1, std::vector<double>{3, 1, 2, 3, 1, 2});
  const auto b = bin_features(x, 1024);
  EXPECT_EQ(b.n_bins(0), 3u);
  std::set<std::uint16_t> seen;
  for (std::size_t r = 0; r < 6; ++r) seen.insert(b.bin(r, 0));
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_EQ(b.bin(1, 0), 0u);
  EXPECT_EQ(b.bin(0, 0), 2u);
}

TEST(Binning, ConstantFeatureSingleBin) {
  const Matrix x(5, 1, 4.2);
  EXPECT_EQ(bin_features(x, 256).n_bins(0), 1u);
}

TEST(Binning, UniformQuantiles) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  Matrix x(10000, 1);
  for (std::size_t r = 0; r < 10000; ++r) x(r, 0) = u(rng);
  const auto b = bin_features(x, 4);
  ASSERT_EQ(b.n_bins(0), 4u);
  std::vector<std::size_t> pop(4, 0);
  for (std::size_t r = 0; r < 10000; ++r) ++pop[b.bin(r, 0)];
  for (auto c : pop) EXPECT_NEAR(static_cast<double>(c), 2500.0, 125.0);
  for (std::size_t i = 1; i < b.edges[0].size(); ++i) EXPECT_LT(b.edges[0][i - 1], b.edges[0][i]);

  const Matrix unseen(2, 1, std::vector<double>{-10, 10});
  const auto ub = apply_bins(b.edges, unseen);
  EXPECT_EQ(ub.bin(0, 0), 0u);
  EXPECT_EQ(ub.bin(1, 0), 3u);
}

TEST(GradHess, AnalyticAndFiniteDifference) {
  const std::vector<int> y{1, 0};
  const std::vector<double> s{0, 0};
  const auto gh = grad_hess_logloss(y, s);
  EXPECT_DOUBLE_EQ(gh.g[0], -0.5);
  EXPECT_DOUBLE_EQ(gh.g[1], 0.5);
  EXPECT_DOUBLE_EQ(gh.h[0], 0.25);
  EXPECT_DOUBLE_EQ(gh.h[1], 0.25);

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0, 2);
  for (int i = 0; i < 200; ++i) {
    const int label = static_cast<int>(rng() % 2);
    const double score = nd(rng);
    const std::vector<int> yy{label};
    const std::vector<double> ss{score};
    const auto one = grad_hess_logloss(yy, ss);
    const double h = 1e-5;
    const double fd = (per_sample_logloss(label, score + h) - per_sample_logloss(label, score - h)) / (2 * h);
    EXPECT_LT(std::abs(fd - one.g[0]), 1e-6 * std::max(1.0, std::abs(fd)));
    const double p = 1.0 / (1.0 + std::exp(-score));
    EXPECT_NEAR(one.h[0], p * (1 - p), 1e-15);
  }
}

TEST(LeafWeight, Examples) {
  EXPECT_DOUBLE_EQ(leaf_weight(1, 1, 0, 0), -1.0);
  EXPECT_EQ(leaf_weight(0.1, 2, 1, 0.15), 0.0);
  EXPECT_EQ(leaf_weight(-0.1, 2, 1, 0.15), 0.0);
  EXPECT_DOUBLE_EQ(leaf_weight(-3, 1, 1, 1), 1.0);
}

TEST(LeafWeight, GainMatchesGridSearch) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ug(-5, 5), uh(0.1, 4), ureg(0, 1);
  for (int i = 0; i < 30; ++i) {
    const double GL = ug(rng), GR = ug(rng), HL = uh(rng), HR = uh(rng);
    const double lambda = ureg(rng), alpha = ureg(rng);
    const double expected = oracle::grid_leaf_objective(GL + GR, HL + HR, lambda, alpha) -
                            oracle::grid_leaf_objective(GL, HL, lambda, alpha) -
                            oracle::grid_leaf_objective(GR, HR, lambda, alpha);
    EXPECT_NEAR(split_gain(GL, HL, GR, HR, lambda, alpha), expected, 1e-6);
    const double w = leaf_weight(GL, HL, lambda, alpha);
    const double at_w = GL * w + (HL + lambda) * w * w / 2 + alpha * std::abs(w);
    EXPECT_NEAR(leaf_objective(GL, HL, lambda, alpha), at_w, 1e-12);
  }
}

TEST(Goss, IdentityWhenATopIsOne) {
  const std::vector<double> g{0.3, -0.1, 0.9, 0.0};
  Rng rng(1);
  const auto s = goss_sample(g, 1.0, 0.0, rng);
  EXPECT_EQ(s.indices, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(s.weights, (std::vector<double>(4, 1.0)));
}

TEST(Goss, TopGradientsAlwaysKept) {
  const std::vector<double> g{0.1, -0.9, 0.2, 0.05, 0.8, -0.3, 0.0, 0.15, -0.25, 0.12};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto s = goss_sample(g, 0.2, 0.3, rng);
    ASSERT_EQ(s.indices.size(), 5u);
    for (std::size_t must : {1u, 4u}) {
      const auto it = std::find(s.indices.begin(), s.indices.end(), must);
      ASSERT_NE(it, s.indices.end());
      EXPECT_EQ(s.weights[static_cast<std::size_t>(it - s.indices.begin())], 1.0);
    }
  }
  Rng rng(0);
  EXPECT_THROW(goss_sample(g, 0.5, 0.0, rng), Error);
}

TEST(Goss, WeightedSumUnbiased) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd(0.2, 1.0);
  std::vector<double> g(200);
  for (auto& v : g) v = nd(gen);
  const double truth = std::accumulate(g.begin(), g.end(), 0.0);
  Rng rng(5);
  double total = 0;
  const int reps = 10000;
  for (int i = 0; i < reps; ++i) {
    const auto s = goss_sample(g, 0.2, 0.1, rng);
    for (std::size_t k = 0; k < s.indices.size(); ++k) total += g[s.indices[k]] * s.weights[k];
  }
  EXPECT_LT(std::abs(total / reps - truth), 0.01 * std::abs(truth));
}

TEST(Gbdt, ZeroRoundsPredictsPrior) {
  const auto d = logistic_data(200, 3, 6);
  GbdtParams p;
  p.n_estimators = 0;
  const auto fit = fit_gbdt(d.x, d.y, p);
  const double rate = static_cast<double>(std::accumulate(d.y.begin(), d.y.end(), 0)) / 200.0;
  EXPECT_NEAR(fit.model.base_score(), std::log(rate / (1 - rate)), 1e-12);
  for (double v : fit.model.predict_proba(d.x)) EXPECT_NEAR(v, rate, 1e-12);
  for (double v : fit.model.feature_importance()) EXPECT_EQ(v, 0.0);
}

TEST(Gbdt, TrainingLossNonIncreasing) {
  const auto d = logistic_data(10000, 5, 7);
  for (auto growth : {Growth::kDepthWise, Growth::kLeafWise}) {
    GbdtParams p;
    p.n_estimators = 50;
    p.learning_rate = 0.1;
    p.growth = growth;
    p.num_leaves = growth == Growth::kLeafWise ? 31 : 0;
    const auto fit = fit_gbdt(d.x, d.y, p);
    ASSERT_EQ(fit.history.rounds.size(), 50u);
    for (std::size_t i = 1; i < 50; ++i) {
      EXPECT_LE(fit.history.rounds[i].train_logloss, fit.history.rounds[i - 1].train_logloss + 1e-10);
    }
  }
}

TEST(Gbdt, EarlyStoppingTruncatesToPrefix) {
  const auto train = logistic_data(600, 6, 8);
  const auto val = logistic_data(400, 6, 9);
  GbdtParams p;
  p.n_estimators = 400;
  p.learning_rate = 0.3;
  p.max_depth = 8;
  p.l2_lambda = 0.0;
  p.min_child_weight = 0.0;
  p.early_stopping_rounds = 10;
  const auto stopped = fit_gbdt(train.x, train.y, p, EvalSet{val.x, val.y});
  ASSERT_TRUE(stopped.history.stopped_early);
  const std::size_t ran = stopped.history.rounds.size();
  EXPECT_LT(stopped.history.best_round, ran);
  EXPECT_EQ(ran - stopped.history.best_round, 10u);
  EXPECT_EQ(stopped.model.trees().size(), stopped.history.best_round);

  GbdtParams full = p;
  full.early_stopping_rounds = 0;
  full.n_estimators = ran;
  const auto untruncated = fit_gbdt(train.x, train.y, full, EvalSet{val.x, val.y});
  EXPECT_EQ(stopped.model.predict_proba(val.x), untruncated.model.predict_proba(val.x, stopped.history.best_round));

  EXPECT_THROW(fit_gbdt(train.x, train.y, p), Error);
}

TEST(Gbdt, GossWithFullTopIsNoSampling) {
  const auto d = logistic_data(800, 4, 10);
  GbdtParams p;
  p.n_estimators = 20;
  const auto plain = fit_gbdt(d.x, d.y, p);
  p.row_sampling = GossSampling{1.0, 0.0};
  const auto goss = fit_gbdt(d.x, d.y, p);
  EXPECT_EQ(plain.model.trees(), goss.model.trees());
  EXPECT_EQ(plain.model.predict_proba(d.x), goss.model.predict_proba(d.x));
}

TEST(Gbdt, DeterministicWithSampling) {
  const auto d = logistic_data(800, 6, 11);
  GbdtParams p;
  p.n_estimators = 15;
  p.feature_fraction = 0.5;
  p.row_sampling = BaggingSampling{0.7, 2, 9};
  p.seed = 5;
  EXPECT_EQ(fit_gbdt(d.x, d.y, p).model.trees(), fit_gbdt(d.x, d.y, p).model.trees());
  p.row_sampling = GossSampling{0.2, 0.1};
  EXPECT_EQ(fit_gbdt(d.x, d.y, p).model.trees(), fit_gbdt(d.x, d.y, p).model.trees());
}

TEST(Gbdt, LeafWiseCapacityDominatesDepthWise) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = logistic_data(2000, 5, 300 + seed);
    GbdtParams p;
    p.n_estimators = 20;
    p.max_depth = 4;
    p.seed = seed;
    const double depth_loss = fit_gbdt(d.x, d.y, p).history.rounds.back().train_logloss;
    p.growth = Growth::kLeafWise;
    p.num_leaves = 16;
    const double leaf_loss = fit_gbdt(d.x, d.y, p).history.rounds.back().train_logloss;
    wins += leaf_loss <= depth_loss + 1e-12;
  }
  EXPECT_GE(wins, 3);
}

TEST(Gbdt, DominantFeatureRanksFirst) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = logistic_data(3000, 6, 400 + seed, 3.0, 0.3);
    GbdtParams p;
    p.n_estimators = 30;
    p.seed = seed;
    const auto imp = fit_gbdt(d.x, d.y, p).model.feature_importance();
    wins += std::max_element(imp.begin(), imp.end()) == imp.begin();
    for (double v : imp) EXPECT_GE(v, 0.0);
  }
  EXPECT_GE(wins, 3);
}

TEST(Gbdt, SingleSplitImportanceOnThatFeature) {
  Matrix x(20, 5);
  std::vector<int> y(20);
  for (std::size_t r = 0; r < 20; ++r) {
    x(r, 3) = static_cast<double>(r);
    y[r] = r >= 10;
  }
  GbdtParams p;
  p.n_estimators = 1;
  p.max_depth = 1;
  const auto imp = fit_gbdt(x, y, p).model.feature_importance();
  EXPECT_GT(imp[3], 0.0);
  EXPECT_EQ(imp[0] + imp[1] + imp[2] + imp[4], 0.0);
}

TEST(Stacking, InformativeBaseOutweighsNoise) {
  const auto d = logistic_data(1500, 2, 12, 3.0, 0.0);
  StackingSpec spec;
  spec.bases = {{"gnb", nlohmann::ordered_json::object(), std::vector<std::size_t>{0}},
                {"gnb", nlohmann::ordered_json::object(), std::vector<std::size_t>{1}}};
  spec.meta.n_estimators = 30;
  spec.seed = 4;
  const auto model = fit_stacking(d.x, d.y, spec);
  EXPECT_EQ(model.n_bases(), 2u);
  const Matrix meta_in = model.base_outputs(d.x);
  EXPECT_EQ(meta_in.rows(), d.x.rows());
  EXPECT_EQ(meta_in.cols(), 2u);
  const auto oof = stacking_oof(d.x, d.y, spec);
  EXPECT_EQ(oof.rows(), d.x.rows());
  EXPECT_EQ(oof.cols(), 2u);
  const auto imp = feature_importance(model);
  ASSERT_EQ(imp.size(), 2u);
  EXPECT_GT(imp[0], imp[1]);
}

TEST(Stacking, IdenticalBasesMatchSingleBase) {
  const auto train = logistic_data(3000, 4, 13);
  const auto test = logistic_data(3000, 4, 14);
  const nlohmann::ordered_json lr = {{"C", 100.0}, {"max_iter", 50}};
  StackingSpec spec;
  spec.bases = {{"logreg", lr, std::nullopt}, {"logreg", lr, std::nullopt}};
  spec.meta.n_estimators = 40;
  spec.meta.max_depth = 2;
  spec.seed = 1;
  const auto stack = fit_stacking(train.x, train.y, spec);
  auto single = make_classifier("logreg", lr);
  single->fit(train.x, train.y, std::nullopt);
  auto acc = [&](const std::vector<double>& proba) {
    const auto labels = predict_labels(proba);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) ok += labels[i] == test.y[i];
    return static_cast<double>(ok) / static_cast<double>(labels.size());
  };
  EXPECT_NEAR(acc(stack.predict_proba(test.x)), acc(single->predict_proba(test.x)), 0.01);
}

TEST(Stacking, BaseFailureNamesFamily) {
  const auto d = logistic_data(100, 2, 15);
  StackingSpec spec;
  spec.bases = {{"gnb", nlohmann::ordered_json::object(), std::nullopt},
                {"gbdt_depthwise", {{"early_stopping_rounds", 5}}, std::nullopt}};
  try {
    fit_stacking(d.x, d.y, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("gbdt_depthwise"), std::string::npos) << e.what();
  }
  spec.bases.pop_back();
  EXPECT_THROW(fit_stacking(d.x, d.y, spec), Error);
}

TEST(HistoryCsv, Header) {
  const auto d = logistic_data(200, 2, 16);
  GbdtParams p;
  p.n_estimators = 3;
  const auto csv = format_history_csv(fit_gbdt(d.x, d.y, p, EvalSet{d.x, d.y}).history);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "round,train_error,train_logloss,val_error,val_logloss");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}
