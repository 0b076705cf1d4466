#include <gtest/gtest.h>

#include <random>

#include "vulnpred/error.hpp"
#include "vulnpred/model.hpp"

using namespace vulnpred;
using ojson = nlohmann::ordered_json;

namespace {

struct Data {
  Matrix x;
  std::vector<int> y;
};

Data linear_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u;
  Data d{Matrix(n, 3), std::vector<int>(n)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 3; ++c) d.x(r, c) = u(rng);
    d.y[r] = u(rng) < (d.x(r, 0) > 0.5 ? 0.85 : 0.15);
  }
  return d;
}

ojson small_params(const std::string& family) {
  if (family == "rforest" || family == "xtrees") return {{"n_estimators", 5}, {"max_depth", 4}};
  if (family == "gbdt_depthwise" || family == "gbdt_leafwise") return {{"n_estimators", 10}};
  if (family == "stacking") {
    return {{"bases", {{{"family", "gnb"}}, {{"family", "dtree"}, {"params", {{"max_depth", 3}}}}}},
            {"meta", {{"n_estimators", 5}}},
            {"oof_folds", 3}};
  }
  if (family == "dtree") return {{"max_depth", 5}};
  if (family == "logreg") return {{"C", 100.0}};
  return ojson::object();
}

}  // namespace

TEST(Model, EveryFamilyRoundTripsThroughJson) {
  const auto d = linear_data(300, 3);
  ASSERT_EQ(known_families().size(), 8u);
  for (const auto& family : known_families()) {
    auto m = make_classifier(family, small_params(family));
    EXPECT_EQ(m->family(), family);
    EXPECT_FALSE(m->fitted());
    EXPECT_THROW(m->state_json(), Error) << family;
    m->fit(d.x, d.y, std::nullopt);
    ASSERT_TRUE(m->fitted()) << family;
    const auto proba = m->predict_proba(d.x);
    ASSERT_EQ(proba.size(), d.y.size());
    std::size_t ok = 0;
    for (std::size_t i = 0; i < proba.size(); ++i) {
      EXPECT_GE(proba[i], 0.0);
      EXPECT_LE(proba[i], 1.0);
      ok += (proba[i] >= 0.5) == (d.y[i] == 1);
    }
    EXPECT_GT(static_cast<double>(ok) / static_cast<double>(proba.size()), 0.7) << family;

    const auto j = to_json(*m);
    const auto back = classifier_from_json(ojson::parse(j.dump()));
    EXPECT_EQ(back->family(), family);
    EXPECT_EQ(back->params_json(), m->params_json()) << family;
    EXPECT_EQ(back->predict_proba(d.x), proba) << family;
    EXPECT_EQ(to_json(*back), j) << family;
  }
}

TEST(Model, ParamsNormalizeToFixedPoint) {
  for (const auto& family : known_families()) {
    const auto m = make_classifier(family, small_params(family));
    const auto again = make_classifier(family, m->params_json());
    EXPECT_EQ(again->params_json(), m->params_json()) << family;
  }
}

TEST(Model, UnknownFamilyAndParamsAreConfigErrors) {
  for (const auto& [family, params] :
       std::vector<std::pair<std::string, ojson>>{{"svm", ojson::object()},
                                                  {"gnb", {{"bogus", 1}}},
                                                  {"logreg", {{"C", -1.0}}},
                                                  {"dtree", {{"criterion", "chi2"}}},
                                                  {"stacking", ojson::object()}}) {
    try {
      make_classifier(family, params);
      ADD_FAILURE() << family;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig) << family << ": " << e.what();
    }
  }
}

TEST(Model, PredictLabelsThreshold) {
  const std::vector<double> p{0.0, 0.4999, 0.5, 0.9};
  EXPECT_EQ(predict_labels(p), (std::vector<int>{0, 0, 1, 1}));
}

TEST(Model, BoostedHistoryAndImportance) {
  const auto d = linear_data(300, 4);
  auto m = make_classifier("gbdt_leafwise", {{"n_estimators", 8}});
  m->fit(d.x, d.y, std::nullopt);
  ASSERT_NE(m->history(), nullptr);
  EXPECT_EQ(m->history()->rounds.size(), 8u);
  const auto imp = m->feature_importance();
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_GT(imp[0], imp[1]);
  EXPECT_GT(imp[0], imp[2]);
  EXPECT_EQ(make_classifier("gnb", ojson::object())->history(), nullptr);
}
