#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <random>
#include <regex>

#include "oracles.hpp"
#include "vulnpred/error.hpp"
#include "vulnpred/eval.hpp"

using namespace vulnpred;

namespace {

struct PublishedRow {
  const char* name;
  ConfusionMatrix cm;
};

// TP, FP, TN, FN as printed.
const PublishedRow kRows[] = {
    {"gnb", {466329, 371352, 160362, 91392}},      {"dtree", {353146, 205692, 326022, 204575}},
    {"logreg", {368032, 226143, 305571, 189689}},  {"stacking", {354788, 201375, 330339, 202933}},
    {"xgboost", {366163, 194961, 336753, 191558}}, {"lightgbm", {365576, 194385, 337329, 192145}},
};

std::optional<ErrorKind> kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(Confusion, Examples) {
  const std::vector<int> t{1, 0};
  const std::vector<int> same{1, 0}, flipped{0, 1};
  EXPECT_EQ(confusion(t, same), (ConfusionMatrix{1, 0, 1, 0}));
  EXPECT_EQ(confusion(t, flipped), (ConfusionMatrix{0, 1, 0, 1}));
  const std::vector<int> shorter{1};
  EXPECT_THROW(confusion(t, shorter), Error);
}

TEST(Confusion, MatchesTallyOracle) {
  std::mt19937_64 rng(5);
  std::vector<int> t(500), p(500);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<int>(rng() % 2);
    p[i] = static_cast<int>(rng() % 2);
  }
  const auto cm = confusion(t, p);
  const auto o = oracle::tally(t, p);
  EXPECT_EQ(cm.tp, o.tp);
  EXPECT_EQ(cm.fp, o.fp);
  EXPECT_EQ(cm.tn, o.tn);
  EXPECT_EQ(cm.fn, o.fn);
  EXPECT_EQ(cm.total(), 500u);
}

TEST(Confusion, FlippedPredictionsIdentity) {
  std::mt19937_64 rng(6);
  std::vector<int> t(300), p(300), q(300);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<int>(rng() % 2);
    p[i] = static_cast<int>(rng() % 2);
    q[i] = 1 - p[i];
    pos += t[i];
  }
  const auto a = confusion(t, p);
  const auto b = confusion(t, q);
  EXPECT_EQ(b.tp, pos - a.tp);
  EXPECT_EQ(b.fp, (t.size() - pos) - a.fp);
}

TEST(Report, GnbPublishedRow) {
  const auto r = report(kRows[0].cm);
  EXPECT_NEAR(r.accuracy, 0.575, 0.005);
  EXPECT_NEAR(r.macro.precision, 0.60, 0.005);
  EXPECT_NEAR(r.macro.recall, 0.57, 0.005);
  EXPECT_NEAR(r.macro.f1, 0.54, 0.005);
}

TEST(Report, LightGbmPublishedAccuracy) {
  EXPECT_NEAR(report(kRows[5].cm).accuracy, 0.645, 0.0005);
}

TEST(Report, PerfectClassifier) {
  const auto r = report(ConfusionMatrix{7, 0, 5, 0});
  for (double v : {r.accuracy, r.macro.precision, r.macro.recall, r.macro.f1, r.weighted.precision,
                   r.weighted.recall, r.weighted.f1, r.class0.f1, r.class1.f1}) {
    EXPECT_EQ(v, 1.0);
  }
  EXPECT_TRUE(r.zero_division.empty());
}

TEST(Report, HandArithmeticThreeSamples) {
  // y = [1, 1, 0], yhat = [1, 0, 0]
  const std::vector<int> t{1, 1, 0}, p{1, 0, 0};
  const auto cm = confusion(t, p);
  const auto r = report(cm);
  EXPECT_DOUBLE_EQ(r.class1.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.class1.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.class1.f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.class0.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.class0.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.macro.f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.weighted.precision, 2.0 / 3.0 * 1.0 + 1.0 / 3.0 * 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 3.0);
  const auto e = error_rates(cm);
  EXPECT_EQ(e.type_i, 0.0);
  EXPECT_DOUBLE_EQ(e.type_ii, 0.5);
}

TEST(Report, ZeroDivisionFlagged) {
  const auto r = report(ConfusionMatrix{0, 0, 4, 3});
  EXPECT_EQ(r.class1.precision, 0.0);
  EXPECT_FALSE(r.zero_division.empty());
}

TEST(Report, WeightedRecallEqualsAccuracy) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const ConfusionMatrix cm{rng() % 1000 + 1, rng() % 1000, rng() % 1000 + 1, rng() % 1000};
    const auto r = report(cm);
    EXPECT_NEAR(r.weighted.recall, r.accuracy, 1e-15);
    EXPECT_LE(r.macro.f1, std::max(r.class0.f1, r.class1.f1));
  }
}

TEST(ErrorRates, GnbHasLowestMiss) {
  const auto gnb = error_rates(kRows[0].cm);
  EXPECT_NEAR(gnb.type_ii, 91392.0 / 557721.0, 1e-15);
  EXPECT_NEAR(gnb.type_ii, 0.164, 0.0005);
  for (std::size_t i = 1; i < std::size(kRows); ++i) {
    EXPECT_LT(gnb.type_ii, error_rates(kRows[i].cm).type_ii) << kRows[i].name;
  }
}

TEST(ErrorRates, ForcedAndDegenerate) {
  EXPECT_EQ(error_rates(ConfusionMatrix{5, 2, 3, 0}).type_ii, 0.0);
  EXPECT_EQ(kind_of([] { error_rates(ConfusionMatrix{0, 2, 3, 0}); }), ErrorKind::kUndefined);
  EXPECT_EQ(kind_of([] { error_rates(ConfusionMatrix{4, 0, 0, 1}); }), ErrorKind::kUndefined);
}

TEST(Roc, SeparatingAndTies) {
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<double> sep{0.1, 0.2, 0.8, 0.9}, tied{0.3, 0.3, 0.3, 0.3};
  const auto a = roc_auc(y, sep);
  EXPECT_EQ(a.auc, 1.0);
  EXPECT_TRUE(std::isinf(a.points.front().threshold));
  EXPECT_EQ(a.points.back().fpr, 1.0);
  EXPECT_EQ(a.points.back().tpr, 1.0);
  EXPECT_EQ(roc_auc(y, tied).auc, 0.5);
  const std::vector<int> one{1, 1};
  const std::vector<double> s2{0.1, 0.2};
  EXPECT_EQ(kind_of([&] { roc_auc(one, s2); }), ErrorKind::kUndefined);
}

TEST(Roc, MatchesPairCountingOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % 2);
      // coarse grid half the time so ties are common
      s[i] = trial % 2 ? std::round(u(rng) * 10) / 10 : u(rng);
    }
    y[0] = 0;
    y[1] = 1;
    const auto c = roc_auc(y, s);
    EXPECT_LT(std::abs(c.auc - oracle::pair_count_auc(y, s)), 1e-12) << trial;
    for (std::size_t k = 1; k < c.points.size(); ++k) {
      EXPECT_GE(c.points[k].fpr, c.points[k - 1].fpr);
      EXPECT_GE(c.points[k].tpr, c.points[k - 1].tpr);
      EXPECT_LT(c.points[k].threshold, c.points[k - 1].threshold);
    }
  }
}

TEST(Roc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  std::vector<int> y(150);
  std::vector<double> s(150), t(150);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<int>(rng() % 2);
    s[i] = nd(rng) + y[i];
    t[i] = std::exp(2.0 * s[i]) + 3.0;
  }
  EXPECT_EQ(roc_auc(y, s).auc, roc_auc(y, t).auc);
}

TEST(RocSvg, PerfectCurveGeometry) {
  const std::vector<int> y{0, 1};
  const std::vector<double> s{0.0, 1.0};
  const std::vector<NamedCurve> curves{{"perfect", roc_auc(y, s)}};
  const auto& pts = curves[0].curve.points;
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(std::make_pair(pts[0].fpr, pts[0].tpr), std::make_pair(0.0, 0.0));
  EXPECT_EQ(std::make_pair(pts[1].fpr, pts[1].tpr), std::make_pair(0.0, 1.0));
  EXPECT_EQ(std::make_pair(pts[2].fpr, pts[2].tpr), std::make_pair(1.0, 1.0));
  const auto svg = render_roc_svg(curves);
  EXPECT_NE(svg.find("points=\"60.000,420.000 60.000,20.000 460.000,20.000\""), std::string::npos);
}

TEST(RocSvg, TwoCurvesWellFormed) {
  const std::vector<int> y{0, 1, 0, 1, 1, 0};
  const std::vector<double> a{0.1, 0.9, 0.3, 0.4, 0.7, 0.5}, b{0.5, 0.5, 0.2, 0.6, 0.1, 0.3};
  const std::vector<NamedCurve> curves{{"gbdt <a&b>", roc_auc(y, a)}, {"gnb", roc_auc(y, b)}};
  const auto svg = render_roc_svg(curves);
  auto count = [&](const std::string& needle) {
    std::size_t c = 0;
    for (auto pos = svg.find(needle); pos != std::string::npos; pos = svg.find(needle, pos + 1)) ++c;
    return c;
  };
  EXPECT_EQ(count("<polyline"), 2u);
  EXPECT_EQ(count("class=\"legend\""), 2u);
  EXPECT_EQ(count("AUC = "), 2u);
  EXPECT_EQ(count("class=\"diagonal\""), 1u);
  EXPECT_EQ(svg, render_roc_svg(curves));

  // Minimal well-formedness: balanced tags, no raw '&' or '<' inside text.
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([A-Za-z]+)[^<>]*?(/?)>)");
  const std::string body = svg.substr(svg.find("?>") + 2);
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::string between = body.substr(last, static_cast<std::size_t>(m.position(0)) - last);
    EXPECT_EQ(between.find('<'), std::string::npos);
    for (std::size_t p = between.find('&'); p != std::string::npos; p = between.find('&', p + 1)) {
      EXPECT_TRUE(between.compare(p, 5, "&amp;") == 0 || between.compare(p, 4, "&lt;") == 0 ||
                  between.compare(p, 4, "&gt;") == 0);
    }
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
    if (m[3].length()) continue;
    if (m[1].length()) {
      ASSERT_FALSE(stack.empty());
      EXPECT_EQ(stack.back(), m[2].str());
      stack.pop_back();
    } else {
      stack.push_back(m[2].str());
    }
  }
  EXPECT_TRUE(stack.empty());
  EXPECT_THROW(render_roc_svg(std::span<const NamedCurve>{}), Error);
}

TEST(EvalCsv, Headers) {
  const auto csv = format_confusion_csv({{"gnb", kRows[0].cm}});
  EXPECT_EQ(csv, "model,tp,fp,tn,fn\ngnb,466329,371352,160362,91392\n");
  const std::vector<int> y{0, 1};
  const std::vector<double> s{0.2, 0.8};
  const auto roc = format_roc_csv(roc_auc(y, s));
  EXPECT_EQ(roc.substr(0, roc.find('\n')), "threshold,fpr,tpr");
}
