#include <gtest/gtest.h>

#include <random>
#include <unordered_map>

#include "vulnpred/cleanse.hpp"
#include "vulnpred/error.hpp"
#include "vulnpred/profile.hpp"

using namespace vulnpred;

namespace {

Column text_col(const std::string& name, const std::vector<std::string>& v, ColumnKind kind = ColumnKind::kCategorical) {
  std::vector<std::uint8_t> miss(v.size());
  TextValues vals;
  for (std::size_t i = 0; i < v.size(); ++i) {
    miss[i] = v[i] == "?";
    vals.push_back(miss[i] ? "" : v[i]);
  }
  return Column::text(name, kind, vals, miss);
}

Column num_col(const std::string& name, const std::vector<double>& v, const std::vector<std::uint8_t>& miss = {},
               ColumnKind kind = ColumnKind::kNumerical) {
  return Column::numeric(name, kind, v, miss);
}

ColumnProfile fake_profile(const std::string& name, double missing, double share,
                           ColumnKind kind = ColumnKind::kCategorical) {
  ColumnProfile p;
  p.name = name;
  p.kind = kind;
  p.missing_fraction = missing;
  p.dominant_share = share;
  p.cardinality = 3;
  return p;
}

const DroppedFeature* find_drop(const CleansePlan& plan, const std::string& name) {
  for (const auto& d : plan.drop_features) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

}  // namespace

TEST(Profile, ForcedCounts) {
  const Table t({num_col("v", {1, 1, 1, 0}, {0, 0, 0, 1})});
  const auto r = profile(t);
  const auto& c = r.column("v");
  EXPECT_DOUBLE_EQ(c.missing_fraction, 0.25);
  EXPECT_EQ(c.cardinality, 1u);
  EXPECT_DOUBLE_EQ(c.dominant_share, 1.0);
}

TEST(Profile, ClassBalance) {
  std::vector<double> y(1000, 0.0);
  for (std::size_t i = 0; i < 512; ++i) y[i] = 1.0;
  const Table t({num_col("HasDetections", y, {}, ColumnKind::kTarget)});
  const auto r = profile(t);
  EXPECT_NEAR(r.class_balance.at("1"), 0.512, 1e-12);
  EXPECT_NEAR(r.class_balance.at("0"), 0.488, 1e-12);
  EXPECT_NEAR(r.class_balance.at("0") + r.class_balance.at("1"), 1.0, 1e-12);
}

TEST(Profile, MatchesHashMapTally) {
  std::mt19937_64 rng(3);
  std::vector<std::string> v(1000);
  std::vector<std::uint8_t> miss(1000);
  for (std::size_t i = 0; i < v.size(); ++i) {
    miss[i] = rng() % 10 == 0;
    v[i] = miss[i] ? "" : "k" + std::to_string(rng() % 37);
  }
  const Table t({Column::text("c", ColumnKind::kCategorical, v, miss)});
  const auto p = profile(t).column("c");

  std::unordered_map<std::string, std::size_t> tally;
  std::size_t missing = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (miss[i]) ++missing;
    else ++tally[v[i]];
  }
  std::size_t modal = 0;
  for (const auto& [_, n] : tally) modal = std::max(modal, n);
  EXPECT_DOUBLE_EQ(p.missing_fraction, static_cast<double>(missing) / 1000.0);
  EXPECT_EQ(p.cardinality, tally.size());
  EXPECT_DOUBLE_EQ(p.dominant_share, static_cast<double>(modal) / static_cast<double>(1000 - missing));
  ASSERT_LE(p.top_values.size(), kTopValues);
  std::size_t top_sum = 0;
  for (const auto& [value, n] : p.top_values) {
    EXPECT_EQ(n, tally.at(value)) << value;
    top_sum += n;
  }
  EXPECT_LE(top_sum, 1000 - missing);
  EXPECT_GE(p.dominant_share, 1.0 / static_cast<double>(p.cardinality));
}

TEST(Profile, PureAndOrdered) {
  const Table t({text_col("b", {"x", "y", "?"}), num_col("a", {1, 2, 3})});
  const auto r1 = profile(t);
  const auto r2 = profile(t);
  EXPECT_EQ(to_json(r1), to_json(r2));
  ASSERT_EQ(r1.columns.size(), 2u);
  EXPECT_EQ(r1.columns[0].name, "b");
  EXPECT_EQ(r1.columns[1].name, "a");
  EXPECT_EQ(r1.kind_histogram.at(ColumnKind::kCategorical), 1u);
  EXPECT_EQ(r1.kind_histogram.at(ColumnKind::kNumerical), 1u);
}

TEST(DominantShare, Examples) {
  const std::vector<std::string> a{"a", "a", "a", "b"};
  const std::vector<std::uint8_t> m4(4, 0);
  EXPECT_DOUBLE_EQ(dominant_share(a, m4), 0.75);
  const std::vector<std::string> ab{"a", "b"};
  EXPECT_DOUBLE_EQ(dominant_share(ab, std::vector<std::uint8_t>(2, 0)), 0.5);
  for (std::size_t k = 1; k <= 9; ++k) {
    std::vector<double> v;
    for (std::size_t g = 0; g < k; ++g) v.insert(v.end(), 4, static_cast<double>(g));
    EXPECT_EQ(dominant_share(v, std::vector<std::uint8_t>(v.size(), 0)), 1.0 / static_cast<double>(k));
  }
}

TEST(DominantShare, AllMissingIsUndefined) {
  const std::vector<std::string> v{"", ""};
  try {
    dominant_share(v, std::vector<std::uint8_t>{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefined);
  }
}

TEST(Cleanse, ThresholdRules) {
  ProfileReport r;
  r.columns = {fake_profile("high", 0.91, 0.2), fake_profile("skew", 0.0, 0.95),
               fake_profile("edge", 0.9, 0.9), fake_profile("both", 0.95, 0.99),
               fake_profile("id", 0.99, 1.0, ColumnKind::kIdentifier),
               fake_profile("HasDetections", 0.0, 0.99, ColumnKind::kTarget), fake_profile("keep", 0.99, 0.5),
               fake_profile("forced", 0.0, 0.1)};
  CleanseConfig cfg;
  cfg.forced_keeps = {"keep"};
  cfg.forced_drops = {"forced", "skew"};
  const auto plan = plan_cleanse(r, cfg);
  ASSERT_NE(find_drop(plan, "high"), nullptr);
  EXPECT_EQ(find_drop(plan, "high")->reason, DropReason::kHighMissing);
  EXPECT_EQ(find_drop(plan, "skew")->reason, DropReason::kForced);
  EXPECT_EQ(find_drop(plan, "both")->reason, DropReason::kHighMissing);
  EXPECT_EQ(find_drop(plan, "forced")->reason, DropReason::kForced);
  EXPECT_EQ(find_drop(plan, "edge"), nullptr);
  EXPECT_EQ(find_drop(plan, "id"), nullptr);
  EXPECT_EQ(find_drop(plan, "HasDetections"), nullptr);
  EXPECT_EQ(find_drop(plan, "keep"), nullptr);
  EXPECT_EQ(plan.drop_features.size(), 4u);

  cfg.forced_drops = {};
  EXPECT_EQ(find_drop(plan_cleanse(r, cfg), "skew")->reason, DropReason::kSkewed);
}

TEST(Cleanse, ForcedTargetDropIsConfigError) {
  ProfileReport r;
  r.columns = {fake_profile("HasDetections", 0.0, 0.5, ColumnKind::kTarget)};
  CleanseConfig cfg;
  cfg.forced_drops = {"HasDetections"};
  try {
    plan_cleanse(r, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  cfg.forced_drops = {"x"};
  cfg.forced_keeps = {"x"};
  EXPECT_THROW(validate(cfg), Error);
  cfg.forced_keeps = {};
  cfg.missing_drop_threshold = 0.0;
  EXPECT_THROW(validate(cfg), Error);
}

TEST(Cleanse, ApplyHandEnumerated) {
  // 10 rows; "gone" is dropped and carries missing cells that must not count.
  // Rows 2, 5, 8 have a missing cell in a surviving column.
  std::vector<std::uint8_t> m_a(10, 0), m_b(10, 0), m_gone(10, 1);
  m_a[2] = 1;
  m_b[5] = 1;
  m_b[8] = 1;
  m_a[8] = 1;
  std::vector<double> a{0, 1, 0, 3, 4, 5, 6, 7, 0, 9}, idx{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::string> b{"p", "q", "r", "s", "t", "", "u", "v", "", "w"};
  const Table t({num_col("a", a, m_a), Column::text("b", ColumnKind::kCategorical, b, m_b),
                 num_col("gone", std::vector<double>(10, 0.0), m_gone), num_col("row", idx)});
  CleansePlan plan;
  plan.drop_features = {{"gone", DropReason::kHighMissing}};
  const Table out = apply_cleanse(t, plan);
  EXPECT_EQ(out.column_count(), 3u);
  EXPECT_EQ(out.row_count(), 7u);
  EXPECT_EQ(out.column("row").numbers(), (NumericValues{0, 1, 3, 4, 6, 7, 9}));
  for (const auto& c : out.columns()) {
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_FALSE(c.is_missing(i));
  }
  EXPECT_EQ(surviving_rows(t, plan), (std::vector<std::size_t>{0, 1, 3, 4, 6, 7, 9}));
  EXPECT_EQ(apply_cleanse(out, plan), out);

  CleansePlan keep_rows = plan;
  keep_rows.drop_row_policy = RowPolicy::kNone;
  EXPECT_EQ(apply_cleanse(t, keep_rows).row_count(), 10u);
}

TEST(Cleanse, IdentityWithoutDropsOrMissing) {
  const Table t({num_col("a", {1, 2, 3}), text_col("b", {"x", "y", "z"})});
  EXPECT_EQ(apply_cleanse(t, CleansePlan{}), t);
}

TEST(Cleanse, PlanJsonRoundTrip) {
  CleansePlan plan;
  plan.drop_features = {{"a", DropReason::kSkewed}, {"b", DropReason::kInconsistent}};
  plan.drop_row_policy = RowPolicy::kNone;
  EXPECT_EQ(cleanse_plan_from_json(to_json(plan)), plan);
}

TEST(Consistency, Examples) {
  const Table t({text_col("country", {"P1", "P1", "P2"}), text_col("city", {"c1", "c2", "c2"})});
  const auto r = cross_consistency(t, "country", "city");
  EXPECT_EQ(r.violating_child_values, 1u);
  EXPECT_EQ(r.mapping.at("c2"), (std::set<std::string>{"P1", "P2"}));

  const Table u({text_col("country", {"P1", "P1", "P2", "?"}), text_col("city", {"c1", "c2", "c3", "c1"})});
  EXPECT_EQ(cross_consistency(u, "country", "city").violating_child_values, 0u);

  try {
    cross_consistency(t, "country", "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
  }
}
