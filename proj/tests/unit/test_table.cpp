#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "vulnpred/error.hpp"
#include "vulnpred/table.hpp"

using namespace vulnpred;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "vulnpred_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Table labeled_table(const std::vector<int>& labels) {
  NumericValues y(labels.begin(), labels.end());
  NumericValues x(labels.size());
  std::iota(x.begin(), x.end(), 0.0);
  return Table({Column::numeric("x", ColumnKind::kNumerical, x),
                Column::numeric("HasDetections", ColumnKind::kTarget, y)});
}

template <typename F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no vulnpred::Error thrown";
  return ErrorKind::kTraining;
}

}  // namespace

TEST(Csv, ParsesMissingAndInfersKinds) {
  const Table t = parse_csv("a,b\n1,NA\n2,x\n");
  ASSERT_EQ(t.row_count(), 2u);
  const auto& a = t.column("a");
  EXPECT_EQ(a.kind, ColumnKind::kNumerical);
  EXPECT_EQ(a.numbers(), (NumericValues{1, 2}));
  const auto& b = t.column("b");
  EXPECT_EQ(b.kind, ColumnKind::kCategorical);
  EXPECT_TRUE(b.is_missing(0));
  EXPECT_FALSE(b.is_missing(1));
  EXPECT_EQ(b.texts()[1], "x");
}

TEST(Csv, HeaderOnlyIsEmptyTable) {
  const Table t = parse_csv("a,b\n");
  EXPECT_EQ(t.row_count(), 0u);
  EXPECT_EQ(t.column_count(), 2u);
}

TEST(Csv, BinaryInference) {
  const Table t = parse_csv("f,g,h\n0,true,0\n1,false,2\n1,NA,1\n");
  EXPECT_EQ(t.column("f").kind, ColumnKind::kBinary);
  EXPECT_EQ(t.column("g").kind, ColumnKind::kBinary);
  EXPECT_EQ(t.column("h").kind, ColumnKind::kNumerical);
}

TEST(Csv, EmptyStringIsMissingButLowercaseNaIsNot) {
  const Table t = parse_csv("c,d\n,1\nna,2\nx,3\n");
  const auto& c = t.column("c");
  EXPECT_TRUE(c.is_missing(0));
  EXPECT_FALSE(c.is_missing(1));
  EXPECT_EQ(c.texts()[1], "na");
}

TEST(Csv, QuotedFields) {
  const Table t = parse_csv("a,b\n\"x,y\",\"say \"\"hi\"\"\"\n\"multi\nline\",z\n");
  ASSERT_EQ(t.row_count(), 2u);
  EXPECT_EQ(t.column("a").texts()[0], "x,y");
  EXPECT_EQ(t.column("b").texts()[0], "say \"hi\"");
  EXPECT_EQ(t.column("a").texts()[1], "multi\nline");
}

TEST(Csv, DeclaredKindsWin) {
  const Table t = parse_csv("id,v\n1,10\n2,20\n", {{"id", ColumnKind::kIdentifier}, {"v", ColumnKind::kCategorical}});
  EXPECT_EQ(t.column("id").kind, ColumnKind::kIdentifier);
  EXPECT_EQ(t.column("v").kind, ColumnKind::kCategorical);
  EXPECT_EQ(t.column("v").texts()[1], "20");
}

TEST(Csv, Errors) {
  EXPECT_EQ(kind_of([] { parse_csv("a,b\n1\n"); }), ErrorKind::kData);
  EXPECT_EQ(kind_of([] { parse_csv("a,a\n1,2\n"); }), ErrorKind::kSchema);
  EXPECT_EQ(kind_of([] { read_csv(temp_path("does_not_exist.csv")); }), ErrorKind::kIngest);
}

TEST(Csv, RaggedRowErrorNamesRow) {
  try {
    parse_csv("a,b\n1,2\n3,4\n5\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(Csv, CategoricalDistinctSetMatchesRawStrings) {
  const std::string text = "c\n01\n1\n1.0\nNA\n\nabc\n01\n";
  const Table t = parse_csv(text, {{"c", ColumnKind::kCategorical}});
  std::set<std::string> seen;
  const auto& c = t.column("c");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c.is_missing(i)) seen.insert(c.texts()[i]);
  }
  EXPECT_EQ(seen, (std::set<std::string>{"01", "1", "1.0", "abc"}));
}

TEST(Csv, RoundTripThousandRows) {
  SynthSpec spec;
  spec.n_rows = 1000;
  spec.missing_rates = {{"num_0", 0.1}, {"cat_1", 0.2}, {"bin_0", 0.05}};
  spec.signal_weights = {{"num_0", 1.0}};
  spec.seed = 11;
  const Table original = synth_generate(spec).table;
  std::map<std::string, ColumnKind> kinds;
  for (const auto& c : original.columns()) kinds[c.name] = c.kind;

  const auto path = temp_path("roundtrip.csv");
  write_csv(original, path);
  const Table first = read_csv(path, kinds);
  EXPECT_EQ(first, original);
  const auto path2 = temp_path("roundtrip2.csv");
  write_csv(first, path2);
  EXPECT_EQ(read_csv(path2, kinds), original);
}

TEST(Csv, RoundTripExtremeNumbers) {
  const Table t({Column::numeric("v", ColumnKind::kNumerical, {0.1, 1e-300, -2.5e17, 1.0 / 3.0})});
  const Table back = parse_csv(format_csv(t), {{"v", ColumnKind::kNumerical}});
  EXPECT_EQ(back, t);
}

TEST(TableInvariants, RejectsBadShapes) {
  EXPECT_ANY_THROW(Table({Column::numeric("a", ColumnKind::kNumerical, {1, 2}),
                          Column::numeric("b", ColumnKind::kNumerical, {1})}));
  EXPECT_ANY_THROW(Table({Column::numeric("a", ColumnKind::kNumerical, {1}),
                          Column::numeric("a", ColumnKind::kNumerical, {1})}));
  EXPECT_ANY_THROW(Table({Column::numeric("t1", ColumnKind::kTarget, {1}),
                          Column::numeric("t2", ColumnKind::kTarget, {0})}));
}

TEST(TableInvariants, ClassCountsSumToRows) {
  const Table t = labeled_table({1, 0, 0, 1, 1, 0, 1});
  const auto y = t.labels();
  EXPECT_EQ(std::count(y.begin(), y.end(), 0) + std::count(y.begin(), y.end(), 1),
            static_cast<long>(t.row_count()));
}

TEST(Split, ExactFractions) {
  const Table t = labeled_table({0, 1, 0, 1, 0, 1, 0, 1, 0, 1});
  SplitSpec spec;
  spec.test_fraction = 0.3;
  spec.validation_fraction = 0.0;
  spec.stratified = false;
  const auto s = split(t, spec);
  EXPECT_EQ(s.train.row_count(), 7u);
  EXPECT_EQ(s.validation.row_count(), 0u);
  EXPECT_EQ(s.test.row_count(), 3u);
}

TEST(Split, StratifiedForcesClassCounts) {
  const std::vector<int> y{1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  SplitSpec spec;
  spec.test_fraction = 0.5;
  spec.stratified = true;
  const auto idx = split_indices(y.size(), y, spec);
  int ones = 0, zeros = 0;
  for (auto i : idx.test) (y[i] ? ones : zeros) += 1;
  EXPECT_EQ(ones, 3);
  EXPECT_EQ(zeros, 2);
}

TEST(Split, DeterministicAndPartition) {
  std::vector<int> y(997);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i * 7919) % 5 < 2;
  SplitSpec spec;
  spec.test_fraction = 0.3;
  spec.validation_fraction = 0.14;
  spec.seed = 42;
  const auto a = split_indices(y.size(), y, spec);
  const auto b = split_indices(y.size(), y, spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);

  std::vector<std::size_t> all;
  for (const auto* part : {&a.train, &a.validation, &a.test}) {
    EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
    all.insert(all.end(), part->begin(), part->end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(y.size());
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);

  for (int cls : {0, 1}) {
    const double n_cls = static_cast<double>(std::count(y.begin(), y.end(), cls));
    long test_cls = 0, val_cls = 0;
    for (auto i : a.test) test_cls += y[i] == cls;
    for (auto i : a.validation) val_cls += y[i] == cls;
    EXPECT_LE(std::abs(test_cls - n_cls * 0.3), 1.0);
    EXPECT_LE(std::abs(val_cls - n_cls * 0.14), 1.0);
  }

  spec.seed = 43;
  EXPECT_NE(split_indices(y.size(), y, spec).test, a.test);
}

TEST(Split, Errors) {
  SplitSpec spec;
  spec.test_fraction = 0.5;
  spec.stratified = true;
  const std::vector<int> y{1, 0, 0, 0};
  EXPECT_EQ(kind_of([&] { split_indices(y.size(), y, spec); }), ErrorKind::kSplit);
  spec.test_fraction = 0.7;
  spec.validation_fraction = 0.3;
  EXPECT_EQ(kind_of([&] { validate(spec); }), ErrorKind::kConfig);
}

TEST(Synth, ZeroWeightsBalanced) {
  SynthSpec spec;
  spec.n_rows = 50000;
  spec.seed = 5;
  const auto d = synth_generate(spec);
  const auto y = d.table.labels();
  const double rate = static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(y.size());
  EXPECT_NEAR(rate, 0.5, 0.02);
}

TEST(Synth, SignalColumnThresholdBeatsChance) {
  SynthSpec spec;
  spec.n_rows = 5000;
  spec.signal_weights = {{"num_2", 3.0}};
  spec.seed = 9;
  const auto d = synth_generate(spec);
  const auto y = d.table.labels();
  const auto& x = d.table.column("num_2").numbers();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += (x[i] > 0) == (y[i] == 1);
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(y.size()), 0.7);
  EXPECT_GT(d.bayes_accuracy, 0.7);
}

TEST(Synth, DeterministicAndValidated) {
  SynthSpec spec;
  spec.n_rows = 300;
  spec.missing_rates = {{"cat_0", 0.3}};
  spec.signal_weights = {{"bin_1", 1.0}};
  EXPECT_EQ(synth_generate(spec).table, synth_generate(spec).table);
  spec.signal_weights = {{"nope", 1.0}};
  EXPECT_EQ(kind_of([&] { synth_generate(spec); }), ErrorKind::kConfig);
  spec.signal_weights = {};
  spec.missing_rates = {{"num_0", 1.5}};
  EXPECT_EQ(kind_of([&] { synth_generate(spec); }), ErrorKind::kConfig);
}
