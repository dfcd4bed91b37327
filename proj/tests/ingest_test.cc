// Copyright 2026 The FairMTL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fairmtl/ingest.h"

#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "fairmtl/csv.h"
#include "test_util.h"

namespace fairmtl {
namespace {

FeatureSchema NumericSchema(int num_classes) {
  FeatureSchema s;
  s.num_classes = num_classes;
  s.columns = {{"v", ColumnKind::kNumeric, {}, {}}, {"label", ColumnKind::kLabel, {}, {}}};
  return s;
}

RawTable Table(FeatureSchema schema, std::vector<std::string> header,
               std::vector<std::vector<std::string>> rows) {
  return RawTable{std::move(schema), std::move(header), std::move(rows)};
}

LoadOptions AllTrain() {
  LoadOptions o;
  o.ratios = {1.0, 0.0, 0.0};
  return o;
}

TEST(IngestTest, ThreeRowZScoreMatchesHandOracle) {
  const auto dir = testing::TempDir("zscore");
  WriteTextFile(dir / "d.csv", "v,label\n1,0\n2,1\n3,0\n");
  const Cohort c = LoadCsv(dir / "d.csv", NumericSchema(2), AllTrain());
  // Population z-scores of {1, 2, 3}: (x - 2) / sqrt(2/3).
  const double s = std::sqrt(2.0 / 3.0);
  ASSERT_EQ(c.x.rows(), 3);
  EXPECT_NEAR(c.x(0, 0), -1.0 / s, 1e-12);
  EXPECT_NEAR(c.x(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(c.x(2, 0), 1.0 / s, 1e-12);
  EXPECT_NEAR(c.x(0, 0), -1.2247, 1e-4);
  EXPECT_NEAR(c.x(2, 0), 1.2247, 1e-4);
}

TEST(IngestTest, OutOfRangeLabelIsASchemaErrorNamingTheColumn) {
  try {
    EncodeTable(Table(NumericSchema(4), {"v", "label"}, {{"1", "0"}, {"2", "5"}, {"3", "1"}}),
                AllTrain());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "label");
  }
}

TEST(IngestTest, CategoricalOneHotRowsSumToOne) {
  FeatureSchema s;
  s.num_classes = 2;
  s.columns = {{"sex", ColumnKind::kSensitiveCategorical, {"M", "F"}, {}},
               {"v", ColumnKind::kNumeric, {}, {}},
               {"label", ColumnKind::kLabel, {}, {}}};
  const Cohort c = EncodeTable(
      Table(s, {"sex", "v", "label"},
            {{"M", "1", "0"}, {"F", "2", "1"}, {"F", "3", "0"}, {"M", "4", "1"}}),
      AllTrain());
  ASSERT_EQ(c.feature_names, (std::vector<std::string>{"sex=M", "sex=F", "v"}));
  for (Eigen::Index i = 0; i < c.x.rows(); ++i) {
    EXPECT_TRUE(c.x(i, 0) == 0.0 || c.x(i, 0) == 1.0);
    EXPECT_EQ(c.x(i, 0) + c.x(i, 1), 1.0);
  }
  EXPECT_EQ(c.x(1, 1), 1.0);
  EXPECT_EQ(c.sensitive_columns, (std::vector<int>{0, 1}));
  const auto& a = c.Attribute("sex");
  EXPECT_EQ(a.group_names, (std::vector<std::string>{"M", "F"}));
  EXPECT_EQ(a.groups, (std::vector<int>{0, 1, 1, 0}));
}

TEST(IngestTest, UnseenCategoryNamesValueAndColumn) {
  FeatureSchema s;
  s.num_classes = 2;
  s.columns = {{"sex", ColumnKind::kCategorical, {"M", "F"}, {}},
               {"label", ColumnKind::kLabel, {}, {}}};
  try {
    EncodeTable(Table(s, {"sex", "label"}, {{"M", "0"}, {"X", "1"}, {"F", "1"}}), AllTrain());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "sex");
    EXPECT_NE(std::string(e.what()).find("'X'"), std::string::npos) << e.what();
  }
}

TEST(IngestTest, HeaderMismatchNamesTheColumn) {
  try {
    EncodeTable(Table(NumericSchema(2), {"w", "label"}, {{"1", "0"}, {"2", "1"}}), AllTrain());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_TRUE(e.column() == "v" || e.column() == "w") << e.what();
  }
}

TEST(IngestTest, NonNumericValueNamesTheColumn) {
  try {
    EncodeTable(Table(NumericSchema(2), {"v", "label"}, {{"1", "0"}, {"abc", "1"}, {"2", "1"}}),
                AllTrain());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "v");
  }
}

TEST(IngestTest, EmptyFileIsAnError) {
  const auto dir = testing::TempDir("empty");
  WriteTextFile(dir / "e.csv", "");
  EXPECT_THROW(LoadCsv(dir / "e.csv", NumericSchema(2), AllTrain()), InputError);
}

TEST(IngestTest, RowsWithMissingValuesAreDroppedAndCounted) {
  const Cohort c = EncodeTable(Table(NumericSchema(2), {"v", "label"},
                                     {{"1", "0"}, {"", "1"}, {"NA", "0"}, {"2", "1"}, {"3", "0"},
                                      {"4", ""}, {"5", "1"}}),
                               AllTrain());
  EXPECT_EQ(c.num_rows(), 4u);
  EXPECT_EQ(c.dropped_rows, 3u);
}

TEST(IngestTest, SchemaInvariantsAreChecked) {
  FeatureSchema two_labels = NumericSchema(2);
  two_labels.columns.push_back({"label2", ColumnKind::kLabel, {}, {}});
  EXPECT_THROW(two_labels.Validate(), InputError);

  FeatureSchema one_class = NumericSchema(1);
  EXPECT_THROW(one_class.Validate(), InputError);

  FeatureSchema dup;
  dup.num_classes = 2;
  dup.columns = {{"c", ColumnKind::kCategorical, {"a", "a"}, {}},
                 {"label", ColumnKind::kLabel, {}, {}}};
  EXPECT_THROW(dup.Validate(), InputError);

  EXPECT_THROW(NumericSchema(2).Validate(/*require_sensitive=*/true), InputError);
}

TEST(IngestTest, SchemaJsonRoundTrips) {
  FeatureSchema s;
  s.num_classes = 4;
  s.columns = {{"sex", ColumnKind::kSensitiveCategorical, {"F", "M"}, {}},
               {"age", ColumnKind::kSensitiveNumeric, {}, {40, 55, 70}},
               {"x", ColumnKind::kNumeric, {}, {}},
               {"label", ColumnKind::kLabel, {}, {}}};
  const FeatureSchema back = SchemaFromJson(ToJson(s));
  EXPECT_EQ(ToJson(back), ToJson(s));
  EXPECT_EQ(back.columns[1].bin_edges, (std::vector<double>{40, 55, 70}));
}

Labels BalancedLabels(int n, int classes) {
  Labels y;
  for (int i = 0; i < n; ++i) y.push_back(i % classes);
  return y;
}

TEST(StratifiedSplitTest, HundredRowsFourClassesCountingOracle) {
  const Labels y = BalancedLabels(100, 4);
  const auto split = AssignStratifiedSplit(y, 4, {0.7, 0.15, 0.15}, 11);
  std::map<Split, int> total;
  std::map<std::pair<int, Split>, int> per_class;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ++total[split[i]];
    ++per_class[{y[i], split[i]}];
  }
  EXPECT_EQ(total[Split::kTrain], 70);
  EXPECT_EQ(total[Split::kVal], 15);
  EXPECT_EQ(total[Split::kTest], 15);
  for (int c = 0; c < 4; ++c) {
    const int train = per_class[{c, Split::kTrain}];
    EXPECT_GE(train, 17);
    EXPECT_LE(train, 18);
  }
}

TEST(StratifiedSplitTest, PerClassSharesWithinOneRowAndPartition) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int classes = 2 + static_cast<int>(rng() % 4);
    const int n = 30 + static_cast<int>(rng() % 300);
    Labels y(static_cast<std::size_t>(n));
    for (auto& v : y) v = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
    std::vector<int> counts(static_cast<std::size_t>(classes));
    for (int v : y) ++counts[static_cast<std::size_t>(v)];
    if (*std::min_element(counts.begin(), counts.end()) < 3) continue;
    const SplitRatios r{0.6, 0.25, 0.15};
    const auto split = AssignStratifiedSplit(y, classes, r, trial);
    ASSERT_EQ(split.size(), y.size());  // every row tagged exactly once
    const double ratio[3] = {r.train, r.val, r.test};
    for (int c = 0; c < classes; ++c) {
      int got[3] = {0, 0, 0};
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == c) ++got[static_cast<int>(split[i])];
      }
      for (int s = 0; s < 3; ++s) {
        EXPECT_LE(std::abs(got[s] - counts[static_cast<std::size_t>(c)] * ratio[s]), 1.0 + 1e-9)
            << "trial " << trial << " class " << c << " split " << s;
      }
      EXPECT_GT(got[0], 0);
    }
  }
}

TEST(StratifiedSplitTest, SingleClassCohortKeepsThatClassEverywhere) {
  const Labels y(40, 1);
  const auto split = AssignStratifiedSplit(y, 3, {0.5, 0.25, 0.25}, 1);
  std::set<Split> seen(split.begin(), split.end());
  EXPECT_EQ(seen.size(), 3u);
}

TEST(StratifiedSplitTest, DeterministicGivenSeed) {
  const Labels y = BalancedLabels(200, 3);
  EXPECT_EQ(AssignStratifiedSplit(y, 3, {}, 9), AssignStratifiedSplit(y, 3, {}, 9));
  EXPECT_NE(AssignStratifiedSplit(y, 3, {}, 9), AssignStratifiedSplit(y, 3, {}, 10));
}

TEST(StratifiedSplitTest, TinyClassIsAnError) {
  Labels y = BalancedLabels(30, 2);
  y.push_back(2);
  y.push_back(2);
  EXPECT_THROW(AssignStratifiedSplit(y, 3, {0.7, 0.15, 0.15}, 1), InputError);
}

TEST(StratifiedSplitTest, RatiosMustSumToOne) {
  EXPECT_THROW((SplitRatios{0.7, 0.2, 0.2}.Validate()), InputError);
  EXPECT_THROW((SplitRatios{-0.1, 0.6, 0.5}.Validate()), InputError);
  EXPECT_NO_THROW((SplitRatios{0.8, 0.2, 0.0}.Validate()));
}

FeatureSchema MixedSchema() {
  FeatureSchema s;
  s.num_classes = 3;
  s.columns = {{"grp", ColumnKind::kSensitiveCategorical, {"a", "b"}, {}},
               {"age", ColumnKind::kSensitiveNumeric, {}, {}},
               {"x", ColumnKind::kNumeric, {}, {}},
               {"k", ColumnKind::kCategorical, {"p", "q", "r"}, {}},
               {"label", ColumnKind::kLabel, {}, {}}};
  return s;
}

RawTable MixedTable(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(50.0, 12.0);
  RawTable t{MixedSchema(), {"grp", "age", "x", "k", "label"}, {}};
  for (int i = 0; i < n; ++i) {
    t.rows.push_back({rng() % 2 ? "a" : "b", FormatDouble(std::round(nd(rng) * 100) / 100),
                      FormatDouble(std::round(nd(rng) * 1000) / 1000),
                      std::string(1, "pqr"[rng() % 3]), std::to_string(i % 3)});
  }
  return t;
}

TEST(IngestTest, TrainStatisticsOnlyAndInvertible) {
  const RawTable t = MixedTable(300, 3);
  const Cohort c = EncodeTable(t, {});
  const auto train = c.Indices(Split::kTrain);
  // Standardized numeric columns have zero mean and unit population variance on train.
  for (int j : {2, 3}) {
    double mean = 0.0, sq = 0.0;
    for (auto i : train) mean += c.x(static_cast<Eigen::Index>(i), j);
    mean /= static_cast<double>(train.size());
    for (auto i : train) sq += std::pow(c.x(static_cast<Eigen::Index>(i), j) - mean, 2);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / static_cast<double>(train.size()), 1.0, 1e-12);
  }
  const Matrix raw = Destandardize(c);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    double v = 0.0;
    ASSERT_TRUE(ParseDouble(t.rows[static_cast<std::size_t>(i)][2], &v));
    EXPECT_NEAR(raw(i, 3), v, 1e-9);
  }
  // One-hot blocks stay 0/1 and row-stochastic.
  for (Eigen::Index i = 0; i < c.x.rows(); ++i) {
    EXPECT_EQ(c.x(i, 0) + c.x(i, 1), 1.0);
    EXPECT_EQ(c.x(i, 4) + c.x(i, 5) + c.x(i, 6), 1.0);
  }
}

TEST(IngestTest, NumericSensitiveAttributeUsesTrainQuartilesWithoutEdges) {
  const Cohort c = EncodeTable(MixedTable(400, 4), {});
  const auto& age = c.Attribute("age");
  ASSERT_EQ(age.group_names.size(), 4u);
  ASSERT_EQ(age.bin_edges.size(), 3u);
  std::vector<int> count(4);
  for (auto i : c.Indices(Split::kTrain)) ++count[static_cast<std::size_t>(age.groups[i])];
  for (int k : count) EXPECT_NEAR(k, 70, 3);
}

TEST(IngestTest, EncodedCohortRoundTripsExactly) {
  const Cohort c = EncodeTable(MixedTable(120, 5), {});
  const auto dir = testing::TempDir("encoded");
  WriteEncodedCohort(c, dir);
  const Cohort back = ReadEncodedCohort(dir);
  ASSERT_EQ(back.x.rows(), c.x.rows());
  EXPECT_LE((back.x - c.x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.y, c.y);
  EXPECT_EQ(back.split, c.split);
  EXPECT_EQ(back.feature_names, c.feature_names);
  EXPECT_EQ(back.sensitive_columns, c.sensitive_columns);
  ASSERT_EQ(back.attributes.size(), c.attributes.size());
  for (std::size_t a = 0; a < c.attributes.size(); ++a) {
    EXPECT_EQ(back.attributes[a].groups, c.attributes[a].groups);
  }
}

TEST(IngestTest, ResplitRederivesStandardization) {
  const Cohort c = EncodeTable(MixedTable(200, 6), {});
  const Cohort r = StratifiedSplit(c, {0.5, 0.25, 0.25}, 99);
  EXPECT_EQ(r.Indices(Split::kTrain).size(), 100u);
  EXPECT_LE((Destandardize(r) - Destandardize(c)).cwiseAbs().maxCoeff(), 1e-9);
}

}  // namespace
}  // namespace fairmtl
