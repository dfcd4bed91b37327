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

#include "fairmtl/report.h"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fairmtl/ablation.h"
#include "fairmtl/csv.h"
#include "fairmtl/subgroup.h"
#include "fairmtl/synth.h"

namespace fairmtl {
namespace {

Predictions Noisy(int n, double correct, std::uint64_t seed, const std::string& name) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u;
  Predictions p;
  p.model = name;
  p.num_classes = 3;
  p.proba = Matrix(n, 3);
  AttributeGroups sex{"sex", {"F", "M"}, {}};
  for (int i = 0; i < n; ++i) {
    const int y = static_cast<int>(rng() % 3);
    const int g = static_cast<int>(rng() % 2);
    const int pred = u(rng) < correct - 0.2 * g ? y : static_cast<int>(rng() % 3);
    p.y.push_back(y);
    p.pred.push_back(pred);
    sex.groups.push_back(g);
    p.proba.row(i).setConstant(0.1);
    p.proba(i, pred) = 0.8;
  }
  p.attributes = {sex};
  return p;
}

TEST(ReportTest, ShapeAndIntervals) {
  const Predictions p = Noisy(400, 0.8, 1, "m");
  const FairnessReport r = BuildFairnessReport(p, {200, 0.9, 5});
  EXPECT_TRUE(r.intervals_computed);
  EXPECT_EQ(r.n_rows, 400u);
  ASSERT_EQ(r.attributes.size(), 1u);
  EXPECT_EQ(r.attributes[0].dp.size(), 3u);
  std::vector<std::string> names;
  for (const auto& iv : r.intervals) {
    names.push_back(iv.metric);
    EXPECT_LE(iv.ci.lower, iv.ci.point);
    EXPECT_LE(iv.ci.point, iv.ci.upper);
    EXPECT_EQ(iv.ci.level, 0.9);
  }
  EXPECT_EQ(names, (std::vector<std::string>{"accuracy", "macro_f1", "macro_auroc", "dp_mean/sex",
                                             "eo_mean/sex"}));
  EXPECT_NEAR(r.intervals[0].ci.point, r.overall.accuracy, 1e-15);
  EXPECT_NEAR(r.intervals[4].ci.point, r.attributes[0].eo_mean, 1e-15);
  const nlohmann::json j = ToJson(r);
  EXPECT_EQ(j.at("format"), "fairmtl.fairness_report");
}

TEST(ReportTest, DisabledIntervalsAreMarked) {
  const FairnessReport r = BuildFairnessReport(Noisy(100, 0.8, 2, "m"), {0, 0.95, 0});
  EXPECT_FALSE(r.intervals_computed);
  EXPECT_TRUE(r.intervals.empty());
  EXPECT_EQ(ToJson(r).at("confidence_intervals").at("computed"), false);
}

TEST(ReportTest, Deterministic) {
  const Predictions p = Noisy(300, 0.7, 3, "m");
  EXPECT_EQ(ToJson(BuildFairnessReport(p, {150, 0.95, 4})), ToJson(BuildFairnessReport(p, {150, 0.95, 4})));
}

TEST(ReportTest, CsvTables) {
  const FairnessReport r = BuildFairnessReport(Noisy(200, 0.8, 4, "m"), {0, 0.95, 0});
  const CsvTable per_class = ParseCsv(PerClassCsv(r));
  EXPECT_EQ(per_class.header, (std::vector<std::string>{"attribute", "class", "dp", "eo", "tpr_gap", "fpr_gap"}));
  EXPECT_EQ(per_class.rows.size(), 3u + 2u);  // classes plus mean and max
  const CsvTable groups = ParseCsv(GroupCsv(r));
  EXPECT_EQ(groups.rows.size(), 2u);
  const CsvTable metrics = ParseCsv(MetricsCsv(r));
  EXPECT_EQ(metrics.header, (std::vector<std::string>{"metric", "value", "lower", "upper"}));
}

TEST(ReportTest, ComparisonDetectsAShiftedModel) {
  const Predictions fair = Noisy(500, 0.8, 5, "fair");
  Predictions biased = fair;
  biased.model = "biased";
  std::mt19937_64 rng(6);
  for (std::size_t i = 0; i < biased.pred.size(); ++i) {
    if (biased.attributes[0].groups[i] == 1 && rng() % 2) biased.pred[i] = 0;
  }
  const auto sig = CompareDisparities(fair, biased, {200, 0.95, 7});
  ASSERT_EQ(sig.size(), 2u);
  EXPECT_EQ(sig[0].model_a, "fair");
  EXPECT_EQ(sig[0].model_b, "biased");
  EXPECT_GT(sig[0].test.mean_difference, 0.0);
  EXPECT_LT(sig[0].test.p, 1e-6);
  Predictions other = Noisy(400, 0.8, 5, "x");
  EXPECT_ANY_THROW(CompareDisparities(fair, other, {200, 0.95, 7}));
}

TEST(AblationTest, FourRowsSixMetricsAndDeterminism) {
  SynthSpec spec;
  spec.n_rows = 600;
  spec.subgroup_proportions = {0.7, 0.3};
  spec.seed = 2;
  const Cohort c = GenerateSynthetic(spec);
  SubgroupOptions so;
  so.autoencoder_epochs = 100;
  so.seed = 2;
  const SubgroupModel sm = InferSubgroups(c, so);
  TrainingConfig cfg;
  cfg.model.hidden_widths = {16, 8};
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 4;
  cfg.seed = 2;
  const AblationRun run = RunAblation(c, sm.z, 2, cfg);
  ASSERT_EQ(run.table.rows.size(), 4u);
  EXPECT_EQ(run.table.attributes, (std::vector<std::string>{"sex", "age"}));
  EXPECT_EQ(run.table.rows[0].variant, "FAIR-MTL");
  EXPECT_EQ(run.table.rows[3].variant, "w/o task heads");
  const CsvTable csv = ParseCsv(AblationCsv(run.table));
  EXPECT_EQ(csv.header, (std::vector<std::string>{"variant", "accuracy", "auc", "dp_sex", "eo_sex",
                                                  "dp_age", "eo_age"}));
  EXPECT_EQ(csv.rows.size(), 4u);
  EXPECT_EQ(run.models[3].params.k(), 1);
  EXPECT_EQ(run.models[2].params.encoders.size(), 2u);
  EXPECT_EQ(run.models[1].weights.w, (std::vector<double>{0.5, 0.5}));
  const AblationRun again = RunAblation(c, sm.z, 2, cfg);
  EXPECT_EQ(ToJson(again.table), ToJson(run.table));
}

}  // namespace
}  // namespace fairmtl
