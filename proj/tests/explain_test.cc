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

#include "fairmtl/explain.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fairmtl/forest.h"
#include "fairmtl/model.h"
#include "test_util.h"

namespace fairmtl {
namespace {

BatchScorer RowWise(std::function<double(const RowVector&)> f) {
  return [f](const Matrix& x) {
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = f(x.row(i));
    return out;
  };
}

// A scorer with interactions and a nonlinearity; feature 5 is unused.
double Interacting(const RowVector& x) {
  return x(0) * x(1) + std::sin(x(2)) + 0.5 * x(3) * x(3) * x(4) - x(0);
}

// v(S): mean over background rows of f with features outside S taken from
// the background row.
double Coalition(const std::function<double(const RowVector&)>& f, const RowVector& inst,
                 const Matrix& bg, const std::vector<bool>& in) {
  double total = 0;
  for (Eigen::Index b = 0; b < bg.rows(); ++b) {
    RowVector z = bg.row(b);
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (in[j]) z(static_cast<Eigen::Index>(j)) = inst(static_cast<Eigen::Index>(j));
    }
    total += f(z);
  }
  return total / static_cast<double>(bg.rows());
}

// Shapley values as the average marginal contribution over all d! orders.
Vector PermutationOracle(const std::function<double(const RowVector&)>& f, const RowVector& inst,
                         const Matrix& bg) {
  const std::size_t d = static_cast<std::size_t>(inst.size());
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  Vector phi = Vector::Zero(static_cast<Eigen::Index>(d));
  int count = 0;
  do {
    std::vector<bool> in(d, false);
    double prev = Coalition(f, inst, bg, in);
    for (std::size_t j : order) {
      in[j] = true;
      const double cur = Coalition(f, inst, bg, in);
      phi(static_cast<Eigen::Index>(j)) += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  return phi / count;
}

TEST(ShapleyExactTest, AdditiveScorer) {
  const auto f = RowWise([](const RowVector& x) { return x(0) + 2 * x(1); });
  Matrix bg(2, 2);
  bg << 1, -1, -1, 1;
  RowVector inst(2);
  inst << 1, 1;
  const ShapExplanation e = ShapleyExact(f, inst, bg, 0);
  EXPECT_NEAR(e.attributions(0), 1.0, 1e-12);
  EXPECT_NEAR(e.attributions(1), 2.0, 1e-12);
  EXPECT_NEAR(e.base_value, 0.0, 1e-12);
  EXPECT_NEAR(e.model_output, 3.0, 1e-12);
}

TEST(ShapleyExactTest, ConstantScorerAndDummyFeature) {
  std::mt19937_64 rng(1);
  const Matrix bg = testing::RandomMatrix(7, 6, rng);
  const RowVector inst = testing::RandomMatrix(1, 6, rng);
  const ShapExplanation c = ShapleyExact(RowWise([](const RowVector&) { return 4.2; }), inst, bg, 0);
  for (Eigen::Index j = 0; j < 6; ++j) EXPECT_NEAR(c.attributions(j), 0.0, 1e-12);
  const ShapExplanation e = ShapleyExact(RowWise(Interacting), inst, bg, 0);
  EXPECT_NEAR(e.attributions(5), 0.0, 1e-9);
}

TEST(ShapleyExactTest, MatchesPermutationEnumerationOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    const Matrix bg = testing::RandomMatrix(5, 6, rng);
    const RowVector inst = testing::RandomMatrix(1, 6, rng);
    const ShapExplanation e = ShapleyExact(RowWise(Interacting), inst, bg, 0);
    const Vector oracle = PermutationOracle(Interacting, inst, bg);
    EXPECT_LE((e.attributions - oracle).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(e.LocalAccuracyGap(), 1e-6);
    EXPECT_TRUE(e.standard_errors.isZero());
  }
}

TEST(ShapleyExactTest, SymmetricFeaturesGetEqualCredit) {
  const auto f = RowWise([](const RowVector& x) { return std::tanh(x(0) + x(1)) * x(2) + x(0) * x(1); });
  std::mt19937_64 rng(3);
  Matrix bg = testing::RandomMatrix(6, 3, rng);
  bg.col(1) = bg.col(0);  // interchangeable on the background as well
  RowVector inst(3);
  inst << 0.7, 0.7, -1.2;
  const ShapExplanation e = ShapleyExact(f, inst, bg, 0);
  EXPECT_NEAR(e.attributions(0), e.attributions(1), 1e-9);
}

TEST(ShapleyExactTest, TooManyFeaturesPointsToSampling) {
  const Matrix bg = Matrix::Zero(2, 16);
  const RowVector inst = RowVector::Zero(16);
  try {
    ShapleyExact(RowWise([](const RowVector&) { return 0.0; }), inst, bg, 0);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("sampled"), std::string::npos);
  }
}

// A 6-feature desk network scored on P(class 1) through head 2.
BatchScorer DeskModel(const FairMtlParams& p) {
  return [&p](const Matrix& x) -> Vector {
    return Forward(p, x, std::vector<int>(static_cast<std::size_t>(x.rows()), 2), ForwardOptions{})
        .col(1);
  };
}

TEST(ShapleySampledTest, AgreesWithExactWithinThreeStandardErrors) {
  ModelConfig c;
  c.hidden_widths = {16, 8};
  const FairMtlParams p = InitFairMtl(6, c, 2, 3, 4);
  std::mt19937_64 rng(4);
  const Matrix bg = testing::RandomMatrix(20, 6, rng);
  const RowVector inst = testing::RandomMatrix(1, 6, rng);
  const ShapExplanation exact = ShapleyExact(DeskModel(p), inst, bg, 1);
  const ShapExplanation s = ShapleySampled(DeskModel(p), inst, bg, 1, 2000, 5);
  for (Eigen::Index j = 0; j < 6; ++j) {
    EXPECT_LE(std::abs(s.attributions(j) - exact.attributions(j)), 3 * s.standard_errors(j) + 1e-12)
        << "feature " << j;
  }
  // 2000 is a multiple of the background size, so every row starts the same
  // number of walks and the telescoping sums are exact.
  EXPECT_LT(s.LocalAccuracyGap(), 1e-9);
  EXPECT_NEAR(s.base_value, exact.base_value, 1e-12);
  EXPECT_EQ(s.n_samples, 2000);
  EXPECT_EQ(s.seed, 5u);
}

TEST(ShapleySampledTest, SymmetricFeaturesWithinThreeStandardErrors) {
  const auto f = RowWise([](const RowVector& x) { return std::tanh(x(0) + x(1)) * x(2); });
  std::mt19937_64 rng(6);
  Matrix bg = testing::RandomMatrix(10, 3, rng);
  bg.col(1) = bg.col(0);
  RowVector inst(3);
  inst << 1.1, 1.1, 0.4;
  const ShapExplanation s = ShapleySampled(f, inst, bg, 0, 1000, 7);
  const double se = std::hypot(s.standard_errors(0), s.standard_errors(1));
  EXPECT_LE(std::abs(s.attributions(0) - s.attributions(1)), 3 * se + 1e-12);
}

TEST(ShapleySampledTest, MoreSamplesDoNotRaiseStandardErrors) {
  std::mt19937_64 rng(8);
  const Matrix bg = testing::RandomMatrix(10, 6, rng);
  const RowVector inst = testing::RandomMatrix(1, 6, rng);
  std::vector<double> ratio;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = ShapleySampled(RowWise(Interacting), inst, bg, 0, 500, seed);
    const auto b = ShapleySampled(RowWise(Interacting), inst, bg, 0, 1000, seed);
    ratio.push_back(b.standard_errors.sum() / a.standard_errors.sum());
  }
  std::sort(ratio.begin(), ratio.end());
  EXPECT_LE((ratio[4] + ratio[5]) / 2, 1.0);
}

TEST(ShapleySampledTest, DeterministicAndValidated) {
  std::mt19937_64 rng(9);
  const Matrix bg = testing::RandomMatrix(4, 20, rng);
  const RowVector inst = testing::RandomMatrix(1, 20, rng);
  const auto f = RowWise([](const RowVector& x) { return x.sum() * x(3); });
  const auto a = ShapleySampled(f, inst, bg, 0, 100, 3);
  const auto b = ShapleySampled(f, inst, bg, 0, 100, 3);
  EXPECT_EQ(a.attributions, b.attributions);
  EXPECT_EQ(a.standard_errors, b.standard_errors);
  EXPECT_ANY_THROW(ShapleySampled(f, inst, bg, 0, 99, 3));
  const nlohmann::json j = ToJson(a, std::vector<std::string>(20, "f"));
  EXPECT_EQ(j.at("method"), "sampled");
  EXPECT_EQ(j.at("attributions").size(), 20u);
  EXPECT_EQ(j.at("seed"), 3);
}

ForestModel HandTree() {
  // Root splits feature 1 on 10 rows; its right child splits feature 2.
  Tree t;
  TreeNode root, left, right, rl, rr;
  root.feature = 1;
  root.left = 1;
  root.right = 2;
  root.n_samples = 10;
  root.impurity_decrease = 0.2;
  left.n_samples = 4;
  left.histogram = {4, 0};
  right.feature = 2;
  right.left = 3;
  right.right = 4;
  right.n_samples = 6;
  right.impurity_decrease = 0.3;
  rl.n_samples = 3;
  rl.histogram = {0, 3};
  rr.n_samples = 3;
  rr.histogram = {1, 2};
  root.histogram = {5, 5};
  right.histogram = {1, 5};
  t.nodes = {root, left, right, rl, rr};
  ForestModel m;
  m.num_features = 3;
  m.num_classes = 2;
  m.trees = {t};
  return m;
}

TEST(GiniTest, HandWalkedTree) {
  const GiniImportance raw = ComputeGiniImportance(HandTree(), false);
  EXPECT_NEAR(raw.scores(0), 0.0, 1e-15);
  EXPECT_NEAR(raw.scores(1), 0.2, 1e-15);
  EXPECT_NEAR(raw.scores(2), 0.6 * 0.3, 1e-15);
  const GiniImportance norm = ComputeGiniImportance(HandTree(), true);
  EXPECT_NEAR(norm.scores.sum(), 1.0, 1e-12);
  EXPECT_TRUE(norm.normalized);
}

TEST(GiniTest, DepthOneTreeHasOneNonzeroEntry) {
  std::mt19937_64 rng(10);
  const Matrix x = testing::RandomMatrix(100, 3, rng);
  Labels y;
  for (Eigen::Index i = 0; i < 100; ++i) y.push_back(x(i, 2) > 0 ? 1 : 0);
  ForestConfig c;
  c.n_trees = 1;
  c.max_depth = 1;
  c.bootstrap = false;
  c.max_features_fraction = 1.0;
  const ForestModel m = FitForest(x, y, 2, c);
  const GiniImportance g = ComputeGiniImportance(m, false);
  EXPECT_EQ((g.scores.array() != 0.0).count(), 1);
  EXPECT_NEAR(g.scores(2), m.trees[0].nodes[0].impurity_decrease, 1e-15);
}

// Recomputes I_j by walking every node of a fitted 3-feature forest.
TEST(GiniTest, FittedForestMatchesTreeWalkOracle) {
  std::mt19937_64 rng(11);
  const Matrix x = testing::RandomMatrix(300, 3, rng);
  Labels y;
  for (Eigen::Index i = 0; i < 300; ++i) y.push_back((x(i, 0) + 0.5 * x(i, 1) > 0 ? 1 : 0) + (x(i, 2) > 1 ? 1 : 0));
  ForestConfig c;
  c.n_trees = 25;
  c.seed = 3;
  ForestModel m = FitForest(x, y, 3, c);
  Vector oracle = Vector::Zero(3);
  for (const Tree& t : m.trees) {
    const double root = static_cast<double>(t.nodes[0].n_samples);
    for (const TreeNode& n : t.nodes) {
      if (n.feature >= 0) oracle(n.feature) += static_cast<double>(n.n_samples) / root * n.impurity_decrease;
    }
  }
  const GiniImportance g = ComputeGiniImportance(m, false);
  EXPECT_LE((g.scores - oracle).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_GE(g.scores.minCoeff(), 0.0);
  std::reverse(m.trees.begin(), m.trees.end());
  EXPECT_LE((ComputeGiniImportance(m, false).scores - oracle).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RankTest, OrderTiesAndTopN) {
  Vector s(3);
  s << 0.1, 0.7, 0.2;
  const auto top2 = RankReport(s, {"a", "b", "c"}, 2);
  ASSERT_EQ(top2.size(), 2u);
  EXPECT_EQ(top2[0].feature, 1u);
  EXPECT_EQ(top2[1].feature, 2u);
  EXPECT_EQ(top2[0].rank, 1);
  EXPECT_EQ(top2[0].name, "b");
  Vector tied(4);
  tied << 0.5, 0.2, 0.5, 0.5;
  const auto all = RankReport(tied, {"a", "b", "c", "d"}, 40);
  ASSERT_EQ(all.size(), 4u);
  EXPECT_EQ(all[0].feature, 0u);
  EXPECT_EQ(all[1].feature, 2u);
  EXPECT_EQ(all[2].feature, 3u);
  EXPECT_ANY_THROW(RankReport(Vector(0), {}, 3));
  EXPECT_EQ(RankReportCsv(top2).substr(0, 22), "rank,feature,name,scor");
}

}  // namespace
}  // namespace fairmtl
