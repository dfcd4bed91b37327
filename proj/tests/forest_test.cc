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

#include "fairmtl/forest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fairmtl/explain.h"
#include "test_util.h"

namespace fairmtl {
namespace {

struct Data {
  Matrix x;
  Labels y;
};

Data FeatureZeroDecides(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Data d{testing::RandomMatrix(n, 4, rng), {}};
  for (int i = 0; i < n; ++i) d.y.push_back(d.x(i, 0) > 0.3 ? 1 : 0);
  return d;
}

Data TwoMoons(int n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  std::normal_distribution<double> nd(0.0, noise);
  Data d{Matrix(n, 2), {}};
  for (int i = 0; i < n; ++i) {
    const double t = u(rng);
    if (i % 2 == 0) {
      d.x(i, 0) = std::cos(t) + nd(rng);
      d.x(i, 1) = std::sin(t) + nd(rng);
    } else {
      d.x(i, 0) = 1.0 - std::cos(t) + nd(rng);
      d.x(i, 1) = 0.5 - std::sin(t) + nd(rng);
    }
    d.y.push_back(i % 2);
  }
  return d;
}

double Accuracy(const Matrix& proba, const Labels& y) {
  int ok = 0;
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index arg;
    proba.row(i).maxCoeff(&arg);
    ok += static_cast<int>(arg) == y[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(ok) / static_cast<double>(proba.rows());
}

ForestConfig Small(int trees, std::uint64_t seed) {
  ForestConfig c;
  c.n_trees = trees;
  c.seed = seed;
  return c;
}

TEST(ForestTest, SingleDecisiveFeature) {
  const Data d = FeatureZeroDecides(300, 1);
  const ForestModel m = FitForest(d.x, d.y, 2, Small(30, 1));
  EXPECT_EQ(Accuracy(ForestPredictProba(m, d.x), d.y), 1.0);
  const GiniImportance imp = ComputeGiniImportance(m);
  const Eigen::Index top = std::max_element(imp.scores.begin(), imp.scores.end()) - imp.scores.begin();
  EXPECT_EQ(top, 0);
}

TEST(ForestTest, PureLabelsGiveSingleLeaves) {
  std::mt19937_64 rng(2);
  const Matrix x = testing::RandomMatrix(50, 3, rng);
  const ForestModel m = FitForest(x, Labels(50, 2), 3, Small(10, 2));
  for (const Tree& t : m.trees) EXPECT_EQ(t.nodes.size(), 1u);
  const GiniImportance imp = ComputeGiniImportance(m);
  for (double s : imp.scores) EXPECT_EQ(s, 0.0);
  EXPECT_FALSE(imp.any_split);
}

TEST(ForestTest, ConstantFeaturesGiveSingleLeaves) {
  const Matrix x = Matrix::Constant(40, 3, 1.5);
  Labels y;
  for (int i = 0; i < 40; ++i) y.push_back(i % 2);
  const ForestModel m = FitForest(x, y, 2, Small(5, 3));
  for (const Tree& t : m.trees) EXPECT_EQ(t.nodes.size(), 1u);
}

// k-nearest-neighbour oracle establishes that the task is learnable at 0.9.
TEST(ForestTest, TwoMoonsMatchesNearestNeighbourOracle) {
  const Data train = TwoMoons(400, 0.15, 3);
  const Data test = TwoMoons(200, 0.15, 4);
  int knn_ok = 0;
  for (Eigen::Index i = 0; i < test.x.rows(); ++i) {
    std::vector<std::pair<double, int>> dist;
    for (Eigen::Index j = 0; j < train.x.rows(); ++j) {
      dist.emplace_back((test.x.row(i) - train.x.row(j)).squaredNorm(), train.y[static_cast<std::size_t>(j)]);
    }
    std::partial_sort(dist.begin(), dist.begin() + 5, dist.end());
    int votes = 0;
    for (int k = 0; k < 5; ++k) votes += dist[static_cast<std::size_t>(k)].second;
    knn_ok += (votes >= 3 ? 1 : 0) == test.y[static_cast<std::size_t>(i)];
  }
  ASSERT_GE(knn_ok / 200.0, 0.9);
  const ForestModel m = FitForest(train.x, train.y, 2, Small(50, 5));
  EXPECT_GE(Accuracy(ForestPredictProba(m, test.x), test.y), 0.9);
}

TEST(ForestTest, LeafHistogramBecomesProbabilities) {
  Tree t;
  TreeNode leaf;
  leaf.histogram = {3, 1, 0, 0};
  leaf.n_samples = 4;
  t.nodes.push_back(leaf);
  ForestModel m;
  m.num_features = 2;
  m.num_classes = 4;
  m.trees = {t};
  const Matrix p = ForestPredictProba(m, Matrix::Zero(3, 2));
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(p(i, 0), 0.75);
    EXPECT_EQ(p(i, 1), 0.25);
    EXPECT_EQ(p(i, 2), 0.0);
  }
  EXPECT_ANY_THROW(ForestPredictProba(m, Matrix::Zero(3, 5)));
}

// Walks each tree by hand, independently of Tree::Leaf.
Matrix Retraverse(const ForestModel& m, const Matrix& x) {
  Matrix p = Matrix::Zero(x.rows(), m.num_classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const Tree& t : m.trees) {
      int node = 0;
      while (t.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& n = t.nodes[static_cast<std::size_t>(node)];
        node = x(i, n.feature) <= n.threshold ? n.left : n.right;
      }
      const auto& h = t.nodes[static_cast<std::size_t>(node)].histogram;
      double total = 0;
      for (double v : h) total += v;
      for (int c = 0; c < m.num_classes; ++c) p(i, c) += h[static_cast<std::size_t>(c)] / total;
    }
  }
  return p / static_cast<double>(m.trees.size());
}

TEST(ForestTest, ProbabilitiesMatchRetraversalOracle) {
  const Data train = TwoMoons(300, 0.3, 6);
  const ForestModel m = FitForest(train.x, train.y, 2, Small(20, 6));
  std::mt19937_64 rng(7);
  const Matrix x = testing::RandomMatrix(20, 2, rng);
  const Matrix p = ForestPredictProba(m, x);
  EXPECT_LE((p - Retraverse(m, x)).cwiseAbs().maxCoeff(), 1e-12);
  for (Eigen::Index i = 0; i < p.rows(); ++i) EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
}

TEST(ForestTest, TwoTreeAverageAndOrderInvariance) {
  const Data train = TwoMoons(200, 0.3, 8);
  ForestModel m = FitForest(train.x, train.y, 2, Small(7, 8));
  std::mt19937_64 rng(9);
  const Matrix x = testing::RandomMatrix(30, 2, rng);
  ForestModel a = m, b = m, ab = m;
  a.trees = {m.trees[0]};
  b.trees = {m.trees[1]};
  ab.trees = {m.trees[0], m.trees[1]};
  EXPECT_LE((ForestPredictProba(ab, x) - (ForestPredictProba(a, x) + ForestPredictProba(b, x)) / 2.0)
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
  const Matrix before = ForestPredictProba(m, x);
  std::reverse(m.trees.begin(), m.trees.end());
  EXPECT_LE((ForestPredictProba(m, x) - before).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ForestTest, StructuralInvariants) {
  const Data train = TwoMoons(300, 0.4, 10);
  const ForestModel m = FitForest(train.x, train.y, 2, Small(15, 10));
  for (const Tree& t : m.trees) {
    for (const TreeNode& n : t.nodes) {
      double total = 0;
      for (double v : n.histogram) {
        EXPECT_GE(v, 0.0);
        total += v;
      }
      EXPECT_EQ(total, static_cast<double>(n.n_samples));
      EXPECT_NEAR(n.impurity, GiniImpurity(n.histogram), 1e-12);
      if (n.is_leaf()) continue;
      EXPECT_GT(n.impurity_decrease, 0.0);
      const TreeNode& l = t.nodes[static_cast<std::size_t>(n.left)];
      const TreeNode& r = t.nodes[static_cast<std::size_t>(n.right)];
      EXPECT_EQ(l.n_samples + r.n_samples, n.n_samples);
      const double weighted = (static_cast<double>(l.n_samples) * l.impurity +
                               static_cast<double>(r.n_samples) * r.impurity) /
                              static_cast<double>(n.n_samples);
      EXPECT_LE(weighted, n.impurity + 1e-12);
      EXPECT_NEAR(n.impurity_decrease, n.impurity - weighted, 1e-12);
      EXPECT_GE(l.n_samples, 2u);
      EXPECT_GE(r.n_samples, 2u);
    }
  }
}

TEST(ForestTest, TreeBeatsMajorityOnItsBootstrapSample) {
  const Data train = TwoMoons(200, 0.5, 11);
  std::mt19937_64 rng(12);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::size_t> sample;
    for (int i = 0; i < 200; ++i) sample.push_back(rng() % 200);
    const Tree tree = FitTree(train.x, train.y, 2, sample, Small(1, 0), static_cast<std::uint64_t>(t));
    const Matrix p = TreePredictProba(tree, train.x, 2);
    int ok = 0, ones = 0;
    for (std::size_t r : sample) {
      ok += (p(static_cast<Eigen::Index>(r), 1) > p(static_cast<Eigen::Index>(r), 0) ? 1 : 0) == train.y[r];
      ones += train.y[r];
    }
    EXPECT_GE(ok, std::max(ones, 200 - ones));
  }
}

TEST(ForestTest, DeterministicAndThreadIndependentJsonRoundTrip) {
  const Data train = TwoMoons(150, 0.3, 13);
  ForestModel a, b;
  {
    testing::ScopedThreads one(1);
    a = FitForest(train.x, train.y, 2, Small(12, 13));
  }
  {
    testing::ScopedThreads many(4);
    b = FitForest(train.x, train.y, 2, Small(12, 13));
  }
  EXPECT_EQ(ToJson(a), ToJson(b));
  const auto dir = testing::TempDir("forest");
  SaveForest(a, dir / "f.json");
  const ForestModel back = LoadForest(dir / "f.json");
  EXPECT_EQ(ToJson(back), ToJson(a));
  EXPECT_EQ(ForestPredictProba(back, train.x), ForestPredictProba(a, train.x));
}

TEST(ForestTest, NeedsTwoClasses) {
  EXPECT_ANY_THROW(FitForest(Matrix::Zero(10, 2), Labels(10, 0), 1, Small(3, 1)));
}

}  // namespace
}  // namespace fairmtl
