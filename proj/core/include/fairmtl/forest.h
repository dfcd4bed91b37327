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

// CART random forest baseline (Gini impurity, bootstrap rows, random
// feature subsets per split). Every internal node keeps the impurity
// decrease of its split so that Gini importance can be recomputed from a
// saved model.

#ifndef FAIRMTL_FOREST_H_
#define FAIRMTL_FOREST_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"

namespace fairmtl {

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  std::size_t n_samples = 0;
  double impurity = 0.0;
  // G(t) - n_L / n_t G(L) - n_R / n_t G(R); 0 for leaves.
  double impurity_decrease = 0.0;
  std::vector<double> histogram;  // class counts of the node's samples

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& Leaf(const double* row) const;
};

struct ForestConfig {
  int n_trees = 200;
  int max_depth = 0;                  // 0 = unlimited
  double max_features_fraction = 0.0;  // 0 = sqrt(d) / d
  int min_samples_leaf = 2;
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct ForestModel {
  int num_features = 0;
  int num_classes = 0;
  ForestConfig config;
  std::vector<Tree> trees;
};

double GiniImpurity(const std::vector<double>& histogram);

// Trees are grown independently from seeds derived from config.seed, so the
// result does not depend on the worker count. Constant features yield
// single-leaf trees.
ForestModel FitForest(const Matrix& x, const Labels& y, int num_classes, const ForestConfig& config);
// Grows one tree on the given sample (rows may repeat).
Tree FitTree(const Matrix& x, const Labels& y, int num_classes,
             const std::vector<std::size_t>& sample, const ForestConfig& config,
             std::uint64_t seed);

// Leaf class frequencies of one tree.
Matrix TreePredictProba(const Tree& tree, const Matrix& x, int num_classes);
// Mean of the per-tree leaf class frequencies.
Matrix ForestPredictProba(const ForestModel& model, const Matrix& x);

nlohmann::json ToJson(const ForestModel& model);
ForestModel ForestModelFromJson(const nlohmann::json& j);
void SaveForest(const ForestModel& model, const std::filesystem::path& path);
ForestModel LoadForest(const std::filesystem::path& path);

}  // namespace fairmtl

#endif  // FAIRMTL_FOREST_H_
