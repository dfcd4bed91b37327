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
#include <numeric>
#include <random>

#include "fairmtl/csv.h"
#include "fairmtl/parallel.h"

namespace fairmtl {
namespace {

constexpr double kMinDecrease = 1e-12;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Labels& y, int num_classes, const ForestConfig& config,
              std::uint64_t seed)
      : x_(x), y_(y), classes_(num_classes), config_(config), rng_(seed) {
    const int d = static_cast<int>(x.cols());
    const double frac = config.max_features_fraction > 0.0
                            ? config.max_features_fraction
                            : std::sqrt(static_cast<double>(d)) / d;
    mtry_ = std::clamp(static_cast<int>(std::floor(frac * d)), 1, d);
  }

  Tree Build(std::vector<std::size_t> sample) {
    Tree tree;
    Grow(&tree, std::move(sample), 0);
    return tree;
  }

 private:
  std::vector<double> Histogram(const std::vector<std::size_t>& rows) const {
    std::vector<double> h(static_cast<std::size_t>(classes_), 0.0);
    for (std::size_t r : rows) h[static_cast<std::size_t>(y_[r])] += 1.0;
    return h;
  }

  // Best threshold on one feature by a sorted sweep.
  SplitChoice BestOnFeature(const std::vector<std::size_t>& rows, int feature,
                            const std::vector<double>& parent_hist, double parent_gini) const {
    SplitChoice best;
    const auto f = static_cast<Eigen::Index>(feature);
    std::vector<std::size_t> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return x_(static_cast<Eigen::Index>(a), f) < x_(static_cast<Eigen::Index>(b), f);
    });
    const double n = static_cast<double>(rows.size());
    std::vector<double> left(static_cast<std::size_t>(classes_), 0.0);
    std::vector<double> right = parent_hist;
    const auto min_leaf = static_cast<std::size_t>(std::max(1, config_.min_samples_leaf));
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      const auto cls = static_cast<std::size_t>(y_[sorted[i]]);
      left[cls] += 1.0;
      right[cls] -= 1.0;
      const double v = x_(static_cast<Eigen::Index>(sorted[i]), f);
      const double next = x_(static_cast<Eigen::Index>(sorted[i + 1]), f);
      if (v == next) continue;
      const std::size_t n_left = i + 1;
      if (n_left < min_leaf || sorted.size() - n_left < min_leaf) continue;
      const double nl = static_cast<double>(n_left);
      const double nr = n - nl;
      const double decrease =
          parent_gini - (nl / n) * GiniImpurity(left) - (nr / n) * GiniImpurity(right);
      if (decrease > best.decrease) {
        best.feature = feature;
        best.threshold = 0.5 * (v + next);
        // Midpoints can round onto next; keep the split between the values.
        if (!(best.threshold < next)) best.threshold = v;
        best.decrease = decrease;
      }
    }
    return best;
  }

  int Grow(Tree* tree, std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(tree->nodes.size());
    tree->nodes.emplace_back();
    {
      TreeNode& node = tree->nodes.back();
      node.n_samples = rows.size();
      node.histogram = Histogram(rows);
      node.impurity = GiniImpurity(node.histogram);
    }
    const std::vector<double> hist = tree->nodes[static_cast<std::size_t>(id)].histogram;
    const double gini = tree->nodes[static_cast<std::size_t>(id)].impurity;
    const bool depth_ok = config_.max_depth <= 0 || depth < config_.max_depth;
    const auto min_leaf = static_cast<std::size_t>(std::max(1, config_.min_samples_leaf));
    if (gini <= 0.0 || !depth_ok || rows.size() < 2 * min_leaf) return id;

    // Sample mtry features; keep looking past mtry until a valid split appears.
    std::vector<int> features(static_cast<std::size_t>(x_.cols()));
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng_);
    SplitChoice best;
    for (std::size_t k = 0; k < features.size(); ++k) {
      if (static_cast<int>(k) >= mtry_ && best.feature >= 0) break;
      const SplitChoice c = BestOnFeature(rows, features[k], hist, gini);
      if (c.feature >= 0 && c.decrease > best.decrease) best = c;
    }
    if (best.feature < 0 || best.decrease <= kMinDecrease) return id;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    const auto f = static_cast<Eigen::Index>(best.feature);
    for (std::size_t r : rows) {
      (x_(static_cast<Eigen::Index>(r), f) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = Grow(tree, std::move(left_rows), depth + 1);
    const int right = Grow(tree, std::move(right_rows), depth + 1);
    TreeNode& node = tree->nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.impurity_decrease = best.decrease;
    node.left = left;
    node.right = right;
    return id;
  }

  const Matrix& x_;
  const Labels& y_;
  int classes_;
  ForestConfig config_;
  std::mt19937_64 rng_;
  int mtry_ = 1;
};

void CheckFitInputs(const Matrix& x, const Labels& y, int num_classes) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw InputError("forest: row mismatch");
  if (x.rows() == 0 || x.cols() == 0) throw InputError("forest: empty training data");
  if (num_classes < 2) throw InputError("forest: need at least 2 classes");
  for (int v : y) {
    if (v < 0 || v >= num_classes) throw InputError("forest: label out of range");
  }
  if (!x.allFinite()) throw InputError("forest: non-finite features");
}

}  // namespace

double GiniImpurity(const std::vector<double>& histogram) {
  const double n = std::accumulate(histogram.begin(), histogram.end(), 0.0);
  if (n <= 0.0) return 0.0;
  double s = 1.0;
  for (double c : histogram) s -= (c / n) * (c / n);
  return std::max(0.0, s);
}

const TreeNode& Tree::Leaf(const double* row) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    node = &nodes[static_cast<std::size_t>(row[node->feature] <= node->threshold ? node->left
                                                                                 : node->right)];
  }
  return *node;
}

Tree FitTree(const Matrix& x, const Labels& y, int num_classes,
             const std::vector<std::size_t>& sample, const ForestConfig& config,
             std::uint64_t seed) {
  CheckFitInputs(x, y, num_classes);
  TreeBuilder builder(x, y, num_classes, config, seed);
  return builder.Build(sample);
}

ForestModel FitForest(const Matrix& x, const Labels& y, int num_classes,
                      const ForestConfig& config) {
  CheckFitInputs(x, y, num_classes);
  if (config.n_trees < 1) throw InputError("forest: n_trees must be >= 1");
  ForestModel model;
  model.num_features = static_cast<int>(x.cols());
  model.num_classes = num_classes;
  model.config = config;
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  const std::uint64_t base = DeriveSeed(config.seed, SeedStream::kForest);
  const std::size_t n = y.size();
  ParallelFor(model.trees.size(), [&](std::size_t t) {
    const std::uint64_t tree_seed = DeriveSeed(base, t);
    std::mt19937_64 rng(tree_seed);
    std::vector<std::size_t> sample(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& s : sample) s = pick(rng);
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    TreeBuilder builder(x, y, num_classes, config, rng());
    model.trees[t] = builder.Build(std::move(sample));
  });
  return model;
}

Matrix TreePredictProba(const Tree& tree, const Matrix& x, int num_classes) {
  Matrix out(x.rows(), num_classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const TreeNode& leaf = tree.Leaf(x.row(i).data());
    const double total = static_cast<double>(leaf.n_samples);
    for (int c = 0; c < num_classes; ++c) {
      out(i, c) = leaf.histogram[static_cast<std::size_t>(c)] / total;
    }
  }
  return out;
}

Matrix ForestPredictProba(const ForestModel& model, const Matrix& x) {
  if (x.cols() != model.num_features) {
    throw InputError("forest: expected " + std::to_string(model.num_features) +
                     " features, got " + std::to_string(x.cols()));
  }
  Matrix sum = Matrix::Zero(x.rows(), model.num_classes);
  for (const auto& tree : model.trees) sum += TreePredictProba(tree, x, model.num_classes);
  return sum / static_cast<double>(model.trees.size());
}

nlohmann::json ToJson(const ForestModel& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"n_samples", n.n_samples},
                       {"impurity", n.impurity},
                       {"impurity_decrease", n.impurity_decrease},
                       {"histogram", n.histogram}});
    }
    trees.push_back(std::move(nodes));
  }
  const auto& c = model.config;
  return {{"format", "fairmtl.forest"},
          {"version", 1},
          {"num_features", model.num_features},
          {"num_classes", model.num_classes},
          {"config",
           {{"n_trees", c.n_trees},
            {"max_depth", c.max_depth},
            {"max_features_fraction", c.max_features_fraction},
            {"min_samples_leaf", c.min_samples_leaf},
            {"bootstrap", c.bootstrap},
            {"seed", c.seed}}},
          {"trees", std::move(trees)}};
}

ForestModel ForestModelFromJson(const nlohmann::json& j) {
  ForestModel m;
  try {
    if (j.at("format").get<std::string>() != "fairmtl.forest") {
      throw InputError("not a forest checkpoint");
    }
    m.num_features = j.at("num_features").get<int>();
    m.num_classes = j.at("num_classes").get<int>();
    const auto& c = j.at("config");
    m.config.n_trees = c.at("n_trees").get<int>();
    m.config.max_depth = c.at("max_depth").get<int>();
    m.config.max_features_fraction = c.at("max_features_fraction").get<double>();
    m.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
    m.config.bootstrap = c.at("bootstrap").get<bool>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    for (const auto& jt : j.at("trees")) {
      Tree t;
      for (const auto& jn : jt) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.n_samples = jn.at("n_samples").get<std::size_t>();
        n.impurity = jn.at("impurity").get<double>();
        n.impurity_decrease = jn.at("impurity_decrease").get<double>();
        n.histogram = jn.at("histogram").get<std::vector<double>>();
        t.nodes.push_back(std::move(n));
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("forest JSON: ") + e.what());
  }
  for (const auto& t : m.trees) {
    if (t.nodes.empty()) throw InputError("forest JSON: empty tree");
    const int count = static_cast<int>(t.nodes.size());
    for (const auto& n : t.nodes) {
      if (n.histogram.size() != static_cast<std::size_t>(m.num_classes)) {
        throw InputError("forest JSON: histogram width mismatch");
      }
      if (!n.is_leaf() && (n.feature >= m.num_features || n.left <= 0 || n.right <= 0 ||
                           n.left >= count || n.right >= count)) {
        throw InputError("forest JSON: malformed node");
      }
    }
  }
  return m;
}

void SaveForest(const ForestModel& model, const std::filesystem::path& path) {
  WriteTextFile(path, ToJson(model).dump() + "\n");
}

ForestModel LoadForest(const std::filesystem::path& path) {
  const nlohmann::json j = ReadJsonFile(path);
  return ForestModelFromJson(j);
}

}  // namespace fairmtl
