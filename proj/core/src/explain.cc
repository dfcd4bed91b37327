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
#include <sstream>

#include "fairmtl/csv.h"

namespace fairmtl {
namespace {

constexpr std::size_t kRowsPerChunk = 1 << 14;

void CheckInputs(const RowVector& instance, const Matrix& background) {
  if (background.rows() == 0) throw InputError("shap: empty background sample");
  if (background.cols() != instance.size()) {
    throw InputError("shap: background width does not match the instance");
  }
}

Vector Score(const BatchScorer& scorer, const Matrix& rows) {
  Vector s = scorer(rows);
  if (s.size() != rows.rows()) throw InputError("shap: scorer returned the wrong length");
  return s;
}

}  // namespace

double ShapExplanation::LocalAccuracyGap() const {
  return std::abs(base_value + attributions.sum() - model_output);
}

ShapExplanation ShapleyExact(const BatchScorer& scorer, const RowVector& instance,
                             const Matrix& background, int target_class,
                             std::size_t instance_id) {
  CheckInputs(instance, background);
  const int f = static_cast<int>(instance.size());
  if (f > kMaxExactFeatures) {
    throw InputError("shap: exact enumeration supports at most " +
                     std::to_string(kMaxExactFeatures) + " features (got " +
                     std::to_string(f) + "); use the sampled method");
  }
  const std::size_t masks = std::size_t{1} << f;
  const auto nb = static_cast<std::size_t>(background.rows());

  // Coalition values f(S) for every subset mask.
  std::vector<double> value(masks, 0.0);
  const std::size_t masks_per_chunk = std::max<std::size_t>(1, kRowsPerChunk / nb);
  for (std::size_t m0 = 0; m0 < masks; m0 += masks_per_chunk) {
    const std::size_t m1 = std::min(masks, m0 + masks_per_chunk);
    Matrix batch(static_cast<Eigen::Index>((m1 - m0) * nb), f);
    for (std::size_t m = m0; m < m1; ++m) {
      for (std::size_t b = 0; b < nb; ++b) {
        auto row = batch.row(static_cast<Eigen::Index>((m - m0) * nb + b));
        row = background.row(static_cast<Eigen::Index>(b));
        for (int j = 0; j < f; ++j) {
          if (m & (std::size_t{1} << j)) row(j) = instance(j);
        }
      }
    }
    const Vector s = Score(scorer, batch);
    for (std::size_t m = m0; m < m1; ++m) {
      double acc = 0.0;
      for (std::size_t b = 0; b < nb; ++b) acc += s(static_cast<Eigen::Index>((m - m0) * nb + b));
      value[m] = acc / static_cast<double>(nb);
    }
  }

  // |S|! (|F| - |S| - 1)! / |F|!, exact in double for |F| <= 15.
  std::vector<double> fact(static_cast<std::size_t>(f) + 1, 1.0);
  for (int i = 1; i <= f; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
  std::vector<double> weight(static_cast<std::size_t>(f), 0.0);
  for (int s = 0; s < f; ++s) {
    weight[static_cast<std::size_t>(s)] =
        fact[static_cast<std::size_t>(s)] * fact[static_cast<std::size_t>(f - s - 1)] /
        fact[static_cast<std::size_t>(f)];
  }

  ShapExplanation e;
  e.instance = instance_id;
  e.target_class = target_class;
  e.method = ShapMethod::kExact;
  e.attributions = Vector::Zero(f);
  e.standard_errors = Vector::Zero(f);
  for (int j = 0; j < f; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double phi = 0.0;
    for (std::size_t m = 0; m < masks; ++m) {
      if (m & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(m))] * (value[m | bit] - value[m]);
    }
    e.attributions(j) = phi;
  }
  e.base_value = value[0];
  e.model_output = Score(scorer, Matrix(instance))(0);
  return e;
}

ShapExplanation ShapleySampled(const BatchScorer& scorer, const RowVector& instance,
                               const Matrix& background, int target_class, int n_samples,
                               std::uint64_t seed, std::size_t instance_id) {
  CheckInputs(instance, background);
  if (n_samples < 100) throw InputError("shap: n_samples must be >= 100");
  const int f = static_cast<int>(instance.size());
  const auto nb = static_cast<std::size_t>(background.rows());
  std::mt19937_64 rng(DeriveSeed(seed, SeedStream::kShap));

  Vector sum = Vector::Zero(f);
  Vector sum_sq = Vector::Zero(f);
  std::vector<int> order(static_cast<std::size_t>(f));
  const std::size_t per_chunk = std::max<std::size_t>(1, kRowsPerChunk / static_cast<std::size_t>(f + 1));
  for (std::size_t s0 = 0; s0 < static_cast<std::size_t>(n_samples); s0 += per_chunk) {
    const std::size_t s1 = std::min<std::size_t>(static_cast<std::size_t>(n_samples), s0 + per_chunk);
    Matrix batch(static_cast<Eigen::Index>((s1 - s0) * static_cast<std::size_t>(f + 1)), f);
    std::vector<std::vector<int>> orders;
    for (std::size_t s = s0; s < s1; ++s) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      orders.push_back(order);
      const auto base_row = static_cast<Eigen::Index>((s - s0) * static_cast<std::size_t>(f + 1));
      RowVector row = background.row(static_cast<Eigen::Index>(s % nb));
      batch.row(base_row) = row;
      for (int t = 0; t < f; ++t) {
        row(order[static_cast<std::size_t>(t)]) = instance(order[static_cast<std::size_t>(t)]);
        batch.row(base_row + t + 1) = row;
      }
    }
    const Vector scores = Score(scorer, batch);
    for (std::size_t s = s0; s < s1; ++s) {
      const auto base_row = static_cast<Eigen::Index>((s - s0) * static_cast<std::size_t>(f + 1));
      const auto& ord = orders[s - s0];
      for (int t = 0; t < f; ++t) {
        const double delta = scores(base_row + t + 1) - scores(base_row + t);
        sum(ord[static_cast<std::size_t>(t)]) += delta;
        sum_sq(ord[static_cast<std::size_t>(t)]) += delta * delta;
      }
    }
  }

  const double n = n_samples;
  ShapExplanation e;
  e.instance = instance_id;
  e.target_class = target_class;
  e.method = ShapMethod::kSampled;
  e.n_samples = n_samples;
  e.seed = seed;
  e.attributions = sum / n;
  e.standard_errors.resize(f);
  for (int j = 0; j < f; ++j) {
    const double var = std::max(0.0, (sum_sq(j) - n * e.attributions(j) * e.attributions(j)) / (n - 1.0));
    e.standard_errors(j) = std::sqrt(var / n);
  }
  e.base_value = Score(scorer, background).mean();
  e.model_output = Score(scorer, Matrix(instance))(0);
  return e;
}

nlohmann::json ToJson(const ShapExplanation& e, const std::vector<std::string>& feature_names) {
  nlohmann::json attributions = nlohmann::json::array();
  for (Eigen::Index j = 0; j < e.attributions.size(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    attributions.push_back({{"feature", j},
                            {"name", jj < feature_names.size() ? feature_names[jj] : ""},
                            {"value", e.attributions(j)},
                            {"standard_error", e.standard_errors(j)}});
  }
  nlohmann::json j = {{"instance", e.instance},
                      {"class", e.target_class},
                      {"method", e.method == ShapMethod::kExact ? "exact" : "sampled"},
                      {"base_value", e.base_value},
                      {"model_output", e.model_output},
                      {"local_accuracy_gap", e.LocalAccuracyGap()},
                      {"attributions", attributions}};
  if (e.method == ShapMethod::kSampled) {
    j["n_samples"] = e.n_samples;
    j["seed"] = e.seed;
  }
  return j;
}

GiniImportance ComputeGiniImportance(const ForestModel& model, bool normalize) {
  GiniImportance g;
  g.scores = Vector::Zero(model.num_features);
  for (const auto& tree : model.trees) {
    const double root = static_cast<double>(tree.nodes.front().n_samples);
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      g.any_split = true;
      g.scores(node.feature) += static_cast<double>(node.n_samples) / root * node.impurity_decrease;
    }
  }
  if (normalize && g.any_split && g.scores.sum() > 0.0) {
    g.scores /= g.scores.sum();
    g.normalized = true;
  }
  return g;
}

std::vector<RankEntry> RankReport(const Vector& scores, const std::vector<std::string>& names,
                                  std::size_t top_n) {
  if (scores.size() == 0) throw InputError("rank report: no scores");
  std::vector<std::size_t> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });
  idx.resize(std::min(top_n, idx.size()));
  std::vector<RankEntry> out;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const std::size_t j = idx[r];
    out.push_back({j, j < names.size() ? names[j] : "f" + std::to_string(j),
                   scores(static_cast<Eigen::Index>(j)), static_cast<int>(r + 1)});
  }
  return out;
}

std::string RankReportCsv(const std::vector<RankEntry>& entries) {
  std::ostringstream out;
  WriteCsvRow(out, {"rank", "feature", "name", "score"});
  for (const auto& e : entries) {
    WriteCsvRow(out, {std::to_string(e.rank), std::to_string(e.feature), e.name,
                      FormatDouble(e.score)});
  }
  return out.str();
}

}  // namespace fairmtl
