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

// Model explanations: interventional Shapley values for any batch scorer
// (exact subset enumeration or permutation sampling) and Gini importance of
// a fitted forest.
//
// The coalition value f(S) is the mean score over a background sample where
// features in S take the instance's values and the others keep the
// background row's values.

#ifndef FAIRMTL_EXPLAIN_H_
#define FAIRMTL_EXPLAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"
#include "fairmtl/forest.h"

namespace fairmtl {

// Maps a batch of rows to one score per row (for example P(class c)).
using BatchScorer = std::function<Vector(const Matrix&)>;

inline constexpr int kMaxExactFeatures = 15;

enum class ShapMethod { kExact, kSampled };

struct ShapExplanation {
  std::size_t instance = 0;
  int target_class = 0;
  ShapMethod method = ShapMethod::kExact;
  double base_value = 0.0;    // mean score over the background
  double model_output = 0.0;  // score of the instance
  Vector attributions;
  Vector standard_errors;     // zeros for the exact method
  int n_samples = 0;
  std::uint64_t seed = 0;

  // |base + sum(attributions) - model_output|
  double LocalAccuracyGap() const;
};

// Throws InputError when the instance has more than kMaxExactFeatures features.
ShapExplanation ShapleyExact(const BatchScorer& scorer, const RowVector& instance,
                             const Matrix& background, int target_class,
                             std::size_t instance_id = 0);

// Permutation sampling: sample s walks a random feature order starting from
// background row (s mod n_background), switching features to the instance's
// values one at a time. Attributions are the mean marginal contributions;
// standard errors are their sample standard deviations over sqrt(n_samples).
ShapExplanation ShapleySampled(const BatchScorer& scorer, const RowVector& instance,
                               const Matrix& background, int target_class, int n_samples,
                               std::uint64_t seed, std::size_t instance_id = 0);

nlohmann::json ToJson(const ShapExplanation& e, const std::vector<std::string>& feature_names);

struct GiniImportance {
  Vector scores;
  bool normalized = false;
  // False when every tree is a single leaf; scores are then all zero and
  // normalization is skipped.
  bool any_split = false;
};

// I_j = sum over trees and over splits on j of (n_node / n_root) * decrease.
GiniImportance ComputeGiniImportance(const ForestModel& model, bool normalize = true);

struct RankEntry {
  std::size_t feature = 0;
  std::string name;
  double score = 0.0;
  int rank = 0;  // 1-based
};

// Descending by score, ties by lower feature index; top_n larger than the
// feature count returns everything.
std::vector<RankEntry> RankReport(const Vector& scores, const std::vector<std::string>& names,
                                  std::size_t top_n);

std::string RankReportCsv(const std::vector<RankEntry>& entries);

}  // namespace fairmtl

#endif  // FAIRMTL_EXPLAIN_H_
