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

// Seeded generator for biased tabular cohorts with latent subgroups.
//
// Sampling recipe (all draws from one mt19937_64 stream seeded with
// DeriveSeed(seed, SeedStream::kSynth); uniforms are (bits >> 11) * 2^-53 and
// normals are Box-Muller pairs, cosine branch only):
//
//   1. W: C x 4 matrix of N(0, 1) entries scaled by kSignalScale, drawn row
//      by row.
//   2. For each row, in order:
//        g      ~ Categorical(subgroup_proportions)       (inverse CDF, 1 uniform)
//        sex    = "M" if g is even else "F"              (no draw)
//        age    = mu_g + 5 * N(0, 1),  mu_g = 30 + 40 g / max(1, K - 1)
//        x1..x4 ~ N(0, 1)   informative
//        noise  ~ N(0, 1)   n_noise_features of them
//        logit_c = sum_j W[c][(j + g) mod 4] * x_{j+1} + outcome_shift[g] * c
//                  (without heterogeneous_effects the column shift is 0)
//        y      ~ Categorical(softmax(logit))              (inverse CDF, 1 uniform)
//      Numeric values are rounded to 4 decimals before formatting. The age
//      column is binned at {30, 50, 70} for fairness audits.
//
// Because x is i.i.d. standard normal, permuting which feature drives which
// coefficient leaves the class prior of a subgroup unchanged; only
// outcome_shift moves class priors between subgroups.

#ifndef FAIRMTL_SYNTH_H_
#define FAIRMTL_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"
#include "fairmtl/ingest.h"

namespace fairmtl {

inline constexpr int kSynthInformativeFeatures = 4;
inline constexpr double kSignalScale = 2.0;

struct SynthSpec {
  int n_rows = 1000;
  int n_noise_features = 2;
  int subgroup_count = 2;
  std::vector<double> subgroup_proportions = {0.5, 0.5};
  // Per-subgroup logit offset, multiplied by the class index.
  std::vector<double> outcome_shift = {0.0, 0.0};
  int label_count = 4;
  bool heterogeneous_effects = true;
  std::uint64_t seed = 0;

  void Validate() const;
};

nlohmann::json ToJson(const SynthSpec& spec);
SynthSpec SynthSpecFromJson(const nlohmann::json& j);

struct SyntheticData {
  RawTable table;
  std::vector<int> subgroup;  // ground-truth subgroup per row, 0-based
  Matrix coefficients;        // W, C x 4
};

SyntheticData GenerateSyntheticTable(const SynthSpec& spec);

// Generates and encodes with the given split options.
Cohort GenerateSynthetic(const SynthSpec& spec, const LoadOptions& options);
// Default 70/15/15 split seeded from spec.seed.
Cohort GenerateSynthetic(const SynthSpec& spec);

// The portable draws used by the recipe above.
double Uniform01(std::mt19937_64& rng);
double StandardNormal(std::mt19937_64& rng);

}  // namespace fairmtl

#endif  // FAIRMTL_SYNTH_H_
