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

#include "fairmtl/synth.h"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fairmtl/csv.h"

namespace fairmtl {
namespace {

int SampleCategorical(const std::vector<double>& p, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(p.size()) - 1;
}

std::string Round4(double v) { return FormatDouble(std::round(v * 1e4) / 1e4); }

}  // namespace

double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double StandardNormal(std::mt19937_64& rng) {
  double u1 = Uniform01(rng);
  const double u2 = Uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SynthSpec::Validate() const {
  if (subgroup_count < 1) throw InputError("synth: subgroup_count must be >= 1");
  if (label_count < 2) throw InputError("synth: label_count must be >= 2");
  if (n_noise_features < 0) throw InputError("synth: n_noise_features must be >= 0");
  if (subgroup_proportions.size() != static_cast<std::size_t>(subgroup_count)) {
    throw InputError("synth: subgroup_proportions needs subgroup_count entries");
  }
  if (outcome_shift.size() != static_cast<std::size_t>(subgroup_count)) {
    throw InputError("synth: outcome_shift needs subgroup_count entries");
  }
  for (double p : subgroup_proportions) {
    if (!(p > 0.0)) throw InputError("synth: degenerate subgroup proportion (must be > 0)");
  }
  const double total =
      std::accumulate(subgroup_proportions.begin(), subgroup_proportions.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw InputError("synth: subgroup_proportions must sum to 1");
  }
  for (double s : outcome_shift) {
    if (!std::isfinite(s)) throw InputError("synth: outcome_shift must be finite");
  }
  if (n_rows < 10 * subgroup_count) {
    throw InputError("synth: n_rows must be at least 10 x subgroup_count");
  }
}

nlohmann::json ToJson(const SynthSpec& spec) {
  return {{"n_rows", spec.n_rows},
          {"n_noise_features", spec.n_noise_features},
          {"subgroup_count", spec.subgroup_count},
          {"subgroup_proportions", spec.subgroup_proportions},
          {"outcome_shift", spec.outcome_shift},
          {"label_count", spec.label_count},
          {"heterogeneous_effects", spec.heterogeneous_effects},
          {"seed", spec.seed}};
}

SynthSpec SynthSpecFromJson(const nlohmann::json& j) {
  SynthSpec spec;
  try {
    spec.n_rows = j.value("n_rows", spec.n_rows);
    spec.n_noise_features = j.value("n_noise_features", spec.n_noise_features);
    spec.subgroup_count = j.value("subgroup_count", spec.subgroup_count);
    spec.subgroup_proportions = j.value("subgroup_proportions", spec.subgroup_proportions);
    spec.outcome_shift = j.value("outcome_shift", spec.outcome_shift);
    spec.label_count = j.value("label_count", spec.label_count);
    spec.heterogeneous_effects = j.value("heterogeneous_effects", spec.heterogeneous_effects);
    spec.seed = j.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("synth spec: ") + e.what());
  }
  spec.Validate();
  return spec;
}

SyntheticData GenerateSyntheticTable(const SynthSpec& spec) {
  spec.Validate();
  const int k_groups = spec.subgroup_count;
  const int classes = spec.label_count;
  std::mt19937_64 rng(DeriveSeed(spec.seed, SeedStream::kSynth));

  SyntheticData data;
  data.coefficients.resize(classes, kSynthInformativeFeatures);
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < kSynthInformativeFeatures; ++j) {
      data.coefficients(c, j) = kSignalScale * StandardNormal(rng);
    }
  }

  FeatureSchema& schema = data.table.schema;
  schema.num_classes = classes;
  schema.columns.push_back({"sex", ColumnKind::kSensitiveCategorical, {"F", "M"}, {}});
  schema.columns.push_back({"age", ColumnKind::kSensitiveNumeric, {}, {30.0, 50.0, 70.0}});
  for (int j = 0; j < kSynthInformativeFeatures; ++j) {
    schema.columns.push_back({"x" + std::to_string(j + 1), ColumnKind::kNumeric, {}, {}});
  }
  for (int j = 0; j < spec.n_noise_features; ++j) {
    schema.columns.push_back({"noise" + std::to_string(j + 1), ColumnKind::kNumeric, {}, {}});
  }
  schema.columns.push_back({"label", ColumnKind::kLabel, {}, {}});
  for (const auto& c : schema.columns) data.table.header.push_back(c.name);

  std::vector<double> logits(static_cast<std::size_t>(classes));
  std::vector<double> probs(static_cast<std::size_t>(classes));
  std::vector<double> x(kSynthInformativeFeatures);
  data.table.rows.reserve(static_cast<std::size_t>(spec.n_rows));
  data.subgroup.reserve(static_cast<std::size_t>(spec.n_rows));
  for (int i = 0; i < spec.n_rows; ++i) {
    const int g = SampleCategorical(spec.subgroup_proportions, Uniform01(rng));
    const bool male = g % 2 == 0;
    const double age_mean = 30.0 + 40.0 * g / std::max(1, k_groups - 1);
    const double age = age_mean + 5.0 * StandardNormal(rng);
    for (double& v : x) v = StandardNormal(rng);

    std::vector<std::string> row;
    row.reserve(data.table.header.size());
    row.push_back(male ? "M" : "F");
    row.push_back(Round4(age));
    for (double v : x) row.push_back(Round4(v));
    for (int j = 0; j < spec.n_noise_features; ++j) row.push_back(Round4(StandardNormal(rng)));

    const int rotation = spec.heterogeneous_effects ? g : 0;
    double max_logit = -INFINITY;
    for (int c = 0; c < classes; ++c) {
      double l = spec.outcome_shift[static_cast<std::size_t>(g)] * c;
      for (int j = 0; j < kSynthInformativeFeatures; ++j) {
        l += data.coefficients(c, (j + rotation) % kSynthInformativeFeatures) *
             x[static_cast<std::size_t>(j)];
      }
      logits[static_cast<std::size_t>(c)] = l;
      max_logit = std::max(max_logit, l);
    }
    double z = 0.0;
    for (int c = 0; c < classes; ++c) {
      probs[static_cast<std::size_t>(c)] = std::exp(logits[static_cast<std::size_t>(c)] - max_logit);
      z += probs[static_cast<std::size_t>(c)];
    }
    for (double& p : probs) p /= z;
    const int label = SampleCategorical(probs, Uniform01(rng));
    row.push_back(std::to_string(label));

    data.table.rows.push_back(std::move(row));
    data.subgroup.push_back(g);
  }
  return data;
}

Cohort GenerateSynthetic(const SynthSpec& spec, const LoadOptions& options) {
  return EncodeTable(GenerateSyntheticTable(spec).table, options);
}

Cohort GenerateSynthetic(const SynthSpec& spec) {
  LoadOptions options;
  options.seed = spec.seed;
  return GenerateSynthetic(spec, options);
}

}  // namespace fairmtl
