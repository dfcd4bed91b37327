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

// Bootstrap confidence intervals and the paired t-test used to compare
// per-resample disparity series of two models.

#ifndef FAIRMTL_STATS_H_
#define FAIRMTL_STATS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace fairmtl {

// Metric evaluated on a multiset of row indices; nullopt when undefined on
// that resample (for example a class missing from it).
using ResampleMetric = std::function<std::optional<double>(std::span<const std::size_t>)>;

inline constexpr int kMaxDrawsPerResample = 10;

struct BootstrapCi {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int n_resamples = 0;  // valid resamples used
  std::uint64_t seed = 0;
  int redraws = 0;      // undefined resamples replaced by a new draw
  int abandoned = 0;    // resamples still undefined after kMaxDrawsPerResample draws
  // The percentile interval did not contain the point estimate and was
  // widened to include it.
  bool widened_to_point = false;
};

// Resample r, attempt a draws N indices with replacement from an mt19937_64
// seeded with DeriveSeed(DeriveSeed(seed, kBootstrap), r * kMaxDrawsPerResample + a).
std::vector<std::size_t> BootstrapSample(std::size_t n_rows, std::uint64_t seed, int resample,
                                         int attempt);

// Percentile interval (type-7 quantiles) over seeded resamples. Resamples
// are independent and evaluated in parallel; the result does not depend on
// the worker count.
BootstrapCi ComputeBootstrapCi(const ResampleMetric& metric, std::size_t n_rows, double level,
                               int n_resamples, std::uint64_t seed);

struct PairedSeries {
  std::vector<double> a;
  std::vector<double> b;
  int skipped = 0;
};

// Evaluates both metrics on the same resample indices; a resample is kept
// only when both are defined.
PairedSeries PairedBootstrapSeries(const ResampleMetric& metric_a, const ResampleMetric& metric_b,
                                   std::size_t n_rows, int n_resamples, std::uint64_t seed);

struct PairedTTest {
  double t = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
  double sd_difference = 0.0;
  int n = 0;
  // Differences have zero variance: p is 0 when the mean is nonzero, else 1.
  bool zero_variance = false;
};

// Paired t statistic on d = b - a with n - 1 degrees of freedom; two-sided p.
PairedTTest PairedBootstrapTTest(std::span<const double> a, std::span<const double> b);

// Type-7 quantile of an unsorted sample.
double Quantile(std::vector<double> values, double q);

}  // namespace fairmtl

#endif  // FAIRMTL_STATS_H_
