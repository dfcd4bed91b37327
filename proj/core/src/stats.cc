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

#include "fairmtl/stats.h"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "fairmtl/common.h"
#include "fairmtl/parallel.h"

namespace fairmtl {

std::vector<std::size_t> BootstrapSample(std::size_t n_rows, std::uint64_t seed, int resample,
                                         int attempt) {
  const std::uint64_t stream =
      static_cast<std::uint64_t>(resample) * kMaxDrawsPerResample + static_cast<std::uint64_t>(attempt);
  std::mt19937_64 rng(DeriveSeed(DeriveSeed(seed, SeedStream::kBootstrap), stream));
  std::uniform_int_distribution<std::size_t> pick(0, n_rows - 1);
  std::vector<std::size_t> rows(n_rows);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapCi ComputeBootstrapCi(const ResampleMetric& metric, std::size_t n_rows, double level,
                               int n_resamples, std::uint64_t seed) {
  if (n_resamples < 100) throw InputError("bootstrap: n_resamples must be >= 100");
  if (!(level > 0.0 && level < 1.0)) throw InputError("bootstrap: level must be in (0, 1)");
  if (n_rows == 0) throw InputError("bootstrap: no rows");

  std::vector<std::size_t> all(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) all[i] = i;
  const auto point = metric(all);
  if (!point) throw InputError("bootstrap: metric undefined on the full sample");

  std::vector<std::optional<double>> values(static_cast<std::size_t>(n_resamples));
  std::vector<int> draws(static_cast<std::size_t>(n_resamples), 0);
  ParallelFor(static_cast<std::size_t>(n_resamples), [&](std::size_t r) {
    for (int a = 0; a < kMaxDrawsPerResample; ++a) {
      ++draws[r];
      const auto rows = BootstrapSample(n_rows, seed, static_cast<int>(r), a);
      if (auto v = metric(rows)) {
        values[r] = v;
        return;
      }
    }
  });

  BootstrapCi ci;
  ci.point = *point;
  ci.level = level;
  ci.seed = seed;
  std::vector<double> valid;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r]) {
      valid.push_back(*values[r]);
      ci.redraws += draws[r] - 1;
    } else {
      ++ci.abandoned;
      ci.redraws += draws[r] - 1;
    }
  }
  if (valid.empty()) throw NumericError("bootstrap: metric undefined on every resample");
  ci.n_resamples = static_cast<int>(valid.size());
  const double alpha = 1.0 - level;
  ci.lower = Quantile(valid, alpha / 2.0);
  ci.upper = Quantile(valid, 1.0 - alpha / 2.0);
  if (ci.point < ci.lower || ci.point > ci.upper) {
    ci.widened_to_point = true;
    ci.lower = std::min(ci.lower, ci.point);
    ci.upper = std::max(ci.upper, ci.point);
  }
  return ci;
}

PairedSeries PairedBootstrapSeries(const ResampleMetric& metric_a, const ResampleMetric& metric_b,
                                   std::size_t n_rows, int n_resamples, std::uint64_t seed) {
  if (n_resamples < 2) throw InputError("paired bootstrap: need at least 2 resamples");
  if (n_rows == 0) throw InputError("paired bootstrap: no rows");
  std::vector<std::optional<std::pair<double, double>>> values(
      static_cast<std::size_t>(n_resamples));
  ParallelFor(values.size(), [&](std::size_t r) {
    const auto rows = BootstrapSample(n_rows, seed, static_cast<int>(r), 0);
    const auto a = metric_a(rows);
    const auto b = metric_b(rows);
    if (a && b) values[r] = std::make_pair(*a, *b);
  });
  PairedSeries out;
  for (const auto& v : values) {
    if (!v) {
      ++out.skipped;
      continue;
    }
    out.a.push_back(v->first);
    out.b.push_back(v->second);
  }
  return out;
}

PairedTTest PairedBootstrapTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("paired t-test: series lengths differ");
  if (a.size() < 2) throw InputError("paired t-test: need at least 2 pairs");
  PairedTTest out;
  out.n = static_cast<int>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += b[i] - a[i];
  mean /= static_cast<double>(out.n);
  double ss = 0.0;
  double max_abs = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i] - mean;
    ss += d * d;
    max_abs = std::max(max_abs, std::abs(b[i] - a[i]));
  }
  out.mean_difference = mean;
  out.sd_difference = std::sqrt(ss / static_cast<double>(out.n - 1));
  // Spread at the level of subtraction rounding counts as zero variance.
  if (out.sd_difference <= 1e-12 * max_abs || max_abs == 0.0) {
    out.sd_difference = 0.0;
    out.zero_variance = true;
    out.t = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    out.p = mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = mean / (out.sd_difference / std::sqrt(static_cast<double>(out.n)));
  const boost::math::students_t dist(static_cast<double>(out.n - 1));
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

}  // namespace fairmtl
