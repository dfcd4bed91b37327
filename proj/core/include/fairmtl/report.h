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

// Fairness report assembly: overall metrics, per-attribute DP/EO audits,
// bootstrap intervals and paired significance tests against a baseline.

#ifndef FAIRMTL_REPORT_H_
#define FAIRMTL_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"
#include "fairmtl/ingest.h"
#include "fairmtl/metrics.h"
#include "fairmtl/stats.h"

namespace fairmtl {

struct AttributeGroups {
  std::string name;
  std::vector<std::string> group_names;
  std::vector<int> groups;  // per row
};

// Predictions of one model on a fixed set of rows.
struct Predictions {
  std::string model;
  Labels y;
  Labels pred;
  Matrix proba;  // rows x C
  std::vector<AttributeGroups> attributes;
  int num_classes = 0;

  void Validate() const;
};

// Restricts the cohort's sensitive attributes to the given rows. An empty
// selection keeps every attribute; unknown names throw InputError.
std::vector<AttributeGroups> AttributesForRows(const Cohort& cohort,
                                               const std::vector<std::size_t>& rows,
                                               const std::vector<std::string>& selection = {});

struct ReportOptions {
  int n_resamples = 1000;  // 0 disables the intervals
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct MetricInterval {
  std::string metric;  // "accuracy", "macro_f1", "macro_auroc", "dp_mean/<attr>", ...
  BootstrapCi ci;
};

struct SignificanceRecord {
  std::string metric;
  std::string model_a;  // baseline
  std::string model_b;  // evaluated model
  PairedTTest test;
  int skipped_resamples = 0;
};

struct FairnessReport {
  std::string model;
  std::size_t n_rows = 0;
  int num_classes = 0;
  ClassificationMetrics overall;
  std::vector<AttributeFairness> attributes;
  bool intervals_computed = false;
  ReportOptions options;
  std::vector<MetricInterval> intervals;
  std::vector<SignificanceRecord> significance;
};

FairnessReport BuildFairnessReport(const Predictions& p, const ReportOptions& options);

// Paired bootstrap t-tests of the per-attribute mean DP and EO differences
// of b against the baseline a on shared resample indices. Both must cover
// the same rows and attributes.
std::vector<SignificanceRecord> CompareDisparities(const Predictions& a, const Predictions& b,
                                                   const ReportOptions& options);

nlohmann::json ToJson(const FairnessReport& report);
// attribute,class,dp,eo,tpr_gap,fpr_gap with trailing mean and max rows per
// attribute.
std::string PerClassCsv(const FairnessReport& report);
// attribute,group,size,accuracy
std::string GroupCsv(const FairnessReport& report);
// metric,value,lower,upper: overall metrics then per-attribute summaries.
std::string MetricsCsv(const FairnessReport& report);

}  // namespace fairmtl

#endif  // FAIRMTL_REPORT_H_
