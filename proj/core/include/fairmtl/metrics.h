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

// Classification and group-fairness metrics. Multi-class problems are
// audited one-vs-rest: for class c a prediction is "positive" when it equals
// c. Groups are integer ids in [0, num_groups).

#ifndef FAIRMTL_METRICS_H_
#define FAIRMTL_METRICS_H_

#include <optional>
#include <string>
#include <vector>

#include "fairmtl/common.h"
#include "fairmtl/ingest.h"

namespace fairmtl {

double Accuracy(const Labels& y, const Labels& pred);

// Unweighted mean of per-class F1; a class with no support and no
// predictions scores 0 and still counts.
double MacroF1(const Labels& y, const Labels& pred, int num_classes);

// Probability that a random positive outscores a random negative, ties
// counted 1/2. nullopt when either side is empty.
std::optional<double> BinaryAuc(const std::vector<double>& scores, const std::vector<bool>& positive);

struct ClassificationMetrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  // Mean over the classes whose one-vs-rest AUC is defined.
  double macro_auroc = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::optional<double>> auc;
  std::vector<std::string> notes;
};

ClassificationMetrics ComputeClassificationMetrics(const Labels& y, const Labels& pred,
                                                   const Matrix& proba, int num_classes);

struct DpResult {
  double value = 0.0;  // max - min positive rate over included groups
  std::vector<std::optional<double>> rate;  // per group, nullopt if excluded
  std::vector<std::string> warnings;
};

DpResult DpDifference(const Labels& pred, const std::vector<int>& groups, int num_groups, int c);

struct EoResult {
  double value = 0.0;  // max(tpr_gap, fpr_gap)
  double tpr_gap = 0.0;
  double fpr_gap = 0.0;
  std::vector<std::optional<double>> tpr;
  std::vector<std::optional<double>> fpr;
  std::vector<std::string> warnings;
};

// Groups lacking either positives (y == c) or negatives are excluded.
EoResult EoDifference(const Labels& y, const Labels& pred, const std::vector<int>& groups,
                      int num_groups, int c);

// Per group mean over classes of one-vs-rest accuracy; nullopt for empty groups.
std::vector<std::optional<double>> SubgroupAccuracy(const Labels& y, const Labels& pred,
                                                    const std::vector<int>& groups,
                                                    int num_groups, int num_classes);

struct AttributeFairness {
  std::string attribute;
  std::vector<std::string> group_names;
  std::vector<DpResult> dp;  // per class
  std::vector<EoResult> eo;  // per class
  double dp_mean = 0.0;
  double dp_max = 0.0;
  double eo_mean = 0.0;
  double eo_max = 0.0;
  std::vector<std::optional<double>> group_accuracy;
  std::vector<std::size_t> group_sizes;
};

AttributeFairness AuditAttribute(const Labels& y, const Labels& pred,
                                 const std::vector<int>& groups,
                                 const std::vector<std::string>& group_names, int num_classes,
                                 const std::string& attribute);

}  // namespace fairmtl

#endif  // FAIRMTL_METRICS_H_
