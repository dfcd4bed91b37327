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

#include "fairmtl/metrics.h"

#include <algorithm>
#include <numeric>

namespace fairmtl {
namespace {

void CheckLengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InputError(std::string(what) + ": length mismatch");
}

double Gap(const std::vector<std::optional<double>>& values) {
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const auto& v : values) {
    if (!v) continue;
    if (!any) {
      lo = hi = *v;
      any = true;
    } else {
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  return hi - lo;
}

void CheckGroups(const std::vector<int>& groups, int num_groups) {
  for (int g : groups) {
    if (g < 0 || g >= num_groups) throw InputError("group id out of range");
  }
}

}  // namespace

double Accuracy(const Labels& y, const Labels& pred) {
  CheckLengths(y.size(), pred.size(), "accuracy");
  if (y.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += y[i] == pred[i];
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

double MacroF1(const Labels& y, const Labels& pred, int num_classes) {
  CheckLengths(y.size(), pred.size(), "macro-F1");
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const bool p = pred[i] == c;
      const bool t = y[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const double denom = 2 * tp + fp + fn;
    sum += denom > 0 ? 2 * tp / denom : 0.0;
  }
  return sum / num_classes;
}

std::optional<double> BinaryAuc(const std::vector<double>& scores,
                                const std::vector<bool>& positive) {
  CheckLengths(scores.size(), positive.size(), "AUC");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U with mid-ranks for ties.
  double rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        rank_sum += mid_rank;
        n_pos += 1.0;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

ClassificationMetrics ComputeClassificationMetrics(const Labels& y, const Labels& pred,
                                                   const Matrix& proba, int num_classes) {
  CheckLengths(y.size(), pred.size(), "classification metrics");
  CheckLengths(y.size(), static_cast<std::size_t>(proba.rows()), "classification metrics");
  if (proba.cols() != num_classes) throw InputError("probability width != class count");
  ClassificationMetrics m;
  m.accuracy = Accuracy(y, pred);
  double auc_sum = 0.0;
  int auc_count = 0;
  for (int c = 0; c < num_classes; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const bool p = pred[i] == c;
      const bool t = y[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f1 = 2 * tp + fp + fn > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    m.precision.push_back(precision);
    m.recall.push_back(recall);
    m.f1.push_back(f1);

    std::vector<double> scores(y.size());
    std::vector<bool> positive(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      scores[i] = proba(static_cast<Eigen::Index>(i), c);
      positive[i] = y[i] == c;
    }
    auto auc = BinaryAuc(scores, positive);
    if (auc) {
      auc_sum += *auc;
      ++auc_count;
    } else {
      m.notes.push_back("class " + std::to_string(c) +
                        ": AUC skipped (class absent or universal in y)");
    }
    m.auc.push_back(auc);
  }
  m.macro_precision = std::accumulate(m.precision.begin(), m.precision.end(), 0.0) / num_classes;
  m.macro_recall = std::accumulate(m.recall.begin(), m.recall.end(), 0.0) / num_classes;
  m.macro_f1 = std::accumulate(m.f1.begin(), m.f1.end(), 0.0) / num_classes;
  m.macro_auroc = auc_count > 0 ? auc_sum / auc_count : 0.0;
  return m;
}

DpResult DpDifference(const Labels& pred, const std::vector<int>& groups, int num_groups, int c) {
  CheckLengths(pred.size(), groups.size(), "DP difference");
  CheckGroups(groups, num_groups);
  std::vector<double> total(static_cast<std::size_t>(num_groups), 0.0);
  std::vector<double> positive(static_cast<std::size_t>(num_groups), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto g = static_cast<std::size_t>(groups[i]);
    total[g] += 1.0;
    positive[g] += pred[i] == c;
  }
  DpResult r;
  r.rate.resize(static_cast<std::size_t>(num_groups));
  for (std::size_t g = 0; g < total.size(); ++g) {
    if (total[g] == 0.0) {
      r.warnings.push_back("group " + std::to_string(g) + " has no rows; excluded");
      continue;
    }
    r.rate[g] = positive[g] / total[g];
  }
  r.value = Gap(r.rate);
  return r;
}

EoResult EoDifference(const Labels& y, const Labels& pred, const std::vector<int>& groups,
                      int num_groups, int c) {
  CheckLengths(y.size(), pred.size(), "EO difference");
  CheckLengths(y.size(), groups.size(), "EO difference");
  CheckGroups(groups, num_groups);
  const auto ng = static_cast<std::size_t>(num_groups);
  std::vector<double> pos(ng, 0.0), neg(ng, 0.0), tp(ng, 0.0), fp(ng, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto g = static_cast<std::size_t>(groups[i]);
    const bool hit = pred[i] == c;
    if (y[i] == c) {
      pos[g] += 1.0;
      tp[g] += hit;
    } else {
      neg[g] += 1.0;
      fp[g] += hit;
    }
  }
  EoResult r;
  r.tpr.resize(ng);
  r.fpr.resize(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    if (pos[g] == 0.0 || neg[g] == 0.0) {
      if (pos[g] + neg[g] > 0.0) {
        r.warnings.push_back("group " + std::to_string(g) + " lacks " +
                             (pos[g] == 0.0 ? "positives" : "negatives") + " for class " +
                             std::to_string(c) + "; excluded");
      } else {
        r.warnings.push_back("group " + std::to_string(g) + " has no rows; excluded");
      }
      continue;
    }
    r.tpr[g] = tp[g] / pos[g];
    r.fpr[g] = fp[g] / neg[g];
  }
  r.tpr_gap = Gap(r.tpr);
  r.fpr_gap = Gap(r.fpr);
  r.value = std::max(r.tpr_gap, r.fpr_gap);
  return r;
}

std::vector<std::optional<double>> SubgroupAccuracy(const Labels& y, const Labels& pred,
                                                    const std::vector<int>& groups,
                                                    int num_groups, int num_classes) {
  CheckLengths(y.size(), pred.size(), "subgroup accuracy");
  CheckLengths(y.size(), groups.size(), "subgroup accuracy");
  CheckGroups(groups, num_groups);
  const auto ng = static_cast<std::size_t>(num_groups);
  std::vector<double> total(ng, 0.0);
  std::vector<double> agree(ng, 0.0);  // summed over classes
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto g = static_cast<std::size_t>(groups[i]);
    total[g] += 1.0;
    for (int c = 0; c < num_classes; ++c) agree[g] += (pred[i] == c) == (y[i] == c);
  }
  std::vector<std::optional<double>> out(ng);
  for (std::size_t g = 0; g < ng; ++g) {
    if (total[g] > 0.0) out[g] = agree[g] / (total[g] * num_classes);
  }
  return out;
}

AttributeFairness AuditAttribute(const Labels& y, const Labels& pred,
                                 const std::vector<int>& groups,
                                 const std::vector<std::string>& group_names, int num_classes,
                                 const std::string& attribute) {
  const int ng = static_cast<int>(group_names.size());
  AttributeFairness a;
  a.attribute = attribute;
  a.group_names = group_names;
  a.group_sizes.assign(group_names.size(), 0);
  for (int g : groups) {
    if (g < 0 || g >= ng) throw InputError("group id out of range");
    ++a.group_sizes[static_cast<std::size_t>(g)];
  }
  for (int c = 0; c < num_classes; ++c) {
    a.dp.push_back(DpDifference(pred, groups, ng, c));
    a.eo.push_back(EoDifference(y, pred, groups, ng, c));
    a.dp_mean += a.dp.back().value / num_classes;
    a.eo_mean += a.eo.back().value / num_classes;
    a.dp_max = std::max(a.dp_max, a.dp.back().value);
    a.eo_max = std::max(a.eo_max, a.eo.back().value);
  }
  a.group_accuracy = SubgroupAccuracy(y, pred, groups, ng, num_classes);
  return a;
}

}  // namespace fairmtl
