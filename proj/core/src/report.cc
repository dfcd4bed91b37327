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

#include "fairmtl/report.h"

#include <algorithm>
#include <optional>
#include <sstream>

#include "fairmtl/csv.h"

namespace fairmtl {
namespace {

Labels Pick(const Labels& v, std::span<const std::size_t> idx) {
  Labels out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

Matrix Pick(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::optional<double> ResampledAuroc(const Predictions& p, std::span<const std::size_t> idx) {
  const Labels y = Pick(p.y, idx);
  const ClassificationMetrics m = ComputeClassificationMetrics(y, Pick(p.pred, idx),
                                                               Pick(p.proba, idx), p.num_classes);
  if (std::none_of(m.auc.begin(), m.auc.end(), [](const auto& a) { return a.has_value(); })) {
    return std::nullopt;
  }
  return m.macro_auroc;
}

AttributeFairness ResampledAudit(const Predictions& p, const AttributeGroups& a,
                                 std::span<const std::size_t> idx) {
  return AuditAttribute(Pick(p.y, idx), Pick(p.pred, idx), Pick(a.groups, idx), a.group_names,
                        p.num_classes, a.name);
}

ResampleMetric DisparityMetric(const Predictions& p, std::size_t attr, bool eo) {
  return [&p, attr, eo](std::span<const std::size_t> idx) -> std::optional<double> {
    const AttributeFairness f = ResampledAudit(p, p.attributes[attr], idx);
    return eo ? f.eo_mean : f.dp_mean;
  };
}

nlohmann::json OptionalArray(const std::vector<std::optional<double>>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& x : v) out.push_back(x ? nlohmann::json(*x) : nlohmann::json(nullptr));
  return out;
}

std::string OptionalCell(const std::optional<double>& v) { return v ? FormatDouble(*v) : ""; }

}  // namespace

void Predictions::Validate() const {
  const std::size_t n = y.size();
  if (pred.size() != n || static_cast<std::size_t>(proba.rows()) != n) {
    throw InputError("report: labels, predictions and probabilities differ in length");
  }
  if (num_classes < 2 || proba.cols() != num_classes) {
    throw InputError("report: probability width does not match the class count");
  }
  for (const auto& a : attributes) {
    if (a.groups.size() != n) throw InputError("report: attribute '" + a.name + "' has wrong length");
  }
}

std::vector<AttributeGroups> AttributesForRows(const Cohort& cohort,
                                               const std::vector<std::size_t>& rows,
                                               const std::vector<std::string>& selection) {
  std::vector<const SensitiveAttribute*> chosen;
  if (selection.empty()) {
    for (const auto& a : cohort.attributes) chosen.push_back(&a);
  } else {
    for (const auto& name : selection) chosen.push_back(&cohort.Attribute(name));
  }
  std::vector<AttributeGroups> out;
  for (const auto* a : chosen) {
    AttributeGroups g{a->name, a->group_names, {}};
    g.groups.reserve(rows.size());
    for (std::size_t r : rows) g.groups.push_back(a->groups[r]);
    out.push_back(std::move(g));
  }
  return out;
}

FairnessReport BuildFairnessReport(const Predictions& p, const ReportOptions& options) {
  p.Validate();
  FairnessReport r;
  r.model = p.model;
  r.n_rows = p.y.size();
  r.num_classes = p.num_classes;
  r.options = options;
  r.overall = ComputeClassificationMetrics(p.y, p.pred, p.proba, p.num_classes);
  for (const auto& a : p.attributes) {
    r.attributes.push_back(AuditAttribute(p.y, p.pred, a.groups, a.group_names, p.num_classes, a.name));
  }
  if (options.n_resamples <= 0) return r;

  r.intervals_computed = true;
  const std::size_t n = p.y.size();
  auto add = [&](const std::string& name, const ResampleMetric& metric) {
    r.intervals.push_back({name, ComputeBootstrapCi(metric, n, options.level,
                                                    options.n_resamples, options.seed)});
  };
  add("accuracy", [&p](std::span<const std::size_t> idx) -> std::optional<double> {
    return Accuracy(Pick(p.y, idx), Pick(p.pred, idx));
  });
  add("macro_f1", [&p](std::span<const std::size_t> idx) -> std::optional<double> {
    return MacroF1(Pick(p.y, idx), Pick(p.pred, idx), p.num_classes);
  });
  add("macro_auroc", [&p](std::span<const std::size_t> idx) { return ResampledAuroc(p, idx); });
  for (std::size_t a = 0; a < p.attributes.size(); ++a) {
    add("dp_mean/" + p.attributes[a].name, DisparityMetric(p, a, false));
    add("eo_mean/" + p.attributes[a].name, DisparityMetric(p, a, true));
  }
  return r;
}

std::vector<SignificanceRecord> CompareDisparities(const Predictions& a, const Predictions& b,
                                                   const ReportOptions& options) {
  a.Validate();
  b.Validate();
  if (a.y != b.y || a.attributes.size() != b.attributes.size()) {
    throw InputError("significance: the two models were not evaluated on the same rows");
  }
  if (options.n_resamples < 2) throw InputError("significance: needs at least 2 resamples");
  std::vector<SignificanceRecord> out;
  for (std::size_t i = 0; i < a.attributes.size(); ++i) {
    if (a.attributes[i].name != b.attributes[i].name ||
        a.attributes[i].groups != b.attributes[i].groups) {
      throw InputError("significance: attribute '" + a.attributes[i].name + "' differs");
    }
    for (bool eo : {false, true}) {
      const PairedSeries s =
          PairedBootstrapSeries(DisparityMetric(a, i, eo), DisparityMetric(b, i, eo),
                                a.y.size(), options.n_resamples, options.seed);
      SignificanceRecord rec;
      rec.metric = std::string(eo ? "eo_mean/" : "dp_mean/") + a.attributes[i].name;
      rec.model_a = a.model;
      rec.model_b = b.model;
      rec.test = PairedBootstrapTTest(s.a, s.b);
      rec.skipped_resamples = s.skipped;
      out.push_back(rec);
    }
  }
  return out;
}

nlohmann::json ToJson(const FairnessReport& r) {
  const auto& m = r.overall;
  nlohmann::json j;
  j["format"] = "fairmtl.fairness_report";
  j["model"] = r.model;
  j["n_rows"] = r.n_rows;
  j["num_classes"] = r.num_classes;
  j["overall"] = {{"accuracy", m.accuracy},
                  {"macro_precision", m.macro_precision},
                  {"macro_recall", m.macro_recall},
                  {"macro_f1", m.macro_f1},
                  {"macro_auroc", m.macro_auroc},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1},
                  {"auc", OptionalArray(m.auc)},
                  {"notes", m.notes}};
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : r.attributes) {
    nlohmann::json classes = nlohmann::json::array();
    std::vector<std::string> warnings;
    for (std::size_t c = 0; c < a.dp.size(); ++c) {
      classes.push_back({{"class", c},
                         {"dp", a.dp[c].value},
                         {"positive_rate", OptionalArray(a.dp[c].rate)},
                         {"eo", a.eo[c].value},
                         {"tpr_gap", a.eo[c].tpr_gap},
                         {"fpr_gap", a.eo[c].fpr_gap},
                         {"tpr", OptionalArray(a.eo[c].tpr)},
                         {"fpr", OptionalArray(a.eo[c].fpr)}});
      warnings.insert(warnings.end(), a.dp[c].warnings.begin(), a.dp[c].warnings.end());
      warnings.insert(warnings.end(), a.eo[c].warnings.begin(), a.eo[c].warnings.end());
    }
    attrs.push_back({{"attribute", a.attribute},
                     {"groups", a.group_names},
                     {"group_sizes", a.group_sizes},
                     {"group_accuracy", OptionalArray(a.group_accuracy)},
                     {"dp_mean", a.dp_mean},
                     {"dp_max", a.dp_max},
                     {"eo_mean", a.eo_mean},
                     {"eo_max", a.eo_max},
                     {"per_class", classes},
                     {"warnings", warnings}});
  }
  j["attributes"] = attrs;

  nlohmann::json ci = {{"computed", r.intervals_computed}};
  if (r.intervals_computed) {
    ci["level"] = r.options.level;
    ci["n_resamples"] = r.options.n_resamples;
    ci["seed"] = r.options.seed;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& iv : r.intervals) {
      list.push_back({{"metric", iv.metric},
                      {"point", iv.ci.point},
                      {"lower", iv.ci.lower},
                      {"upper", iv.ci.upper},
                      {"valid_resamples", iv.ci.n_resamples},
                      {"redraws", iv.ci.redraws},
                      {"abandoned", iv.ci.abandoned},
                      {"widened_to_point", iv.ci.widened_to_point}});
    }
    ci["intervals"] = list;
  } else {
    ci["note"] = "bootstrap disabled; no confidence intervals reported";
  }
  j["confidence_intervals"] = ci;

  nlohmann::json sig = nlohmann::json::array();
  for (const auto& s : r.significance) {
    sig.push_back({{"metric", s.metric},
                   {"baseline", s.model_a},
                   {"model", s.model_b},
                   {"t", s.test.t},
                   {"p", s.test.p},
                   {"mean_difference", s.test.mean_difference},
                   {"sd_difference", s.test.sd_difference},
                   {"n", s.test.n},
                   {"zero_variance", s.test.zero_variance},
                   {"skipped_resamples", s.skipped_resamples}});
  }
  j["significance"] = sig;
  return j;
}

std::string PerClassCsv(const FairnessReport& r) {
  std::ostringstream out;
  WriteCsvRow(out, {"attribute", "class", "dp", "eo", "tpr_gap", "fpr_gap"});
  for (const auto& a : r.attributes) {
    double tpr_sum = 0.0, fpr_sum = 0.0, tpr_max = 0.0, fpr_max = 0.0;
    for (std::size_t c = 0; c < a.dp.size(); ++c) {
      WriteCsvRow(out, {a.attribute, std::to_string(c), FormatDouble(a.dp[c].value),
                        FormatDouble(a.eo[c].value), FormatDouble(a.eo[c].tpr_gap),
                        FormatDouble(a.eo[c].fpr_gap)});
      tpr_sum += a.eo[c].tpr_gap;
      fpr_sum += a.eo[c].fpr_gap;
      tpr_max = std::max(tpr_max, a.eo[c].tpr_gap);
      fpr_max = std::max(fpr_max, a.eo[c].fpr_gap);
    }
    const double nc = static_cast<double>(std::max<std::size_t>(1, a.dp.size()));
    WriteCsvRow(out, {a.attribute, "mean", FormatDouble(a.dp_mean), FormatDouble(a.eo_mean),
                      FormatDouble(tpr_sum / nc), FormatDouble(fpr_sum / nc)});
    WriteCsvRow(out, {a.attribute, "max", FormatDouble(a.dp_max), FormatDouble(a.eo_max),
                      FormatDouble(tpr_max), FormatDouble(fpr_max)});
  }
  return out.str();
}

std::string GroupCsv(const FairnessReport& r) {
  std::ostringstream out;
  WriteCsvRow(out, {"attribute", "group", "size", "accuracy"});
  for (const auto& a : r.attributes) {
    for (std::size_t g = 0; g < a.group_names.size(); ++g) {
      WriteCsvRow(out, {a.attribute, a.group_names[g], std::to_string(a.group_sizes[g]),
                        OptionalCell(a.group_accuracy[g])});
    }
  }
  return out.str();
}

std::string MetricsCsv(const FairnessReport& r) {
  std::ostringstream out;
  WriteCsvRow(out, {"metric", "value", "lower", "upper"});
  auto row = [&](const std::string& name, double value) {
    std::string lo, hi;
    for (const auto& iv : r.intervals) {
      if (iv.metric == name) {
        lo = FormatDouble(iv.ci.lower);
        hi = FormatDouble(iv.ci.upper);
      }
    }
    WriteCsvRow(out, {name, FormatDouble(value), lo, hi});
  };
  row("accuracy", r.overall.accuracy);
  row("macro_precision", r.overall.macro_precision);
  row("macro_recall", r.overall.macro_recall);
  row("macro_f1", r.overall.macro_f1);
  row("macro_auroc", r.overall.macro_auroc);
  for (const auto& a : r.attributes) {
    row("dp_mean/" + a.attribute, a.dp_mean);
    row("dp_max/" + a.attribute, a.dp_max);
    row("eo_mean/" + a.attribute, a.eo_mean);
    row("eo_max/" + a.attribute, a.eo_max);
  }
  return out.str();
}

}  // namespace fairmtl
