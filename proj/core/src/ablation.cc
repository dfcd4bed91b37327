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

#include "fairmtl/ablation.h"

#include <sstream>

#include "fairmtl/csv.h"
#include "fairmtl/parallel.h"

namespace fairmtl {

std::vector<AblationVariant> StandardAblationVariants() {
  return {{"FAIR-MTL", {true, true, true}},
          {"w/o reweighting", {false, true, true}},
          {"w/o shared layers", {true, false, true}},
          {"w/o task heads", {true, true, false}}};
}

Predictions PredictSplit(const Cohort& cohort, const FairMtlParams& params,
                         const std::vector<int>& routing, Split split,
                         const std::vector<std::string>& attributes, const std::string& model) {
  const auto rows = cohort.Indices(split);
  if (rows.empty()) throw InputError(std::string("no rows in the ") + ToString(split) + " split");
  Predictions p;
  p.model = model;
  p.num_classes = cohort.num_classes();
  p.y = SelectRows(cohort.y, rows);
  const Matrix x = SelectRows(cohort.x, rows);
  const std::vector<int> z = SelectRows(routing, rows);
  p.proba = Forward(params, x, z, ForwardOptions{Mode::kEval, nullptr}, nullptr);
  p.pred = ArgmaxRows(p.proba);
  p.attributes = AttributesForRows(cohort, rows, attributes);
  return p;
}

AblationRun RunAblation(const Cohort& cohort, const std::vector<int>& z, int k,
                        const TrainingConfig& base, const std::vector<std::string>& attributes,
                        const std::vector<AblationVariant>& variants) {
  if (variants.empty()) throw InputError("ablation: no variants");
  AblationRun run;
  run.models.resize(variants.size());
  run.predictions.resize(variants.size());
  ParallelFor(variants.size(), [&](std::size_t v) {
    TrainingConfig config = base;
    config.ablation = variants[v].switches;
    run.models[v] = Train(cohort, z, k, config);
    run.predictions[v] = PredictSplit(cohort, run.models[v].params,
                                      EffectiveRouting(z, config.ablation), Split::kTest,
                                      attributes, variants[v].name);
  });

  for (const auto& a : run.predictions.front().attributes) run.table.attributes.push_back(a.name);
  for (std::size_t v = 0; v < variants.size(); ++v) {
    const FairnessReport r = BuildFairnessReport(run.predictions[v], ReportOptions{0, 0.95, 0});
    AblationRow row;
    row.variant = variants[v].name;
    row.accuracy = r.overall.accuracy;
    row.auroc = r.overall.macro_auroc;
    for (const auto& a : r.attributes) {
      row.dp.push_back(a.dp_mean);
      row.eo.push_back(a.eo_mean);
    }
    row.best_epoch = run.models[v].log.best_epoch;
    run.table.rows.push_back(row);
  }
  return run;
}

nlohmann::json ToJson(const AblationTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    nlohmann::json row = {{"variant", r.variant},
                          {"accuracy", r.accuracy},
                          {"auc", r.auroc},
                          {"best_epoch", r.best_epoch}};
    for (std::size_t a = 0; a < table.attributes.size(); ++a) {
      row["dp_" + table.attributes[a]] = r.dp[a];
      row["eo_" + table.attributes[a]] = r.eo[a];
    }
    rows.push_back(row);
  }
  return {{"format", "fairmtl.ablation"}, {"attributes", table.attributes}, {"rows", rows}};
}

std::string AblationCsv(const AblationTable& table) {
  std::ostringstream out;
  std::vector<std::string> header = {"variant", "accuracy", "auc"};
  for (const auto& a : table.attributes) {
    header.push_back("dp_" + a);
    header.push_back("eo_" + a);
  }
  WriteCsvRow(out, header);
  for (const auto& r : table.rows) {
    std::vector<std::string> cells = {r.variant, FormatDouble(r.accuracy), FormatDouble(r.auroc)};
    for (std::size_t a = 0; a < table.attributes.size(); ++a) {
      cells.push_back(FormatDouble(r.dp[a]));
      cells.push_back(FormatDouble(r.eo[a]));
    }
    WriteCsvRow(out, cells);
  }
  return out.str();
}

}  // namespace fairmtl
