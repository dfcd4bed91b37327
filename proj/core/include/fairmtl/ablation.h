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

// Component ablation: the full model against variants without subgroup
// reweighting, without a shared encoder and without task heads, all
// evaluated on the test split.

#ifndef FAIRMTL_ABLATION_H_
#define FAIRMTL_ABLATION_H_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/ingest.h"
#include "fairmtl/report.h"
#include "fairmtl/training.h"

namespace fairmtl {

struct AblationVariant {
  std::string name;
  AblationSwitches switches;
};

// FAIR-MTL, w/o reweighting, w/o shared layers, w/o task heads.
std::vector<AblationVariant> StandardAblationVariants();

struct AblationRow {
  std::string variant;
  double accuracy = 0.0;
  double auroc = 0.0;
  std::vector<double> dp;  // mean over classes, per attribute
  std::vector<double> eo;
  int best_epoch = 0;
};

struct AblationTable {
  std::vector<std::string> attributes;
  std::vector<AblationRow> rows;
};

struct AblationRun {
  AblationTable table;
  std::vector<TrainResult> models;  // aligned with table.rows
  std::vector<Predictions> predictions;
};

// Trains every variant from the same base config and seed (variants run
// concurrently) and evaluates each on the test split.
AblationRun RunAblation(const Cohort& cohort, const std::vector<int>& z, int k,
                        const TrainingConfig& base,
                        const std::vector<std::string>& attributes = {},
                        const std::vector<AblationVariant>& variants = StandardAblationVariants());

// Test-split predictions of a trained model.
Predictions PredictSplit(const Cohort& cohort, const FairMtlParams& params,
                         const std::vector<int>& routing, Split split,
                         const std::vector<std::string>& attributes, const std::string& model);

nlohmann::json ToJson(const AblationTable& table);
// variant,accuracy,auc,dp_<attr>,eo_<attr>,...
std::string AblationCsv(const AblationTable& table);

}  // namespace fairmtl

#endif  // FAIRMTL_ABLATION_H_
