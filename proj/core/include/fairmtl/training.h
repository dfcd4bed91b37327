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

// Inverse-frequency weighted cross-entropy with an L2 penalty on the task
// heads, its analytic gradients, and the mini-batch training loop (AdamW,
// reduce-on-plateau over validation macro-F1, early stopping).

#ifndef FAIRMTL_TRAINING_H_
#define FAIRMTL_TRAINING_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"
#include "fairmtl/ingest.h"
#include "fairmtl/model.h"
#include "fairmtl/nn.h"
#include "fairmtl/subgroup.h"

namespace fairmtl {

struct AblationSwitches {
  bool reweighting = true;
  bool shared_layers = true;
  bool task_heads = true;
};

struct SchedulerConfig {
  double factor = 0.5;
  int patience = 5;
  double min_lr = 1e-7;
};

struct TrainingConfig {
  double learning_rate = 4.02e-5;
  int batch_size = 64;
  int max_epochs = 100;
  int early_stop_patience = 10;
  double l2_lambda = 1e-4;
  AdamWConfig optimizer;
  SchedulerConfig scheduler;
  AblationSwitches ablation;
  ModelConfig model;
  std::uint64_t seed = 0;

  void Validate() const;
};

nlohmann::json ToJson(const TrainingConfig& c);
// Missing keys keep the values of defaults.
TrainingConfig TrainingConfigFromJson(const nlohmann::json& j, TrainingConfig defaults = {});

// w_k = (1 / n_k) / sum_j (1 / n_j), indexed by 1-based subgroup label.
struct SubgroupWeights {
  std::vector<double> w;

  double operator()(int z) const { return w[static_cast<std::size_t>(z - 1)]; }
};

SubgroupWeights ComputeWeights(const std::vector<int>& z, int k);
SubgroupWeights UniformWeights(int k);

inline constexpr double kLogClamp = 1e-12;

// sum_i w_{z_i} * -log(max(p_i[y_i], 1e-12)).
double WeightedCrossEntropy(const Matrix& probs, const Labels& y, const std::vector<int>& z,
                            const SubgroupWeights& weights);
// sum_k ||theta_k||^2 over every head parameter.
double HeadL2(const FairMtlParams& params);

// Eval-mode loss: weighted cross-entropy plus lambda * HeadL2.
double Loss(const FairMtlParams& params, const Matrix& x, const Labels& y,
            const std::vector<int>& z, const SubgroupWeights& weights, double lambda);

struct LossAndGrad {
  double loss = 0.0;
  FairMtlParams grads;
  ForwardCache cache;
};

// Loss under the given forward options and its gradient w.r.t. every
// trainable parameter, batch-norm scale and shift included.
LossAndGrad ComputeLossAndGradients(const FairMtlParams& params, const Matrix& x,
                                    const Labels& y, const std::vector<int>& z,
                                    const SubgroupWeights& weights, double lambda,
                                    const ForwardOptions& options);

// Reduce-on-plateau for a metric to maximize.
class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, SchedulerConfig config)
      : lr_(initial_lr), config_(config) {}

  // Returns the learning rate for the next epoch.
  double Step(double metric);
  double learning_rate() const { return lr_; }

 private:
  double lr_;
  SchedulerConfig config_;
  double best_ = -1.0;
  int bad_epochs_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double learning_rate = 0.0;
  bool improved = false;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_macro_f1 = 0.0;
  bool early_stopped = false;
};

std::string ToJsonLines(const TrainingLog& log);

struct TrainResult {
  FairMtlParams params;
  TrainingLog log;
  SubgroupWeights weights;
};

// Routing labels the trainer actually uses: all ones when task heads are
// ablated, z otherwise.
std::vector<int> EffectiveRouting(const std::vector<int>& z, const AblationSwitches& ablation);

// z holds a 1-based subgroup label for every cohort row; k is the number of
// inferred subgroups. Returns the parameters of the best validation epoch.
// Throws NumericError if the loss becomes non-finite.
TrainResult Train(const Cohort& cohort, const std::vector<int>& z, int k,
                  const TrainingConfig& config);

// A trained model plus everything needed to route and evaluate it later.
struct Checkpoint {
  FairMtlParams params;
  TrainingConfig config;
  SubgroupModel subgroups;
  std::string subgroups_file;
  std::vector<std::string> feature_names;
  int best_epoch = 0;
};

nlohmann::json ToJson(const Checkpoint& ckpt);
Checkpoint CheckpointFromJson(const nlohmann::json& j);
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// expected_k < 0 skips the K check.
Checkpoint LoadCheckpoint(const std::filesystem::path& path, int expected_k = -1);

// Routing labels for the given rows of a cohort under a checkpoint.
std::vector<int> RouteRows(const Checkpoint& ckpt, const Cohort& cohort);

}  // namespace fairmtl

#endif  // FAIRMTL_TRAINING_H_
