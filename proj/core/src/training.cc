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

#include "fairmtl/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fairmtl/csv.h"
#include "fairmtl/metrics.h"

namespace fairmtl {

void TrainingConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw InputError("config: learning_rate must be > 0");
  if (batch_size < 1) throw InputError("config: batch_size must be >= 1");
  if (max_epochs < 1) throw InputError("config: max_epochs must be >= 1");
  if (early_stop_patience < 1) throw InputError("config: early_stop_patience must be >= 1");
  if (l2_lambda < 0.0) throw InputError("config: l2_lambda must be >= 0");
  if (scheduler.patience < 1) throw InputError("config: scheduler patience must be >= 1");
  if (!(scheduler.factor > 0.0 && scheduler.factor < 1.0)) {
    throw InputError("config: scheduler factor must be in (0, 1)");
  }
}

nlohmann::json ToJson(const TrainingConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"early_stop_patience", c.early_stop_patience},
          {"l2_lambda", c.l2_lambda},
          {"optimizer",
           {{"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"eps", c.optimizer.eps},
            {"weight_decay", c.optimizer.weight_decay}}},
          {"scheduler",
           {{"factor", c.scheduler.factor},
            {"patience", c.scheduler.patience},
            {"min_lr", c.scheduler.min_lr}}},
          {"ablation",
           {{"reweighting", c.ablation.reweighting},
            {"shared_layers", c.ablation.shared_layers},
            {"task_heads", c.ablation.task_heads}}},
          {"model", ToJson(c.model)},
          {"seed", c.seed}};
}

TrainingConfig TrainingConfigFromJson(const nlohmann::json& j, TrainingConfig defaults) {
  TrainingConfig c = defaults;
  try {
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.l2_lambda = j.value("l2_lambda", c.l2_lambda);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
      c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
      c.optimizer.eps = o.value("eps", c.optimizer.eps);
      c.optimizer.weight_decay = o.value("weight_decay", c.optimizer.weight_decay);
    }
    if (j.contains("scheduler")) {
      const auto& s = j.at("scheduler");
      c.scheduler.factor = s.value("factor", c.scheduler.factor);
      c.scheduler.patience = s.value("patience", c.scheduler.patience);
      c.scheduler.min_lr = s.value("min_lr", c.scheduler.min_lr);
    }
    if (j.contains("ablation")) {
      const auto& a = j.at("ablation");
      c.ablation.reweighting = a.value("reweighting", c.ablation.reweighting);
      c.ablation.shared_layers = a.value("shared_layers", c.ablation.shared_layers);
      c.ablation.task_heads = a.value("task_heads", c.ablation.task_heads);
    }
    if (j.contains("model")) c.model = ModelConfigFromJson(j.at("model"), c.model);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("training config: ") + e.what());
  }
  c.Validate();
  return c;
}

SubgroupWeights ComputeWeights(const std::vector<int>& z, int k) {
  if (k < 1) throw InputError("weights: K must be >= 1");
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (int zi : z) {
    if (zi < 1 || zi > k) throw InputError("weights: subgroup label out of range");
    counts[static_cast<std::size_t>(zi - 1)] += 1.0;
  }
  SubgroupWeights out;
  double norm = 0.0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (counts[g] == 0.0) {
      throw InputError("weights: subgroup " + std::to_string(g + 1) + " is empty");
    }
    norm += 1.0 / counts[g];
  }
  for (double n : counts) out.w.push_back((1.0 / n) / norm);
  return out;
}

SubgroupWeights UniformWeights(int k) {
  if (k < 1) throw InputError("weights: K must be >= 1");
  return SubgroupWeights{std::vector<double>(static_cast<std::size_t>(k), 1.0 / k)};
}

double WeightedCrossEntropy(const Matrix& probs, const Labels& y, const std::vector<int>& z,
                            const SubgroupWeights& weights) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const double p = probs(i, y[ii]);
    total += weights(z[ii]) * -std::log(std::max(p, kLogClamp));
  }
  return total;
}

double HeadL2(const FairMtlParams& params) {
  double s = 0.0;
  for (const auto& h : params.heads) {
    s += h.hidden.weight.squaredNorm() + h.hidden.bias.squaredNorm() +
         h.out.weight.squaredNorm() + h.out.bias.squaredNorm();
  }
  return s;
}

double Loss(const FairMtlParams& params, const Matrix& x, const Labels& y,
            const std::vector<int>& z, const SubgroupWeights& weights, double lambda) {
  const Matrix probs = Forward(params, x, z, ForwardOptions{Mode::kEval, nullptr});
  return WeightedCrossEntropy(probs, y, z, weights) + lambda * HeadL2(params);
}

LossAndGrad ComputeLossAndGradients(const FairMtlParams& params, const Matrix& x,
                                    const Labels& y, const std::vector<int>& z,
                                    const SubgroupWeights& weights, double lambda,
                                    const ForwardOptions& options) {
  LossAndGrad out;
  const Matrix probs = Forward(params, x, z, options, &out.cache);
  out.loss = WeightedCrossEntropy(probs, y, z, weights) + lambda * HeadL2(params);

  // d/dlogit of -w log p_y is w (p - onehot(y)); zero where the clamp is active.
  Matrix grad_logits = probs;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const auto ii = static_cast<std::size_t>(i);
    if (probs(i, y[ii]) < kLogClamp) {
      grad_logits.row(i).setZero();
      continue;
    }
    grad_logits(i, y[ii]) -= 1.0;
    grad_logits.row(i) *= weights(z[ii]);
  }
  out.grads = ZerosLike(params);
  Backward(params, out.cache, grad_logits, &out.grads);
  if (lambda != 0.0) {
    for (std::size_t k = 0; k < params.heads.size(); ++k) {
      const Head& h = params.heads[k];
      Head& g = out.grads.heads[k];
      g.hidden.weight += 2.0 * lambda * h.hidden.weight;
      g.hidden.bias += 2.0 * lambda * h.hidden.bias;
      g.out.weight += 2.0 * lambda * h.out.weight;
      g.out.bias += 2.0 * lambda * h.out.bias;
    }
  }
  return out;
}

double PlateauScheduler::Step(double metric) {
  if (metric > best_) {
    best_ = metric;
    bad_epochs_ = 0;
  } else if (++bad_epochs_ > config_.patience) {
    lr_ = std::max(lr_ * config_.factor, config_.min_lr);
    bad_epochs_ = 0;
  }
  return lr_;
}

std::string ToJsonLines(const TrainingLog& log) {
  std::ostringstream out;
  for (const auto& e : log.epochs) {
    nlohmann::json j = {{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_macro_f1", e.val_macro_f1},
                        {"learning_rate", e.learning_rate},
                        {"improved", e.improved}};
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<int> EffectiveRouting(const std::vector<int>& z, const AblationSwitches& ablation) {
  if (ablation.task_heads) return z;
  return std::vector<int>(z.size(), 1);
}

TrainResult Train(const Cohort& cohort, const std::vector<int>& z_all, int k,
                  const TrainingConfig& config) {
  config.Validate();
  if (z_all.size() != cohort.num_rows()) {
    throw InputError("train: subgroup assignment does not cover every cohort row");
  }
  const auto train_rows = cohort.Indices(Split::kTrain);
  const auto val_rows = cohort.Indices(Split::kVal);
  if (train_rows.empty() || val_rows.empty()) {
    throw InputError("train: cohort needs non-empty train and val splits");
  }

  const std::vector<int> z = EffectiveRouting(z_all, config.ablation);
  const int heads = config.ablation.task_heads ? k : 1;
  const Matrix x_train = SelectRows(cohort.x, train_rows);
  const Labels y_train = SelectRows(cohort.y, train_rows);
  const std::vector<int> z_train = SelectRows(z, train_rows);
  const Matrix x_val = SelectRows(cohort.x, val_rows);
  const Labels y_val = SelectRows(cohort.y, val_rows);
  const std::vector<int> z_val = SelectRows(z, val_rows);

  TrainResult result;
  result.weights =
      config.ablation.reweighting ? ComputeWeights(z_train, heads) : UniformWeights(heads);

  FairMtlParams params =
      InitFairMtl(static_cast<int>(cohort.num_features()), config.model, heads,
                  cohort.num_classes(), DeriveSeed(config.seed, SeedStream::kModelInit),
                  config.ablation.shared_layers);
  AdamW optimizer(config.optimizer);
  PlateauScheduler scheduler(config.learning_rate, config.scheduler);
  std::mt19937_64 shuffle_rng(DeriveSeed(config.seed, SeedStream::kShuffle));
  std::mt19937_64 dropout_rng(DeriveSeed(config.seed, SeedStream::kDropout));

  std::vector<std::size_t> order(train_rows.size());
  std::iota(order.begin(), order.end(), 0);
  FairMtlParams best = params;
  int since_best = 0;
  double lr = config.learning_rate;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix xb = SelectRows(x_train, idx);
      const Labels yb = SelectRows(y_train, idx);
      const std::vector<int> zb = SelectRows(z_train, idx);
      LossAndGrad lg = ComputeLossAndGradients(params, xb, yb, zb, result.weights,
                                               config.l2_lambda,
                                               ForwardOptions{Mode::kTrain, &dropout_rng});
      if (!std::isfinite(lg.loss)) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches + 1) +
                           " (learning rate " + FormatDouble(lr) + ")");
      }
      UpdateRunningStats(&params, lg.cache);
      optimizer.Step(params.Views(), lg.grads.Views(), lr);
      loss_sum += lg.loss;
      ++batches;
    }

    const Labels val_pred = Predict(params, x_val, z_val);
    const double f1 = MacroF1(y_val, val_pred, cohort.num_classes());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / batches;
    rec.val_macro_f1 = f1;
    rec.learning_rate = lr;
    rec.improved = epoch == 1 || f1 > result.log.best_val_macro_f1;
    result.log.epochs.push_back(rec);
    if (rec.improved) {
      result.log.best_val_macro_f1 = f1;
      result.log.best_epoch = epoch;
      best = params;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      result.log.early_stopped = true;
      break;
    }
    lr = scheduler.Step(f1);
  }
  result.params = std::move(best);
  return result;
}

nlohmann::json ToJson(const Checkpoint& ckpt) {
  return {{"format", "fairmtl.checkpoint"},
          {"version", 1},
          {"k", ckpt.params.k()},
          {"config", ToJson(ckpt.config)},
          {"feature_names", ckpt.feature_names},
          {"best_epoch", ckpt.best_epoch},
          {"subgroups_file", ckpt.subgroups_file},
          {"subgroups", ToJson(ckpt.subgroups)},
          {"params", ToJson(ckpt.params)}};
}

Checkpoint CheckpointFromJson(const nlohmann::json& j) {
  Checkpoint c;
  try {
    if (j.at("format").get<std::string>() != "fairmtl.checkpoint") {
      throw InputError("not a FAIR-MTL checkpoint");
    }
    if (j.at("version").get<int>() != 1) throw InputError("unsupported checkpoint version");
    c.config = TrainingConfigFromJson(j.at("config"));
    c.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    c.best_epoch = j.at("best_epoch").get<int>();
    c.subgroups_file = j.at("subgroups_file").get<std::string>();
    c.subgroups = SubgroupModelFromJson(j.at("subgroups"));
    c.params = FairMtlParamsFromJson(j.at("params"));
    if (j.at("k").get<int>() != c.params.k()) throw InputError("checkpoint: K mismatch");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint JSON: ") + e.what());
  }
  const int routed_k = c.config.ablation.task_heads ? c.subgroups.assignment.k : 1;
  if (routed_k != c.params.k()) {
    throw InputError("checkpoint: model has " + std::to_string(c.params.k()) +
                     " heads but routing provides " + std::to_string(routed_k));
  }
  return c;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  WriteTextFile(path, ToJson(ckpt).dump() + "\n");
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path, int expected_k) {
  const nlohmann::json j = ReadJsonFile(path);
  Checkpoint c = CheckpointFromJson(j);
  if (expected_k >= 0 && c.params.k() != expected_k) {
    throw InputError("checkpoint has K = " + std::to_string(c.params.k()) + ", expected " +
                     std::to_string(expected_k));
  }
  return c;
}

std::vector<int> RouteRows(const Checkpoint& ckpt, const Cohort& cohort) {
  if (cohort.feature_names != ckpt.feature_names) {
    throw InputError("cohort features do not match the checkpoint (width " +
                     std::to_string(cohort.num_features()) + " vs " +
                     std::to_string(ckpt.feature_names.size()) + ")");
  }
  if (!ckpt.config.ablation.task_heads) return std::vector<int>(cohort.num_rows(), 1);
  return Assign(ckpt.subgroups.assignment, ckpt.subgroups.embedding, cohort.Sensitive());
}

}  // namespace fairmtl
