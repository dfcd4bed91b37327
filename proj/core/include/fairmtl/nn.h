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

// Dense network building blocks shared by the subgroup autoencoder and the
// multitask classifier: affine layers, batch normalization, activations,
// dropout, row softmax and the AdamW optimizer. Activations are row-major
// batches (one sample per row).

#ifndef FAIRMTL_NN_H_
#define FAIRMTL_NN_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"

namespace fairmtl {

enum class Activation { kIdentity, kRelu, kTanh };

std::string ToString(Activation a);
Activation ActivationFromString(const std::string& name);

struct Dense {
  Matrix weight;  // out x in
  Vector bias;    // out

  Eigen::Index in() const { return weight.cols(); }
  Eigen::Index out() const { return weight.rows(); }
};

// He-uniform weights, U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), zero bias.
Dense InitDense(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);
Dense ZeroDense(Eigen::Index in, Eigen::Index out);

Matrix DenseForward(const Dense& layer, const Matrix& x);
// Accumulates parameter gradients into *grad and returns dL/dx.
Matrix DenseBackward(const Dense& layer, const Matrix& x, const Matrix& grad_out, Dense* grad);

Matrix Activate(Activation a, const Matrix& pre);
// dL/dpre from dL/dpost, given the pre-activation and post-activation values.
Matrix ActivationBackward(Activation a, const Matrix& pre, const Matrix& post,
                          const Matrix& grad_post);

struct BatchNorm {
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

BatchNorm InitBatchNorm(Eigen::Index width);

struct BatchNormCache {
  Matrix x_hat;
  Vector inv_std;
  bool used_batch_stats = false;
  Vector batch_mean;
  Vector batch_var;  // biased
};

// Training mode normalizes with batch statistics when the batch has more than
// one row; a single-row batch (and eval mode) uses the running statistics.
// Running statistics are never touched here; see UpdateRunningStats.
Matrix BatchNormForward(const BatchNorm& bn, const Matrix& x, bool training,
                        BatchNormCache* cache);
Matrix BatchNormBackward(const BatchNorm& bn, const BatchNormCache& cache,
                         const Matrix& grad_out, BatchNorm* grad);
// PyTorch convention: running_var tracks the unbiased batch variance.
void UpdateRunningStats(BatchNorm* bn, const BatchNormCache& cache, Eigen::Index batch_rows);

// Inverted dropout mask: entries are 0 or 1 / (1 - rate).
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng);

// Row-wise softmax with max subtraction.
Matrix SoftmaxRows(const Matrix& logits);

// A flat view over every trainable tensor of a model, in a fixed order.
struct ParamView {
  std::string name;
  std::span<double> values;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with decoupled weight decay (Loshchilov & Hutter; PyTorch semantics).
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  // params and grads must list the same tensors in the same order on every call.
  void Step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
            double learning_rate);

  std::int64_t steps() const { return step_; }

 private:
  AdamWConfig config_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

nlohmann::json ToJson(const Matrix& m);
nlohmann::json ToJson(const Vector& v);
Matrix MatrixFromJson(const nlohmann::json& j);
Vector VectorFromJson(const nlohmann::json& j);

nlohmann::json ToJson(const Dense& d);
Dense DenseFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const BatchNorm& bn);
BatchNorm BatchNormFromJson(const nlohmann::json& j);

inline std::span<double> Span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
inline std::span<double> Span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace fairmtl

#endif  // FAIRMTL_NN_H_
