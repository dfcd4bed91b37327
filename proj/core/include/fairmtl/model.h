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

// Multitask classifier with subgroup routing.
//
// A shared encoder (blocks of affine -> batch-norm -> ReLU -> dropout) maps
// each row to a latent vector; head z_i (affine -> ReLU -> affine -> softmax)
// turns it into class probabilities. With shared_encoder == false every head
// owns its own encoder tower of the same shape.

#ifndef FAIRMTL_MODEL_H_
#define FAIRMTL_MODEL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"
#include "fairmtl/nn.h"

namespace fairmtl {

struct ModelConfig {
  std::vector<int> hidden_widths = {2048, 64, 4096, 512, 2048, 128, 32};
  int head_hidden = 32;
  double dropout_rate = 0.23;
};

nlohmann::json ToJson(const ModelConfig& c);
ModelConfig ModelConfigFromJson(const nlohmann::json& j, ModelConfig defaults = {});

struct EncoderBlock {
  Dense dense;
  BatchNorm bn;
};

struct Encoder {
  std::vector<EncoderBlock> blocks;
};

struct Head {
  Dense hidden;
  Dense out;
};

struct FairMtlParams {
  int input_dim = 0;
  int num_classes = 0;
  double dropout_rate = 0.0;
  bool shared_encoder = true;
  std::vector<Encoder> encoders;  // 1 when shared, else one per head
  std::vector<Head> heads;        // K

  int k() const { return static_cast<int>(heads.size()); }
  // Encoder used by subgroup z (1-based).
  std::size_t EncoderIndex(int z) const {
    return shared_encoder ? 0 : static_cast<std::size_t>(z - 1);
  }

  // Trainable tensors (running statistics excluded) in a fixed order.
  std::vector<ParamView> Views();
  // Views over head parameters only, the regularized set.
  std::vector<ParamView> HeadViews();
  std::size_t NumParameters() const;
};

// Zero tensors with the shape of params; used as a gradient accumulator.
FairMtlParams ZerosLike(const FairMtlParams& params);

// Fan-in scaled He-uniform weights with zero biases, batch-norm gamma 1,
// beta 0. Deterministic given seed.
FairMtlParams InitFairMtl(int input_dim, const ModelConfig& config, int k, int num_classes,
                          std::uint64_t seed, bool shared_encoder = true);

enum class Mode { kTrain, kEval };

struct EncoderCache {
  std::vector<std::size_t> rows;
  std::vector<Matrix> inputs;
  std::vector<BatchNormCache> bn;
  std::vector<Matrix> bn_out;
  std::vector<Matrix> masks;  // empty when dropout is off
  Matrix output;
};

struct HeadCache {
  std::vector<std::size_t> rows;
  Matrix input;
  Matrix hidden_pre;
  Matrix hidden;
  Matrix logits;
};

struct ForwardCache {
  std::vector<EncoderCache> encoders;
  std::vector<HeadCache> heads;
  Matrix probs;
};

struct ForwardOptions {
  Mode mode = Mode::kEval;
  // Dropout source in training mode; nullptr disables dropout.
  std::mt19937_64* rng = nullptr;
};

// Routes row i through head z[i] (1-based). Does not modify params; running
// statistics are updated by the Mode-taking overload below or by
// UpdateRunningStats(params, cache).
Matrix Forward(const FairMtlParams& params, const Matrix& x, const std::vector<int>& z,
               const ForwardOptions& options, ForwardCache* cache = nullptr);

// Eval mode is pure. Train mode uses batch statistics and dropout and then
// folds the batch statistics into the running statistics.
Matrix Forward(FairMtlParams& params, const Matrix& x, const std::vector<int>& z, Mode mode,
               std::mt19937_64* rng = nullptr);

void UpdateRunningStats(FairMtlParams* params, const ForwardCache& cache);

// Accumulates dL/dtheta into *grads given dL/dlogits (B x C).
void Backward(const FairMtlParams& params, const ForwardCache& cache, const Matrix& grad_logits,
              FairMtlParams* grads);

// Argmax per row, ties to the lowest class index.
Labels ArgmaxRows(const Matrix& proba);
Labels Predict(const FairMtlParams& params, const Matrix& x, const std::vector<int>& z);

nlohmann::json ToJson(const FairMtlParams& params);
FairMtlParams FairMtlParamsFromJson(const nlohmann::json& j);

}  // namespace fairmtl

#endif  // FAIRMTL_MODEL_H_
