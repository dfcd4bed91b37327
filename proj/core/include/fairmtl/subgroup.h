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

// Latent sensitive-subgroup inference: a small autoencoder embeds the
// demographic block of each row and k-means clusters the embedding. Cluster
// labels are 1-based, z in {1..K}, and route rows to task heads.

#ifndef FAIRMTL_SUBGROUP_H_
#define FAIRMTL_SUBGROUP_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairmtl/common.h"
#include "fairmtl/ingest.h"
#include "fairmtl/nn.h"

namespace fairmtl {

struct AutoencoderLayer {
  Dense dense;
  Activation activation = Activation::kIdentity;
};

struct EmbeddingParams {
  std::vector<AutoencoderLayer> encoder;
  std::vector<AutoencoderLayer> decoder;

  Eigen::Index input_dim() const { return encoder.front().dense.in(); }
  Eigen::Index bottleneck() const { return encoder.back().dense.out(); }
  // Shape chain and finiteness checks.
  void Validate() const;
};

// d_s -> H (tanh) -> m (linear) -> H (tanh) -> d_s (linear), H = max(4, 2 d_s)
// unless hidden_width > 0. Glorot-uniform weights, zero biases.
EmbeddingParams InitAutoencoder(int input_dim, int bottleneck, int hidden_width,
                                std::uint64_t seed);
// Single linear identity layer each way; embed(S) == S.
EmbeddingParams IdentityAutoencoder(int dim);

Matrix Embed(const EmbeddingParams& params, const Matrix& s);
Matrix Reconstruct(const EmbeddingParams& params, const Matrix& s);
double ReconstructionMse(const EmbeddingParams& params, const Matrix& s);

struct AutoencoderOptions {
  int bottleneck = 2;
  int hidden_width = 0;  // 0 selects max(4, 2 d_s)
  int epochs = 500;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

struct AutoencoderFit {
  EmbeddingParams params;
  double initial_mse = 0.0;
  double final_mse = 0.0;
};

// Full-batch Adam on mean squared reconstruction error. Returns the
// lowest-error parameters seen, initialization included, so the final error
// never exceeds the initial one.
AutoencoderFit FitAutoencoder(const Matrix& s, const AutoencoderOptions& options);
// Trains an existing parameter set in place (same contract).
AutoencoderFit FitAutoencoder(const Matrix& s, EmbeddingParams init,
                              const AutoencoderOptions& options);

struct SubgroupAssignment {
  int k = 0;
  Matrix centroids;         // K x m
  std::vector<int> labels;  // 1-based
  double inertia = 0.0;
  // Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_trace;
  int iterations = 0;
  bool converged = false;
  int reseeded_clusters = 0;
};

// Lloyd's algorithm from a k-means++ seeding. A cluster that empties during
// iteration is re-seeded at the point farthest from its assigned centroid.
SubgroupAssignment KMeansFit(const Matrix& embedding, int k, int max_iters, std::uint64_t seed);

// Nearest centroid by exact squared Euclidean distance; ties go to the lowest
// index. Returned labels are 1-based.
std::vector<int> NearestCentroid(const Matrix& centroids, const Matrix& embedding);

std::vector<int> Assign(const SubgroupAssignment& assignment, const EmbeddingParams& params,
                        const Matrix& s_new);

struct SubgroupOptions {
  int k = 2;
  int bottleneck = 2;
  int autoencoder_epochs = 500;
  int kmeans_max_iters = 300;
  // Fit the autoencoder and centroids on train rows, then assign all rows.
  bool fit_on_train_only = true;
  std::uint64_t seed = 0;
};

struct SubgroupModel {
  EmbeddingParams embedding;
  SubgroupAssignment assignment;
  bool fit_on_train_only = true;
  // Labels for every cohort row (train, val and test), 1-based.
  std::vector<int> z;
};

SubgroupModel InferSubgroups(const Cohort& cohort, const SubgroupOptions& options);

nlohmann::json ToJson(const EmbeddingParams& params);
EmbeddingParams EmbeddingParamsFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const SubgroupModel& model);
SubgroupModel SubgroupModelFromJson(const nlohmann::json& j);
void SaveSubgroupModel(const SubgroupModel& model, const std::filesystem::path& path);
SubgroupModel LoadSubgroupModel(const std::filesystem::path& path);

}  // namespace fairmtl

#endif  // FAIRMTL_SUBGROUP_H_
