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

#include "fairmtl/subgroup.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fairmtl/csv.h"

namespace fairmtl {
namespace {

Dense GlorotDense(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  Dense d = ZeroDense(in, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < d.weight.size(); ++i) d.weight.data()[i] = dist(rng);
  return d;
}

struct StackCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
};

Matrix RunStack(const std::vector<AutoencoderLayer>& stack, const Matrix& x, StackCache* cache) {
  Matrix h = x;
  for (const auto& layer : stack) {
    Matrix pre = DenseForward(layer.dense, h);
    Matrix post = Activate(layer.activation, pre);
    if (cache != nullptr) {
      cache->inputs.push_back(std::move(h));
      cache->pre.push_back(std::move(pre));
      cache->post.push_back(post);
    }
    h = std::move(post);
  }
  return h;
}

Matrix BackpropStack(const std::vector<AutoencoderLayer>& stack, const StackCache& cache,
                     Matrix grad, std::vector<Dense>* grads) {
  for (std::size_t l = stack.size(); l-- > 0;) {
    grad = ActivationBackward(stack[l].activation, cache.pre[l], cache.post[l], grad);
    grad = DenseBackward(stack[l].dense, cache.inputs[l], grad, &(*grads)[l]);
  }
  return grad;
}

double SquaredDistance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index k) {
  return (a.row(i) - b.row(k)).squaredNorm();
}

void CheckFinite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InputError(std::string(what) + " contains non-finite values");
}

std::vector<ParamView> Views(std::vector<AutoencoderLayer>& enc,
                             std::vector<AutoencoderLayer>& dec) {
  std::vector<ParamView> out;
  for (auto* stack : {&enc, &dec}) {
    for (auto& l : *stack) {
      out.push_back({"w", Span(l.dense.weight)});
      out.push_back({"b", Span(l.dense.bias)});
    }
  }
  return out;
}

std::vector<ParamView> GradViews(std::vector<Dense>& enc, std::vector<Dense>& dec) {
  std::vector<ParamView> out;
  for (auto* stack : {&enc, &dec}) {
    for (auto& d : *stack) {
      out.push_back({"w", Span(d.weight)});
      out.push_back({"b", Span(d.bias)});
    }
  }
  return out;
}

}  // namespace

void EmbeddingParams::Validate() const {
  if (encoder.empty() || decoder.empty()) throw InputError("autoencoder: empty layer stack");
  auto check_chain = [](const std::vector<AutoencoderLayer>& stack) {
    for (std::size_t l = 0; l < stack.size(); ++l) {
      const Dense& d = stack[l].dense;
      if (d.bias.size() != d.weight.rows()) throw InputError("autoencoder: bias mismatch");
      if (!d.weight.allFinite() || !d.bias.allFinite()) {
        throw InputError("autoencoder: non-finite parameters");
      }
      if (l > 0 && stack[l - 1].dense.out() != d.in()) {
        throw InputError("autoencoder: layer widths do not chain");
      }
    }
  };
  check_chain(encoder);
  check_chain(decoder);
  if (decoder.front().dense.in() != bottleneck()) {
    throw InputError("autoencoder: decoder input must equal bottleneck width");
  }
  if (decoder.back().dense.out() != input_dim()) {
    throw InputError("autoencoder: decoder output must equal input width");
  }
}

EmbeddingParams InitAutoencoder(int input_dim, int bottleneck, int hidden_width,
                                std::uint64_t seed) {
  if (input_dim < 1) throw InputError("autoencoder: input dimension must be >= 1");
  if (bottleneck < 1 || bottleneck > input_dim) {
    throw InputError("autoencoder: bottleneck must satisfy 1 <= m <= d_s");
  }
  const int hidden = hidden_width > 0 ? hidden_width : std::max(4, 2 * input_dim);
  std::mt19937_64 rng(seed);
  EmbeddingParams p;
  p.encoder.push_back({GlorotDense(input_dim, hidden, rng), Activation::kTanh});
  p.encoder.push_back({GlorotDense(hidden, bottleneck, rng), Activation::kIdentity});
  p.decoder.push_back({GlorotDense(bottleneck, hidden, rng), Activation::kTanh});
  p.decoder.push_back({GlorotDense(hidden, input_dim, rng), Activation::kIdentity});
  return p;
}

EmbeddingParams IdentityAutoencoder(int dim) {
  Dense id = ZeroDense(dim, dim);
  id.weight.setIdentity();
  EmbeddingParams p;
  p.encoder.push_back({id, Activation::kIdentity});
  p.decoder.push_back({id, Activation::kIdentity});
  return p;
}

Matrix Embed(const EmbeddingParams& params, const Matrix& s) {
  if (s.cols() != params.input_dim()) {
    throw InputError("embed: expected " + std::to_string(params.input_dim()) +
                     " sensitive columns, got " + std::to_string(s.cols()));
  }
  return RunStack(params.encoder, s, nullptr);
}

Matrix Reconstruct(const EmbeddingParams& params, const Matrix& s) {
  return RunStack(params.decoder, Embed(params, s), nullptr);
}

double ReconstructionMse(const EmbeddingParams& params, const Matrix& s) {
  return (Reconstruct(params, s) - s).squaredNorm() / static_cast<double>(s.size());
}

AutoencoderFit FitAutoencoder(const Matrix& s, const AutoencoderOptions& options) {
  return FitAutoencoder(
      s,
      InitAutoencoder(static_cast<int>(s.cols()), options.bottleneck, options.hidden_width,
                      DeriveSeed(options.seed, SeedStream::kAutoencoder)),
      options);
}

AutoencoderFit FitAutoencoder(const Matrix& s, EmbeddingParams params,
                              const AutoencoderOptions& options) {
  CheckFinite(s, "sensitive matrix");
  if (s.rows() == 0) throw InputError("autoencoder: no rows");
  params.Validate();
  if (params.input_dim() != s.cols()) throw InputError("autoencoder: width mismatch");

  AutoencoderFit fit;
  fit.initial_mse = ReconstructionMse(params, s);
  fit.final_mse = fit.initial_mse;
  fit.params = params;

  AdamW adam(AdamWConfig{0.9, 0.999, 1e-8, 0.0});
  const double scale = 2.0 / static_cast<double>(s.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    StackCache enc_cache;
    StackCache dec_cache;
    const Matrix code = RunStack(params.encoder, s, &enc_cache);
    const Matrix out = RunStack(params.decoder, code, &dec_cache);
    std::vector<Dense> enc_grads;
    std::vector<Dense> dec_grads;
    for (const auto& l : params.encoder) enc_grads.push_back(ZeroDense(l.dense.in(), l.dense.out()));
    for (const auto& l : params.decoder) dec_grads.push_back(ZeroDense(l.dense.in(), l.dense.out()));
    Matrix grad = scale * (out - s);
    grad = BackpropStack(params.decoder, dec_cache, std::move(grad), &dec_grads);
    BackpropStack(params.encoder, enc_cache, std::move(grad), &enc_grads);
    adam.Step(Views(params.encoder, params.decoder), GradViews(enc_grads, dec_grads),
              options.learning_rate);

    const double mse = ReconstructionMse(params, s);
    if (!std::isfinite(mse)) throw NumericError("autoencoder: reconstruction error diverged");
    if (mse < fit.final_mse) {
      fit.final_mse = mse;
      fit.params = params;
    }
  }
  return fit;
}

std::vector<int> NearestCentroid(const Matrix& centroids, const Matrix& embedding) {
  if (centroids.cols() != embedding.cols()) {
    throw InputError("assign: embedding width does not match centroids");
  }
  std::vector<int> labels(static_cast<std::size_t>(embedding.rows()));
  for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = SquaredDistance(embedding, i, centroids, 0);
    for (Eigen::Index k = 1; k < centroids.rows(); ++k) {
      const double d = SquaredDistance(embedding, i, centroids, k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return labels;
}

SubgroupAssignment KMeansFit(const Matrix& embedding, int k, int max_iters, std::uint64_t seed) {
  const Eigen::Index n = embedding.rows();
  if (k < 1) throw InputError("kmeans: K must be >= 1");
  if (k > n) {
    throw InputError("kmeans: K = " + std::to_string(k) + " exceeds row count " +
                     std::to_string(n));
  }
  CheckFinite(embedding, "embedding");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  // k-means++ seeding.
  Matrix centroids(k, embedding.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  auto first = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(n));
  centroids.row(0) = embedding.row(first);
  chosen[static_cast<std::size_t>(first)] = true;
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    d2[static_cast<std::size_t>(i)] = SquaredDistance(embedding, i, centroids, 0);
  }
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = unif(rng) * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Eigen::Index i = n; i-- > 0;) {
          if (d2[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point coincides with a centroid.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(c) = embedding.row(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], SquaredDistance(embedding, i, centroids, c));
    }
  }

  SubgroupAssignment result;
  result.k = k;
  std::vector<int> labels;
  auto inertia_of = [&](const std::vector<int>& z) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      s += SquaredDistance(embedding, i, centroids, z[static_cast<std::size_t>(i)] - 1);
    }
    return s;
  };

  for (int iter = 0;; ++iter) {
    std::vector<int> next = NearestCentroid(centroids, embedding);

    // Re-seed empty clusters at the farthest point.
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int z : next) ++sizes[static_cast<std::size_t>(z - 1)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int zi = next[static_cast<std::size_t>(i)];
        if (sizes[static_cast<std::size_t>(zi - 1)] <= 1) continue;
        const double d = SquaredDistance(embedding, i, centroids, zi - 1);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) break;
      --sizes[static_cast<std::size_t>(next[static_cast<std::size_t>(far)] - 1)];
      next[static_cast<std::size_t>(far)] = c + 1;
      sizes[static_cast<std::size_t>(c)] = 1;
      centroids.row(c) = embedding.row(far);
      ++result.reseeded_clusters;
    }

    result.inertia_trace.push_back(inertia_of(next));
    const bool unchanged = next == labels;
    labels = std::move(next);
    if (unchanged) {
      result.converged = true;
      break;
    }
    if (iter >= max_iters) break;

    Matrix sums = Matrix::Zero(k, embedding.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int z = labels[static_cast<std::size_t>(i)] - 1;
      sums.row(z) += embedding.row(i);
      ++counts[static_cast<std::size_t>(z)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    result.iterations = iter + 1;
  }
  result.centroids = std::move(centroids);
  result.labels = std::move(labels);
  result.inertia = result.inertia_trace.back();
  return result;
}

std::vector<int> Assign(const SubgroupAssignment& assignment, const EmbeddingParams& params,
                        const Matrix& s_new) {
  CheckFinite(s_new, "sensitive matrix");
  return NearestCentroid(assignment.centroids, Embed(params, s_new));
}

SubgroupModel InferSubgroups(const Cohort& cohort, const SubgroupOptions& options) {
  cohort.schema.Validate(/*require_sensitive=*/true);
  const Matrix s_all = cohort.Sensitive();
  std::vector<std::size_t> fit_rows;
  if (options.fit_on_train_only) {
    fit_rows = cohort.Indices(Split::kTrain);
  } else {
    fit_rows.resize(cohort.num_rows());
    for (std::size_t i = 0; i < fit_rows.size(); ++i) fit_rows[i] = i;
  }
  const Matrix s_fit = SelectRows(s_all, fit_rows);

  AutoencoderOptions ae;
  ae.bottleneck = std::min<int>(options.bottleneck, static_cast<int>(s_all.cols()));
  ae.epochs = options.autoencoder_epochs;
  ae.seed = options.seed;

  SubgroupModel model;
  model.fit_on_train_only = options.fit_on_train_only;
  model.embedding = FitAutoencoder(s_fit, ae).params;
  model.assignment = KMeansFit(Embed(model.embedding, s_fit), options.k,
                               options.kmeans_max_iters,
                               DeriveSeed(options.seed, SeedStream::kKMeans));
  model.z = Assign(model.assignment, model.embedding, s_all);
  return model;
}

nlohmann::json ToJson(const EmbeddingParams& params) {
  auto stack = [](const std::vector<AutoencoderLayer>& layers) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& l : layers) {
      out.push_back({{"dense", ToJson(l.dense)}, {"activation", ToString(l.activation)}});
    }
    return out;
  };
  return {{"encoder", stack(params.encoder)}, {"decoder", stack(params.decoder)}};
}

EmbeddingParams EmbeddingParamsFromJson(const nlohmann::json& j) {
  auto stack = [](const nlohmann::json& arr) {
    std::vector<AutoencoderLayer> out;
    for (const auto& jl : arr) {
      out.push_back({DenseFromJson(jl.at("dense")),
                     ActivationFromString(jl.at("activation").get<std::string>())});
    }
    return out;
  };
  EmbeddingParams p;
  p.encoder = stack(j.at("encoder"));
  p.decoder = stack(j.at("decoder"));
  p.Validate();
  return p;
}

nlohmann::json ToJson(const SubgroupModel& model) {
  const auto& a = model.assignment;
  return {{"format", "fairmtl.subgroups"},
          {"version", 1},
          {"k", a.k},
          {"bottleneck", model.embedding.bottleneck()},
          {"fit_on_train_only", model.fit_on_train_only},
          {"centroids", ToJson(a.centroids)},
          {"inertia", a.inertia},
          {"inertia_trace", a.inertia_trace},
          {"iterations", a.iterations},
          {"converged", a.converged},
          {"reseeded_clusters", a.reseeded_clusters},
          {"fit_labels", a.labels},
          {"z", model.z},
          {"autoencoder", ToJson(model.embedding)}};
}

SubgroupModel SubgroupModelFromJson(const nlohmann::json& j) {
  SubgroupModel m;
  try {
    if (j.at("format").get<std::string>() != "fairmtl.subgroups") {
      throw InputError("not a subgroup assignment file");
    }
    m.embedding = EmbeddingParamsFromJson(j.at("autoencoder"));
    auto& a = m.assignment;
    a.k = j.at("k").get<int>();
    a.centroids = MatrixFromJson(j.at("centroids"));
    a.inertia = j.at("inertia").get<double>();
    a.inertia_trace = j.at("inertia_trace").get<std::vector<double>>();
    a.iterations = j.at("iterations").get<int>();
    a.converged = j.at("converged").get<bool>();
    a.reseeded_clusters = j.at("reseeded_clusters").get<int>();
    a.labels = j.at("fit_labels").get<std::vector<int>>();
    m.z = j.at("z").get<std::vector<int>>();
    m.fit_on_train_only = j.at("fit_on_train_only").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("subgroup JSON: ") + e.what());
  }
  if (m.assignment.centroids.rows() != m.assignment.k ||
      m.assignment.centroids.cols() != m.embedding.bottleneck() ||
      j.at("bottleneck").get<Eigen::Index>() != m.embedding.bottleneck()) {
    throw InputError("subgroup JSON: centroid shape does not match K / bottleneck");
  }
  return m;
}

void SaveSubgroupModel(const SubgroupModel& model, const std::filesystem::path& path) {
  WriteTextFile(path, ToJson(model).dump(2) + "\n");
}

SubgroupModel LoadSubgroupModel(const std::filesystem::path& path) {
  const nlohmann::json j = ReadJsonFile(path);
  return SubgroupModelFromJson(j);
}

}  // namespace fairmtl
