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

#include "fairmtl/nn.h"

#include <cmath>

namespace fairmtl {

std::string ToString(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

Activation ActivationFromString(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw InputError("unknown activation '" + name + "'");
}

Dense InitDense(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  Dense d = ZeroDense(in, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < d.weight.size(); ++i) d.weight.data()[i] = dist(rng);
  return d;
}

Dense ZeroDense(Eigen::Index in, Eigen::Index out) {
  if (in <= 0 || out <= 0) throw InputError("dense layer widths must be positive");
  return Dense{Matrix::Zero(out, in), Vector::Zero(out)};
}

Matrix DenseForward(const Dense& layer, const Matrix& x) {
  if (x.cols() != layer.in()) {
    throw InputError("dense layer expects " + std::to_string(layer.in()) +
                     " inputs, got " + std::to_string(x.cols()));
  }
  Matrix y = x * layer.weight.transpose();
  y.rowwise() += layer.bias.transpose();
  return y;
}

Matrix DenseBackward(const Dense& layer, const Matrix& x, const Matrix& grad_out, Dense* grad) {
  grad->weight.noalias() += grad_out.transpose() * x;
  grad->bias += grad_out.colwise().sum().transpose();
  return grad_out * layer.weight;
}

Matrix Activate(Activation a, const Matrix& pre) {
  switch (a) {
    case Activation::kIdentity: return pre;
    case Activation::kRelu: return pre.cwiseMax(0.0);
    case Activation::kTanh: return pre.array().tanh().matrix();
  }
  return pre;
}

Matrix ActivationBackward(Activation a, const Matrix& pre, const Matrix& post,
                          const Matrix& grad_post) {
  switch (a) {
    case Activation::kIdentity: return grad_post;
    case Activation::kRelu:
      return (pre.array() > 0.0).select(grad_post, 0.0);
    case Activation::kTanh:
      return (grad_post.array() * (1.0 - post.array().square())).matrix();
  }
  return grad_post;
}

BatchNorm InitBatchNorm(Eigen::Index width) {
  BatchNorm bn;
  bn.gamma = Vector::Ones(width);
  bn.beta = Vector::Zero(width);
  bn.running_mean = Vector::Zero(width);
  bn.running_var = Vector::Ones(width);
  return bn;
}

Matrix BatchNormForward(const BatchNorm& bn, const Matrix& x, bool training,
                        BatchNormCache* cache) {
  const Eigen::Index rows = x.rows();
  Vector mean;
  Vector var;
  cache->used_batch_stats = training && rows > 1;
  if (cache->used_batch_stats) {
    mean = x.colwise().mean().transpose();
    var = (x.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() /
          static_cast<double>(rows);
    cache->batch_mean = mean;
    cache->batch_var = var;
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  cache->inv_std = (var.array() + bn.eps).rsqrt().matrix();
  cache->x_hat = (x.rowwise() - mean.transpose()).array().rowwise() *
                 cache->inv_std.transpose().array();
  Matrix y = cache->x_hat.array().rowwise() * bn.gamma.transpose().array();
  y.rowwise() += bn.beta.transpose();
  return y;
}

Matrix BatchNormBackward(const BatchNorm& bn, const BatchNormCache& cache,
                         const Matrix& grad_out, BatchNorm* grad) {
  grad->gamma += (grad_out.array() * cache.x_hat.array()).colwise().sum().transpose().matrix();
  grad->beta += grad_out.colwise().sum().transpose();
  const Matrix dx_hat = grad_out.array().rowwise() * bn.gamma.transpose().array();
  if (!cache.used_batch_stats) {
    return dx_hat.array().rowwise() * cache.inv_std.transpose().array();
  }
  const auto rows = static_cast<double>(grad_out.rows());
  const RowVector sum_dx_hat = dx_hat.colwise().sum();
  const RowVector sum_dx_hat_xhat = (dx_hat.array() * cache.x_hat.array()).colwise().sum();
  Matrix dx = (rows * dx_hat).rowwise() - sum_dx_hat;
  dx -= (cache.x_hat.array().rowwise() * sum_dx_hat_xhat.array()).matrix();
  dx = dx.array().rowwise() * (cache.inv_std.transpose().array() / rows);
  return dx;
}

void UpdateRunningStats(BatchNorm* bn, const BatchNormCache& cache, Eigen::Index batch_rows) {
  if (!cache.used_batch_stats) return;
  const double n = static_cast<double>(batch_rows);
  const Vector unbiased = cache.batch_var * (n / (n - 1.0));
  bn->running_mean = (1.0 - bn->momentum) * bn->running_mean + bn->momentum * cache.batch_mean;
  bn->running_var = (1.0 - bn->momentum) * bn->running_var + bn->momentum * unbiased;
}

Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  Matrix mask(rows, cols);
  const double keep = 1.0 - rate;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = u(rng) < keep ? 1.0 / keep : 0.0;
  }
  return mask;
}

Matrix SoftmaxRows(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p = p.array().colwise() / p.rowwise().sum().array();
  return p;
}

void AdamW::Step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads,
                 double learning_rate) {
  if (params.size() != grads.size()) throw std::logic_error("AdamW: params/grads mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.values.size(), 0.0);
      v_.emplace_back(p.values.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("AdamW: parameter set changed");
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const double decay = 1.0 - learning_rate * config_.weight_decay;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto theta = params[t].values;
    const auto g = grads[t].values;
    auto& m = m_[t];
    auto& v = v_[t];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] *= decay;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

nlohmann::json ToJson(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

nlohmann::json ToJson(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Matrix MatrixFromJson(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw InputError("matrix JSON: data length does not match shape");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

Vector VectorFromJson(const nlohmann::json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

nlohmann::json ToJson(const Dense& d) {
  return {{"weight", ToJson(d.weight)}, {"bias", ToJson(d.bias)}};
}

Dense DenseFromJson(const nlohmann::json& j) {
  Dense d{MatrixFromJson(j.at("weight")), VectorFromJson(j.at("bias"))};
  if (d.bias.size() != d.weight.rows()) throw InputError("dense JSON: bias width mismatch");
  return d;
}

nlohmann::json ToJson(const BatchNorm& bn) {
  return {{"gamma", ToJson(bn.gamma)},
          {"beta", ToJson(bn.beta)},
          {"running_mean", ToJson(bn.running_mean)},
          {"running_var", ToJson(bn.running_var)},
          {"momentum", bn.momentum},
          {"eps", bn.eps}};
}

BatchNorm BatchNormFromJson(const nlohmann::json& j) {
  BatchNorm bn;
  bn.gamma = VectorFromJson(j.at("gamma"));
  bn.beta = VectorFromJson(j.at("beta"));
  bn.running_mean = VectorFromJson(j.at("running_mean"));
  bn.running_var = VectorFromJson(j.at("running_var"));
  bn.momentum = j.at("momentum").get<double>();
  bn.eps = j.at("eps").get<double>();
  const auto w = bn.gamma.size();
  if (bn.beta.size() != w || bn.running_mean.size() != w || bn.running_var.size() != w) {
    throw InputError("batch-norm JSON: width mismatch");
  }
  return bn;
}

}  // namespace fairmtl
