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

#include "fairmtl/model.h"

#include <algorithm>

namespace fairmtl {
namespace {

void CheckRouting(const FairMtlParams& params, const Matrix& x, const std::vector<int>& z) {
  if (x.cols() != params.input_dim) {
    throw InputError("forward: expected " + std::to_string(params.input_dim) +
                     " features, got " + std::to_string(x.cols()));
  }
  if (static_cast<std::size_t>(x.rows()) != z.size()) {
    throw InputError("forward: subgroup label count does not match batch rows");
  }
  for (int zi : z) {
    if (zi < 1 || zi > params.k()) {
      throw InputError("forward: subgroup label " + std::to_string(zi) + " outside [1, " +
                       std::to_string(params.k()) + "]");
    }
  }
  if (!x.allFinite()) throw InputError("forward: non-finite input");
}

Matrix EncoderForward(const Encoder& enc, const Matrix& x, const ForwardOptions& options,
                      double dropout_rate, EncoderCache* cache) {
  const bool training = options.mode == Mode::kTrain;
  const bool dropout = training && options.rng != nullptr && dropout_rate > 0.0;
  Matrix h = x;
  for (const auto& block : enc.blocks) {
    Matrix pre = DenseForward(block.dense, h);
    BatchNormCache bn_cache;
    Matrix normed = BatchNormForward(block.bn, pre, training, &bn_cache);
    Matrix act = normed.cwiseMax(0.0);
    if (dropout) {
      Matrix mask = DropoutMask(act.rows(), act.cols(), dropout_rate, *options.rng);
      act = act.cwiseProduct(mask);
      cache->masks.push_back(std::move(mask));
    }
    cache->inputs.push_back(std::move(h));
    cache->bn.push_back(std::move(bn_cache));
    cache->bn_out.push_back(std::move(normed));
    h = std::move(act);
  }
  return h;
}

Matrix HeadForward(const Head& head, const Matrix& h, HeadCache* cache) {
  cache->input = h;
  cache->hidden_pre = DenseForward(head.hidden, h);
  cache->hidden = cache->hidden_pre.cwiseMax(0.0);
  cache->logits = DenseForward(head.out, cache->hidden);
  return SoftmaxRows(cache->logits);
}

std::vector<ParamView> MakeViews(FairMtlParams& p, bool heads_only) {
  std::vector<ParamView> views;
  if (!heads_only) {
    for (std::size_t e = 0; e < p.encoders.size(); ++e) {
      for (std::size_t b = 0; b < p.encoders[e].blocks.size(); ++b) {
        auto& blk = p.encoders[e].blocks[b];
        const std::string prefix = "encoder" + std::to_string(e) + ".block" + std::to_string(b);
        views.push_back({prefix + ".weight", Span(blk.dense.weight)});
        views.push_back({prefix + ".bias", Span(blk.dense.bias)});
        views.push_back({prefix + ".bn_gamma", Span(blk.bn.gamma)});
        views.push_back({prefix + ".bn_beta", Span(blk.bn.beta)});
      }
    }
  }
  for (std::size_t k = 0; k < p.heads.size(); ++k) {
    auto& h = p.heads[k];
    const std::string prefix = "head" + std::to_string(k + 1);
    views.push_back({prefix + ".hidden.weight", Span(h.hidden.weight)});
    views.push_back({prefix + ".hidden.bias", Span(h.hidden.bias)});
    views.push_back({prefix + ".out.weight", Span(h.out.weight)});
    views.push_back({prefix + ".out.bias", Span(h.out.bias)});
  }
  return views;
}

}  // namespace

nlohmann::json ToJson(const ModelConfig& c) {
  return {{"hidden_widths", c.hidden_widths},
          {"head_hidden", c.head_hidden},
          {"dropout_rate", c.dropout_rate}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json& j, ModelConfig defaults) {
  ModelConfig c = defaults;
  c.hidden_widths = j.value("hidden_widths", c.hidden_widths);
  c.head_hidden = j.value("head_hidden", c.head_hidden);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  return c;
}

std::vector<ParamView> FairMtlParams::Views() { return MakeViews(*this, false); }
std::vector<ParamView> FairMtlParams::HeadViews() { return MakeViews(*this, true); }

std::size_t FairMtlParams::NumParameters() const {
  std::size_t n = 0;
  for (const auto& v : const_cast<FairMtlParams*>(this)->Views()) n += v.values.size();
  return n;
}

FairMtlParams ZerosLike(const FairMtlParams& params) {
  FairMtlParams z = params;
  for (auto& v : z.Views()) std::fill(v.values.begin(), v.values.end(), 0.0);
  for (auto& enc : z.encoders) {
    for (auto& b : enc.blocks) {
      b.bn.running_mean.setZero();
      b.bn.running_var.setZero();
    }
  }
  return z;
}

FairMtlParams InitFairMtl(int input_dim, const ModelConfig& config, int k, int num_classes,
                          std::uint64_t seed, bool shared_encoder) {
  if (input_dim < 1) throw InputError("init: input dimension must be >= 1");
  if (config.hidden_widths.empty()) throw InputError("init: hidden widths must be non-empty");
  for (int w : config.hidden_widths) {
    if (w < 1) throw InputError("init: zero-width hidden layer");
  }
  if (config.head_hidden < 1) throw InputError("init: zero-width head layer");
  if (k < 1) throw InputError("init: K must be >= 1");
  if (num_classes < 2) throw InputError("init: C must be >= 2");
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0) {
    throw InputError("init: dropout rate must be in [0, 1)");
  }

  std::mt19937_64 rng(seed);
  FairMtlParams p;
  p.input_dim = input_dim;
  p.num_classes = num_classes;
  p.dropout_rate = config.dropout_rate;
  p.shared_encoder = shared_encoder;
  const int towers = shared_encoder ? 1 : k;
  for (int t = 0; t < towers; ++t) {
    Encoder enc;
    int in = input_dim;
    for (int w : config.hidden_widths) {
      enc.blocks.push_back({InitDense(in, w, rng), InitBatchNorm(w)});
      in = w;
    }
    p.encoders.push_back(std::move(enc));
  }
  const int latent = config.hidden_widths.back();
  for (int h = 0; h < k; ++h) {
    Head head;
    head.hidden = InitDense(latent, config.head_hidden, rng);
    head.out = InitDense(config.head_hidden, num_classes, rng);
    p.heads.push_back(std::move(head));
  }
  return p;
}

Matrix Forward(const FairMtlParams& params, const Matrix& x, const std::vector<int>& z,
               const ForwardOptions& options, ForwardCache* cache) {
  CheckRouting(params, x, z);
  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c = ForwardCache{};
  c.encoders.resize(params.encoders.size());
  c.heads.resize(params.heads.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    c.encoders[params.EncoderIndex(z[i])].rows.push_back(i);
    c.heads[static_cast<std::size_t>(z[i] - 1)].rows.push_back(i);
  }

  const int latent = static_cast<int>(params.encoders.front().blocks.back().dense.out());
  Matrix hidden(x.rows(), latent);
  for (std::size_t e = 0; e < params.encoders.size(); ++e) {
    auto& ec = c.encoders[e];
    if (ec.rows.empty()) continue;
    const bool all_rows = ec.rows.size() == static_cast<std::size_t>(x.rows());
    Matrix sub;
    if (!all_rows) {
      sub.resize(static_cast<Eigen::Index>(ec.rows.size()), x.cols());
      for (std::size_t r = 0; r < ec.rows.size(); ++r) {
        sub.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(ec.rows[r]));
      }
    }
    ec.output = EncoderForward(params.encoders[e], all_rows ? x : sub, options,
                               params.dropout_rate, &ec);
    for (std::size_t r = 0; r < ec.rows.size(); ++r) {
      hidden.row(static_cast<Eigen::Index>(ec.rows[r])) = ec.output.row(static_cast<Eigen::Index>(r));
    }
  }

  c.probs.resize(x.rows(), params.num_classes);
  for (std::size_t k = 0; k < params.heads.size(); ++k) {
    auto& hc = c.heads[k];
    if (hc.rows.empty()) continue;
    Matrix sub(static_cast<Eigen::Index>(hc.rows.size()), latent);
    for (std::size_t r = 0; r < hc.rows.size(); ++r) {
      sub.row(static_cast<Eigen::Index>(r)) = hidden.row(static_cast<Eigen::Index>(hc.rows[r]));
    }
    const Matrix probs = HeadForward(params.heads[k], sub, &hc);
    for (std::size_t r = 0; r < hc.rows.size(); ++r) {
      c.probs.row(static_cast<Eigen::Index>(hc.rows[r])) = probs.row(static_cast<Eigen::Index>(r));
    }
  }
  return c.probs;
}

Matrix Forward(FairMtlParams& params, const Matrix& x, const std::vector<int>& z, Mode mode,
               std::mt19937_64* rng) {
  ForwardCache cache;
  Matrix probs = Forward(params, x, z, ForwardOptions{mode, rng}, &cache);
  if (mode == Mode::kTrain) UpdateRunningStats(&params, cache);
  return probs;
}

void UpdateRunningStats(FairMtlParams* params, const ForwardCache& cache) {
  for (std::size_t e = 0; e < cache.encoders.size(); ++e) {
    const auto& ec = cache.encoders[e];
    for (std::size_t b = 0; b < ec.bn.size(); ++b) {
      UpdateRunningStats(&params->encoders[e].blocks[b].bn, ec.bn[b],
                         static_cast<Eigen::Index>(ec.rows.size()));
    }
  }
}

void Backward(const FairMtlParams& params, const ForwardCache& cache, const Matrix& grad_logits,
              FairMtlParams* grads) {
  const Eigen::Index latent = params.encoders.front().blocks.back().dense.out();
  Matrix grad_hidden = Matrix::Zero(grad_logits.rows(), latent);
  for (std::size_t k = 0; k < params.heads.size(); ++k) {
    const auto& hc = cache.heads[k];
    if (hc.rows.empty()) continue;
    Matrix g(static_cast<Eigen::Index>(hc.rows.size()), grad_logits.cols());
    for (std::size_t r = 0; r < hc.rows.size(); ++r) {
      g.row(static_cast<Eigen::Index>(r)) = grad_logits.row(static_cast<Eigen::Index>(hc.rows[r]));
    }
    const Head& head = params.heads[k];
    Head& gh = grads->heads[k];
    Matrix g_hidden = DenseBackward(head.out, hc.hidden, g, &gh.out);
    g_hidden = (hc.hidden_pre.array() > 0.0).select(g_hidden, 0.0);
    const Matrix g_in = DenseBackward(head.hidden, hc.input, g_hidden, &gh.hidden);
    for (std::size_t r = 0; r < hc.rows.size(); ++r) {
      grad_hidden.row(static_cast<Eigen::Index>(hc.rows[r])) += g_in.row(static_cast<Eigen::Index>(r));
    }
  }

  for (std::size_t e = 0; e < params.encoders.size(); ++e) {
    const auto& ec = cache.encoders[e];
    if (ec.rows.empty()) continue;
    Matrix g(static_cast<Eigen::Index>(ec.rows.size()), latent);
    for (std::size_t r = 0; r < ec.rows.size(); ++r) {
      g.row(static_cast<Eigen::Index>(r)) = grad_hidden.row(static_cast<Eigen::Index>(ec.rows[r]));
    }
    const Encoder& enc = params.encoders[e];
    Encoder& genc = grads->encoders[e];
    for (std::size_t b = enc.blocks.size(); b-- > 0;) {
      if (!ec.masks.empty()) g = g.cwiseProduct(ec.masks[b]);
      g = (ec.bn_out[b].array() > 0.0).select(g, 0.0);
      g = BatchNormBackward(enc.blocks[b].bn, ec.bn[b], g, &genc.blocks[b].bn);
      g = DenseBackward(enc.blocks[b].dense, ec.inputs[b], g, &genc.blocks[b].dense);
    }
  }
}

Labels ArgmaxRows(const Matrix& proba) {
  Labels out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < proba.cols(); ++c) {
      if (proba(i, c) > proba(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Labels Predict(const FairMtlParams& params, const Matrix& x, const std::vector<int>& z) {
  return ArgmaxRows(Forward(params, x, z, ForwardOptions{Mode::kEval, nullptr}));
}

nlohmann::json ToJson(const FairMtlParams& params) {
  nlohmann::json encoders = nlohmann::json::array();
  for (const auto& enc : params.encoders) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : enc.blocks) {
      blocks.push_back({{"dense", ToJson(b.dense)}, {"batch_norm", ToJson(b.bn)}});
    }
    encoders.push_back(std::move(blocks));
  }
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& h : params.heads) {
    heads.push_back({{"hidden", ToJson(h.hidden)}, {"out", ToJson(h.out)}});
  }
  return {{"input_dim", params.input_dim},
          {"num_classes", params.num_classes},
          {"k", params.k()},
          {"dropout_rate", params.dropout_rate},
          {"shared_encoder", params.shared_encoder},
          {"encoders", std::move(encoders)},
          {"heads", std::move(heads)}};
}

FairMtlParams FairMtlParamsFromJson(const nlohmann::json& j) {
  FairMtlParams p;
  try {
    p.input_dim = j.at("input_dim").get<int>();
    p.num_classes = j.at("num_classes").get<int>();
    p.dropout_rate = j.at("dropout_rate").get<double>();
    p.shared_encoder = j.at("shared_encoder").get<bool>();
    for (const auto& jenc : j.at("encoders")) {
      Encoder enc;
      for (const auto& jb : jenc) {
        enc.blocks.push_back({DenseFromJson(jb.at("dense")), BatchNormFromJson(jb.at("batch_norm"))});
      }
      p.encoders.push_back(std::move(enc));
    }
    for (const auto& jh : j.at("heads")) {
      p.heads.push_back({DenseFromJson(jh.at("hidden")), DenseFromJson(jh.at("out"))});
    }
    if (j.at("k").get<int>() != p.k()) throw InputError("model JSON: K does not match heads");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model JSON: ") + e.what());
  }
  const std::size_t expected_towers = p.shared_encoder ? 1 : p.heads.size();
  if (p.encoders.size() != expected_towers || p.heads.empty()) {
    throw InputError("model JSON: encoder/head count mismatch");
  }
  for (const auto& enc : p.encoders) {
    if (enc.blocks.empty() || enc.blocks.front().dense.in() != p.input_dim) {
      throw InputError("model JSON: encoder input width mismatch");
    }
    for (std::size_t b = 1; b < enc.blocks.size(); ++b) {
      if (enc.blocks[b].dense.in() != enc.blocks[b - 1].dense.out()) {
        throw InputError("model JSON: encoder widths do not chain");
      }
    }
  }
  const Eigen::Index latent = p.encoders.front().blocks.back().dense.out();
  for (const auto& h : p.heads) {
    if (h.hidden.in() != latent || h.out.in() != h.hidden.out() || h.out.out() != p.num_classes) {
      throw InputError("model JSON: head shape mismatch");
    }
  }
  return p;
}

}  // namespace fairmtl
