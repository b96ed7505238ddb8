// Copyright 2026 The unitac Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "blocks.hpp"

#include <cmath>

namespace uac::nn {

int ParamStore::add(std::string name, Tensor init) {
  for (const auto& e : entries_) {
    if (e.name == name) throw ConfigError("duplicate parameter name: " + name);
  }
  Entry e;
  e.name = std::move(name);
  e.m = Tensor(init.shape);
  e.v = Tensor(init.shape);
  e.value = std::move(init);
  entries_.push_back(std::move(e));
  return static_cast<int>(entries_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParamStore::truncate(int first_id) {
  if (first_id < 0 || first_id > count()) throw ConfigError("ParamStore::truncate: bad index");
  entries_.resize(static_cast<size_t>(first_id));
}

void ParamStore::zero_moments() {
  for (auto& e : entries_) {
    std::fill(e.m.data.begin(), e.m.data.end(), 0.0);
    std::fill(e.v.data.begin(), e.v.data.end(), 0.0);
  }
}

Bound bind_all(Tape& tape, const ParamStore& params) {
  Bound b;
  b.node_of.reserve(static_cast<size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    b.node_of.push_back(tape.external(&params.entry(i).value, /*requires_grad=*/true, i));
  }
  return b;
}

Tensor xavier_uniform(int in_dim, int out_dim, Rng& rng) {
  Tensor t({in_dim, out_dim});
  double limit = std::sqrt(6.0 / (in_dim + out_dim));
  for (double& v : t.data) v = rng.uniform(-limit, limit);
  return t;
}

Tensor normal_init(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal(0.0, stddev);
  return t;
}

LinearParams make_linear(ParamStore& ps, const std::string& prefix, int in_dim, int out_dim,
                         Rng& rng) {
  LinearParams p;
  p.w = ps.add(prefix + ".w", xavier_uniform(in_dim, out_dim, rng));
  p.b = ps.add(prefix + ".b", Tensor({out_dim}));
  return p;
}

LayerNormParams make_layer_norm(ParamStore& ps, const std::string& prefix, int dim) {
  LayerNormParams p;
  Tensor gain({dim});
  std::fill(gain.data.begin(), gain.data.end(), 1.0);
  p.gain = ps.add(prefix + ".gain", std::move(gain));
  p.bias = ps.add(prefix + ".bias", Tensor({dim}));
  return p;
}

SelfAttentionParams make_self_attention(ParamStore& ps, const std::string& prefix, int model_dim,
                                        int heads, int window, Rng& rng) {
  if (model_dim % heads != 0) throw ConfigError("model_dim must be divisible by heads");
  if (window < 0) throw ConfigError("relative window must be >= 0");
  SelfAttentionParams p;
  p.wqkv = ps.add(prefix + ".wqkv", xavier_uniform(model_dim, 3 * model_dim, rng));
  p.bqkv = ps.add(prefix + ".bqkv", Tensor({3 * model_dim}));
  p.wo = ps.add(prefix + ".wo", xavier_uniform(model_dim, model_dim, rng));
  p.bo = ps.add(prefix + ".bo", Tensor({model_dim}));
  p.rel = ps.add(prefix + ".rel_bias", Tensor({heads, 2 * window + 1}));
  return p;
}

CrossAttentionParams make_cross_attention(ParamStore& ps, const std::string& prefix, int model_dim,
                                          Rng& rng) {
  CrossAttentionParams p;
  p.wq = ps.add(prefix + ".wq", xavier_uniform(model_dim, model_dim, rng));
  p.bq = ps.add(prefix + ".bq", Tensor({model_dim}));
  p.wkv = ps.add(prefix + ".wkv", xavier_uniform(model_dim, 2 * model_dim, rng));
  p.bkv = ps.add(prefix + ".bkv", Tensor({2 * model_dim}));
  p.wo = ps.add(prefix + ".wo", xavier_uniform(model_dim, model_dim, rng));
  p.bo = ps.add(prefix + ".bo", Tensor({model_dim}));
  return p;
}

int linear(Tape& t, const Bound& bound, const LinearParams& p, int x) {
  return t.add_bias(t.matmul(x, bound[p.w]), bound[p.b]);
}

int layer_norm(Tape& t, const Bound& bound, const LayerNormParams& p, int x) {
  return t.layer_norm(x, bound[p.gain], bound[p.bias]);
}

int self_attention(Tape& t, const Bound& bound, const SelfAttentionParams& p, int x, int heads,
                   int window, bool causal) {
  int model_dim = t.value(x).cols();
  int head_dim = model_dim / heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  int qkv = t.add_bias(t.matmul(x, bound[p.wqkv]), bound[p.bqkv]);
  std::vector<int> outs;
  outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    int q = t.slice_cols(qkv, h * head_dim, head_dim);
    int k = t.slice_cols(qkv, model_dim + h * head_dim, head_dim);
    int v = t.slice_cols(qkv, 2 * model_dim + h * head_dim, head_dim);
    int scores = t.scale(t.matmul_nt(q, k), inv_sqrt);
    scores = t.relative_bias(scores, bound[p.rel], h, window, causal);
    int probs = t.softmax_rows(scores);
    outs.push_back(t.matmul(probs, v));
  }
  int merged = t.concat_cols(outs);
  return t.add_bias(t.matmul(merged, bound[p.wo]), bound[p.bo]);
}

int cross_attention(Tape& t, const Bound& bound, const CrossAttentionParams& p, int x, int enc,
                    int heads) {
  int model_dim = t.value(x).cols();
  int head_dim = model_dim / heads;
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  int q_all = t.add_bias(t.matmul(x, bound[p.wq]), bound[p.bq]);
  int kv_all = t.add_bias(t.matmul(enc, bound[p.wkv]), bound[p.bkv]);
  std::vector<int> outs;
  outs.reserve(static_cast<size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    int q = t.slice_cols(q_all, h * head_dim, head_dim);
    int k = t.slice_cols(kv_all, h * head_dim, head_dim);
    int v = t.slice_cols(kv_all, model_dim + h * head_dim, head_dim);
    int scores = t.scale(t.matmul_nt(q, k), inv_sqrt);
    int probs = t.softmax_rows(scores);
    outs.push_back(t.matmul(probs, v));
  }
  int merged = t.concat_cols(outs);
  return t.add_bias(t.matmul(merged, bound[p.wo]), bound[p.bo]);
}

int feed_forward(Tape& t, const Bound& bound, const LinearParams& in, const LinearParams& out,
                 int x) {
  return linear(t, bound, out, t.gelu(linear(t, bound, in, x)));
}

void Adam::step(ParamStore& ps, const std::vector<Tensor>& grads, double lr, double clip_norm) {
  if (static_cast<int>(grads.size()) != ps.count()) {
    throw ConfigError("Adam::step: gradient vector size != parameter count");
  }
  double scale = 1.0;
  if (clip_norm > 0) {
    double norm_sq = 0;
    for (const auto& g : grads) {
      for (double v : g.data) norm_sq += v * v;
    }
    double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) throw NumericError("Adam::step: non-finite gradient norm");
    if (norm > clip_norm) scale = clip_norm / norm;
  }
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (int i = 0; i < ps.count(); ++i) {
    const Tensor& g = grads[static_cast<size_t>(i)];
    if (g.data.empty()) continue;
    auto& e = ps.entry(i);
    if (!g.same_shape(e.value)) throw ConfigError("Adam::step: gradient shape mismatch");
    for (size_t j = 0; j < g.data.size(); ++j) {
      double gj = g.data[j] * scale;
      e.m.data[j] = beta1_ * e.m.data[j] + (1.0 - beta1_) * gj;
      e.v.data[j] = beta2_ * e.v.data[j] + (1.0 - beta2_) * gj * gj;
      double mhat = e.m.data[j] / bc1;
      double vhat = e.v.data[j] / bc2;
      e.value.data[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace uac::nn
