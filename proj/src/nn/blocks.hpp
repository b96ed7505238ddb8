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

#pragma once

#include <string>
#include <vector>

#include "tape.hpp"

namespace uac::nn {

/// Named model parameters plus Adam moment buffers. Parameter ids are dense
/// indices in creation order; checkpoints address entries by name.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor m, v;  // Adam moments
  };

  int add(std::string name, Tensor init);
  int count() const { return static_cast<int>(entries_.size()); }
  Entry& entry(int id) { return entries_[static_cast<size_t>(id)]; }
  const Entry& entry(int id) const { return entries_[static_cast<size_t>(id)]; }
  int find(const std::string& name) const;  // -1 when absent
  int64_t total_elements() const;
  /// Drops entries with id >= first_id; used to shed temporary
  /// pretraining-only parameters.
  void truncate(int first_id);
  void zero_moments();

 private:
  std::vector<Entry> entries_;
};

/// Tape nodes for every parameter, indexed by parameter id.
struct Bound {
  std::vector<int> node_of;
  int operator[](int param_id) const { return node_of[static_cast<size_t>(param_id)]; }
};

Bound bind_all(Tape& tape, const ParamStore& params);

// Parameter initializers.
Tensor xavier_uniform(int in_dim, int out_dim, Rng& rng);
Tensor normal_init(std::vector<int> shape, double stddev, Rng& rng);

struct LinearParams {
  int w = -1, b = -1;
};
struct LayerNormParams {
  int gain = -1, bias = -1;
};
struct SelfAttentionParams {
  int wqkv = -1, bqkv = -1, wo = -1, bo = -1, rel = -1;
};
struct CrossAttentionParams {
  int wq = -1, bq = -1, wkv = -1, bkv = -1, wo = -1, bo = -1;
};

LinearParams make_linear(ParamStore& ps, const std::string& prefix, int in_dim, int out_dim,
                         Rng& rng);
LayerNormParams make_layer_norm(ParamStore& ps, const std::string& prefix, int dim);
SelfAttentionParams make_self_attention(ParamStore& ps, const std::string& prefix, int model_dim,
                                        int heads, int window, Rng& rng);
CrossAttentionParams make_cross_attention(ParamStore& ps, const std::string& prefix, int model_dim,
                                          Rng& rng);

// Graph builders.
int linear(Tape& t, const Bound& bound, const LinearParams& p, int x);
int layer_norm(Tape& t, const Bound& bound, const LayerNormParams& p, int x);
/// Multi-head self-attention with learned relative-position bias; causal masks
/// positions j > i.
int self_attention(Tape& t, const Bound& bound, const SelfAttentionParams& p, int x, int heads,
                   int window, bool causal);
/// Cross-attention from decoder states x to encoder output enc; no position
/// bias (encoder output already carries positional structure).
int cross_attention(Tape& t, const Bound& bound, const CrossAttentionParams& p, int x, int enc,
                    int heads);
/// Position-wise feed-forward: linear -> GELU -> linear.
int feed_forward(Tape& t, const Bound& bound, const LinearParams& in, const LinearParams& out,
                 int x);

/// Adam with linear-decay learning rate supplied per step by the caller.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void reset(ParamStore& ps) {
    ps.zero_moments();
    t_ = 0;
  }
  int steps_taken() const { return t_; }
  void set_steps_taken(int t) { t_ = t; }

  /// grads is indexed by parameter id; empty tensors mean zero gradient.
  /// clip_norm <= 0 disables clipping.
  void step(ParamStore& ps, const std::vector<Tensor>& grads, double lr, double clip_norm);

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
};

}  // namespace uac::nn
