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

#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace uac::nn {

/// When enabled, every op validates its output for NaN/Inf and throws
/// NumericError on violation. Off by default; tests and debugging turn it on.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

/// Define-by-run reverse-mode tape. Values are computed eagerly as ops are
/// recorded; backward() walks nodes in reverse creation order. Tensors in the
/// forward graph are immutable once written.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  // Leaves.
  int constant(Tensor value);
  int input(Tensor value, bool requires_grad = false);
  /// Borrows external storage (parameters). The pointee must outlive the tape.
  int external(const Tensor* value, bool requires_grad, int param_id = -1);

  // Ops. Arguments are node ids.
  int matmul(int a, int b);     // [m,k]x[k,n]
  int matmul_nt(int a, int b);  // [m,k]x[n,k]^T
  int add(int a, int b);        // same shape
  int add_bias(int a, int bias);  // [t,n] + [n] broadcast over rows
  int scale(int a, double s);
  int gelu(int a);
  int layer_norm(int a, int gain, int bias);  // row-wise, eps 1e-5
  /// Adds the learned relative-position bias bucket for clamp(j-i, -R, R) to
  /// scores[i][j]; when causal, entries with j > i are masked before softmax.
  /// bias_table has shape [heads, 2R+1]; head selects the row.
  int relative_bias(int scores, int bias_table, int head, int window, bool causal);
  int softmax_rows(int a);
  int embedding(int table, std::vector<int> ids);
  int gather_rows(int a, std::vector<int> rows);
  /// out[t] = mask[t] ? vec : a[t]
  int replace_rows(int a, std::vector<char> mask, int vec);
  int slice_cols(int a, int col0, int width);
  int concat_cols(const std::vector<int>& parts);
  /// Summed token cross-entropy: sum_i -log softmax(logits[i])[targets[i]].
  int cross_entropy_sum(int logits, std::vector<int> targets);
  /// Sum of squared entries, as a scalar.
  int sum_squares(int a);

  const Tensor& value(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.ext ? *n.ext : n.owned;
  }
  double scalar_value(int id) const { return value(id).data[0]; }
  /// Gradient of a node after backward(); zeros if the node was not reached.
  const Tensor& grad(int id);
  bool has_grad(int id) const { return !nodes_[static_cast<size_t>(id)].grad.data.empty(); }
  int param_of(int id) const { return nodes_[static_cast<size_t>(id)].param_id; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  void backward(int scalar_node);

 private:
  struct Node {
    Tensor owned;
    const Tensor* ext = nullptr;
    Tensor grad;
    bool requires_grad = false;
    int param_id = -1;
    std::function<void(Tape&)> backprop;
  };

  int push(Node n, const char* op_name);
  Tensor& grad_buf(int id);
  bool wants_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  std::vector<Node> nodes_;
  bool grad_enabled_;
};

}  // namespace uac::nn
