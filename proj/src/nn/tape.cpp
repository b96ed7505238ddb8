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

#include "tape.hpp"

#include <atomic>
#include <cmath>

namespace uac::nn {

namespace {
std::atomic<bool> g_finite_checks{false};

constexpr double kMaskValue = -1e30;  // finite stand-in for -inf so checks stay meaningful
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}
}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks.store(enabled, std::memory_order_relaxed); }
bool finite_checks_enabled() { return g_finite_checks.load(std::memory_order_relaxed); }

int Tape::push(Node n, const char* op_name) {
  if (g_finite_checks.load(std::memory_order_relaxed)) {
    const Tensor& v = n.ext ? *n.ext : n.owned;
    if (!all_finite(v.data.data(), v.data.size())) {
      throw NumericError(std::string("non-finite tensor produced by op '") + op_name + "'");
    }
  }
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad.data.empty()) {
    n.grad = Tensor(n.ext ? n.ext->shape : n.owned.shape);
  }
  return n.grad;
}

const Tensor& Tape::grad(int id) { return grad_buf(id); }

int Tape::constant(Tensor value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n), "constant");
}

int Tape::input(Tensor value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = grad_enabled_ && requires_grad;
  return push(std::move(n), "input");
}

int Tape::external(const Tensor* value, bool requires_grad, int param_id) {
  Node n;
  n.ext = value;
  n.requires_grad = grad_enabled_ && requires_grad;
  n.param_id = param_id;
  return push(std::move(n), "external");
}

int Tape::matmul(int a, int b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols() != bv.rows()) throw DataError("matmul: inner dimensions disagree");
  int m = av.rows(), k = av.cols(), n = bv.cols();
  Node node;
  node.owned = Tensor({m, n});
  matmul_acc(av.data.data(), bv.data.data(), node.owned.data.data(), m, k, n);
  node.requires_grad = wants_grad(a) || wants_grad(b);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, b, id, m, k, n](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      if (t.wants_grad(a)) {
        matmul_nt_acc(g.data.data(), t.value(b).data.data(), t.grad_buf(a).data.data(), m, n, k);
      }
      if (t.wants_grad(b)) {
        matmul_tn_acc(t.value(a).data.data(), g.data.data(), t.grad_buf(b).data.data(), m, k, n);
      }
    };
  }
  return push(std::move(node), "matmul");
}

int Tape::matmul_nt(int a, int b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols() != bv.cols()) throw DataError("matmul_nt: inner dimensions disagree");
  int m = av.rows(), k = av.cols(), n = bv.rows();
  Node node;
  node.owned = Tensor({m, n});
  matmul_nt_acc(av.data.data(), bv.data.data(), node.owned.data.data(), m, k, n);
  node.requires_grad = wants_grad(a) || wants_grad(b);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, b, id, m, k, n](Tape& t) {
      const Tensor& g = t.grad_buf(id);  // [m,n]
      if (t.wants_grad(a)) {
        // dA[m,k] += G[m,n] * B[n,k]
        matmul_acc(g.data.data(), t.value(b).data.data(), t.grad_buf(a).data.data(), m, n, k);
      }
      if (t.wants_grad(b)) {
        // dB[n,k] += G^T[n,m] * A[m,k]
        matmul_tn_acc(g.data.data(), t.value(a).data.data(), t.grad_buf(b).data.data(), m, n, k);
      }
    };
  }
  return push(std::move(node), "matmul_nt");
}

int Tape::add(int a, int b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.same_shape(bv)) throw DataError("add: shape mismatch");
  Node node;
  node.owned = av;
  for (size_t i = 0; i < node.owned.data.size(); ++i) node.owned.data[i] += bv.data[i];
  node.requires_grad = wants_grad(a) || wants_grad(b);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, b, id](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      for (int side : {a, b}) {
        if (!t.wants_grad(side)) continue;
        Tensor& d = t.grad_buf(side);
        for (size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i];
      }
    };
  }
  return push(std::move(node), "add");
}

int Tape::add_bias(int a, int bias) {
  const Tensor& av = value(a);
  const Tensor& bv = value(bias);
  if (bv.size() != av.cols()) throw DataError("add_bias: bias length != columns");
  int rows = av.rows(), cols = av.cols();
  Node node;
  node.owned = av;
  for (int r = 0; r < rows; ++r) {
    double* out = node.owned.row(r);
    for (int c = 0; c < cols; ++c) out[c] += bv.data[static_cast<size_t>(c)];
  }
  node.requires_grad = wants_grad(a) || wants_grad(bias);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, bias, id, rows, cols](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      if (t.wants_grad(a)) {
        Tensor& d = t.grad_buf(a);
        for (size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i];
      }
      if (t.wants_grad(bias)) {
        Tensor& d = t.grad_buf(bias);
        for (int r = 0; r < rows; ++r) {
          const double* gr = g.row(r);
          for (int c = 0; c < cols; ++c) d.data[static_cast<size_t>(c)] += gr[c];
        }
      }
    };
  }
  return push(std::move(node), "add_bias");
}

int Tape::scale(int a, double s) {
  Node node;
  node.owned = value(a);
  for (double& v : node.owned.data) v *= s;
  node.requires_grad = wants_grad(a);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, s, id](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      Tensor& d = t.grad_buf(a);
      for (size_t i = 0; i < g.data.size(); ++i) d.data[i] += s * g.data[i];
    };
  }
  return push(std::move(node), "scale");
}

int Tape::gelu(int a) {
  Node node;
  node.owned = value(a);
  for (double& v : node.owned.data) v = gelu_fwd(v);
  node.requires_grad = wants_grad(a);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, id](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      const Tensor& x = t.value(a);
      Tensor& d = t.grad_buf(a);
      for (size_t i = 0; i < g.data.size(); ++i) d.data[i] += g.data[i] * gelu_grad(x.data[i]);
    };
  }
  return push(std::move(node), "gelu");
}

int Tape::layer_norm(int a, int gain, int bias) {
  const Tensor& av = value(a);
  const Tensor& gv = value(gain);
  const Tensor& bv = value(bias);
  int rows = av.rows(), cols = av.cols();
  if (gv.size() != cols || bv.size() != cols) throw DataError("layer_norm: param length mismatch");
  constexpr double eps = 1e-5;

  Node node;
  node.owned = Tensor({rows, cols});
  Tensor inv_sigma({rows});
  Tensor x_hat({rows, cols});
  for (int r = 0; r < rows; ++r) {
    const double* x = av.row(r);
    double mean = 0;
    for (int c = 0; c < cols; ++c) mean += x[c];
    mean /= cols;
    double var = 0;
    for (int c = 0; c < cols; ++c) {
      double d = x[c] - mean;
      var += d * d;
    }
    var /= cols;
    double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma.data[static_cast<size_t>(r)] = inv;
    double* xh = x_hat.row(r);
    double* out = node.owned.row(r);
    for (int c = 0; c < cols; ++c) {
      xh[c] = (x[c] - mean) * inv;
      out[c] = xh[c] * gv.data[static_cast<size_t>(c)] + bv.data[static_cast<size_t>(c)];
    }
  }
  node.requires_grad = wants_grad(a) || wants_grad(gain) || wants_grad(bias);
  if (node.requires_grad) {
    // Saved intermediates go on the tape first so the op id stays the last node.
    int xh_node = constant(std::move(x_hat));
    int is_node = constant(std::move(inv_sigma));
    int id = node_count();
    node.backprop = [a, gain, bias, id, xh_node, is_node, rows, cols](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      const Tensor& xh = t.value(xh_node);
      const Tensor& inv_s = t.value(is_node);
      const Tensor& gn = t.value(gain);
      if (t.wants_grad(gain) || t.wants_grad(bias)) {
        for (int r = 0; r < rows; ++r) {
          const double* gr = g.row(r);
          const double* xr = xh.row(r);
          if (t.wants_grad(gain)) {
            Tensor& dg = t.grad_buf(gain);
            for (int c = 0; c < cols; ++c) dg.data[static_cast<size_t>(c)] += gr[c] * xr[c];
          }
          if (t.wants_grad(bias)) {
            Tensor& db = t.grad_buf(bias);
            for (int c = 0; c < cols; ++c) db.data[static_cast<size_t>(c)] += gr[c];
          }
        }
      }
      if (t.wants_grad(a)) {
        Tensor& dx = t.grad_buf(a);
        for (int r = 0; r < rows; ++r) {
          const double* gr = g.row(r);
          const double* xr = xh.row(r);
          double sum_gy = 0, sum_gyx = 0;
          for (int c = 0; c < cols; ++c) {
            double gy = gr[c] * gn.data[static_cast<size_t>(c)];
            sum_gy += gy;
            sum_gyx += gy * xr[c];
          }
          double mean_gy = sum_gy / cols;
          double mean_gyx = sum_gyx / cols;
          double inv = inv_s.data[static_cast<size_t>(r)];
          double* dxr = dx.row(r);
          for (int c = 0; c < cols; ++c) {
            double gy = gr[c] * gn.data[static_cast<size_t>(c)];
            dxr[c] += inv * (gy - mean_gy - xr[c] * mean_gyx);
          }
        }
      }
    };
  }
  return push(std::move(node), "layer_norm");
}

int Tape::relative_bias(int scores, int bias_table, int head, int window, bool causal) {
  const Tensor& sv = value(scores);
  const Tensor& bv = value(bias_table);
  int rows = sv.rows(), cols = sv.cols();
  int buckets = 2 * window + 1;
  if (bv.ndim() != 2 || bv.cols() != buckets) throw DataError("relative_bias: bad bias table");
  if (head < 0 || head >= bv.rows()) throw DataError("relative_bias: head out of range");
  const double* table = bv.row(head);

  Node node;
  node.owned = Tensor({rows, cols});
  for (int i = 0; i < rows; ++i) {
    const double* in = sv.row(i);
    double* out = node.owned.row(i);
    for (int j = 0; j < cols; ++j) {
      if (causal && j > i) {
        out[j] = kMaskValue;
      } else {
        int off = j - i;
        if (off > window) off = window;
        if (off < -window) off = -window;
        out[j] = in[j] + table[off + window];
      }
    }
  }
  node.requires_grad = wants_grad(scores) || wants_grad(bias_table);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [scores, bias_table, head, window, causal, id, rows, cols](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      Tensor* ds = t.wants_grad(scores) ? &t.grad_buf(scores) : nullptr;
      Tensor* db = t.wants_grad(bias_table) ? &t.grad_buf(bias_table) : nullptr;
      double* dbh = db ? db->row(head) : nullptr;
      for (int i = 0; i < rows; ++i) {
        const double* gr = g.row(i);
        double* dsr = ds ? ds->row(i) : nullptr;
        for (int j = 0; j < cols; ++j) {
          if (causal && j > i) continue;  // masked entries pass no gradient
          if (dsr) dsr[j] += gr[j];
          if (dbh) {
            int off = j - i;
            if (off > window) off = window;
            if (off < -window) off = -window;
            dbh[off + window] += gr[j];
          }
        }
      }
    };
  }
  return push(std::move(node), "relative_bias");
}

int Tape::softmax_rows(int a) {
  const Tensor& av = value(a);
  int rows = av.rows(), cols = av.cols();
  Node node;
  node.owned = Tensor({rows, cols});
  for (int r = 0; r < rows; ++r) {
    const double* in = av.row(r);
    double* out = node.owned.row(r);
    double mx = in[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    double denom = 0;
    for (int c = 0; c < cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      denom += out[c];
    }
    double inv = 1.0 / denom;
    for (int c = 0; c < cols; ++c) out[c] *= inv;
  }
  node.requires_grad = wants_grad(a);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, id, rows, cols](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      const Tensor& p = t.value(id);
      Tensor& d = t.grad_buf(a);
      for (int r = 0; r < rows; ++r) {
        const double* gr = g.row(r);
        const double* pr = p.row(r);
        double dot = 0;
        for (int c = 0; c < cols; ++c) dot += gr[c] * pr[c];
        double* dr = d.row(r);
        for (int c = 0; c < cols; ++c) dr[c] += pr[c] * (gr[c] - dot);
      }
    };
  }
  return push(std::move(node), "softmax_rows");
}

int Tape::embedding(int table, std::vector<int> ids) {
  const Tensor& tv = value(table);
  int vocab = tv.rows(), dim = tv.cols();
  int m = static_cast<int>(ids.size());
  Node node;
  node.owned = Tensor({m, dim});
  for (int t = 0; t < m; ++t) {
    int id = ids[static_cast<size_t>(t)];
    if (id < 0 || id >= vocab) throw DataError("embedding: token id out of range");
    std::copy_n(tv.row(id), dim, node.owned.row(t));
  }
  node.requires_grad = wants_grad(table);
  if (node.requires_grad) {
    int nid = node_count();
    node.backprop = [table, nid, ids = std::move(ids), dim](Tape& t) {
      const Tensor& g = t.grad_buf(nid);
      Tensor& d = t.grad_buf(table);
      for (size_t r = 0; r < ids.size(); ++r) {
        const double* gr = g.row(static_cast<int>(r));
        double* dr = d.row(ids[r]);
        for (int c = 0; c < dim; ++c) dr[c] += gr[c];
      }
    };
  }
  return push(std::move(node), "embedding");
}

int Tape::gather_rows(int a, std::vector<int> rows) {
  const Tensor& av = value(a);
  int cols = av.cols();
  Node node;
  node.owned = Tensor({static_cast<int>(rows.size()), cols});
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= av.rows()) throw DataError("gather_rows: index out of range");
    std::copy_n(av.row(rows[r]), cols, node.owned.row(static_cast<int>(r)));
  }
  node.requires_grad = wants_grad(a);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, id, rows = std::move(rows), cols](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      Tensor& d = t.grad_buf(a);
      for (size_t r = 0; r < rows.size(); ++r) {
        const double* gr = g.row(static_cast<int>(r));
        double* dr = d.row(rows[r]);
        for (int c = 0; c < cols; ++c) dr[c] += gr[c];
      }
    };
  }
  return push(std::move(node), "gather_rows");
}

int Tape::replace_rows(int a, std::vector<char> mask, int vec) {
  const Tensor& av = value(a);
  const Tensor& vv = value(vec);
  if (mask.size() != static_cast<size_t>(av.rows())) throw DataError("replace_rows: mask length");
  if (vv.size() != av.cols()) throw DataError("replace_rows: vector length != columns");
  int cols = av.cols();
  Node node;
  node.owned = av;
  for (size_t r = 0; r < mask.size(); ++r) {
    if (mask[r]) std::copy_n(vv.data.data(), cols, node.owned.row(static_cast<int>(r)));
  }
  node.requires_grad = wants_grad(a) || wants_grad(vec);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, vec, id, mask = std::move(mask), cols](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      Tensor* da = t.wants_grad(a) ? &t.grad_buf(a) : nullptr;
      Tensor* dv = t.wants_grad(vec) ? &t.grad_buf(vec) : nullptr;
      for (size_t r = 0; r < mask.size(); ++r) {
        const double* gr = g.row(static_cast<int>(r));
        if (mask[r]) {
          if (dv) {
            for (int c = 0; c < cols; ++c) dv->data[static_cast<size_t>(c)] += gr[c];
          }
        } else if (da) {
          double* dr = da->row(static_cast<int>(r));
          for (int c = 0; c < cols; ++c) dr[c] += gr[c];
        }
      }
    };
  }
  return push(std::move(node), "replace_rows");
}

int Tape::slice_cols(int a, int col0, int width) {
  const Tensor& av = value(a);
  if (col0 < 0 || width < 1 || col0 + width > av.cols()) throw DataError("slice_cols: bad range");
  int rows = av.rows(), cols = av.cols();
  Node node;
  node.owned = Tensor({rows, width});
  for (int r = 0; r < rows; ++r) std::copy_n(av.row(r) + col0, width, node.owned.row(r));
  node.requires_grad = wants_grad(a);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, id, col0, width, rows, cols](Tape& t) {
      (void)cols;
      const Tensor& g = t.grad_buf(id);
      Tensor& d = t.grad_buf(a);
      for (int r = 0; r < rows; ++r) {
        const double* gr = g.row(r);
        double* dr = d.row(r) + col0;
        for (int c = 0; c < width; ++c) dr[c] += gr[c];
      }
    };
  }
  return push(std::move(node), "slice_cols");
}

int Tape::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw DataError("concat_cols: no inputs");
  int rows = value(parts[0]).rows();
  int total = 0;
  bool needs = false;
  for (int p : parts) {
    if (value(p).rows() != rows) throw DataError("concat_cols: row mismatch");
    total += value(p).cols();
    needs = needs || wants_grad(p);
  }
  Node node;
  node.owned = Tensor({rows, total});
  int off = 0;
  for (int p : parts) {
    const Tensor& pv = value(p);
    for (int r = 0; r < rows; ++r) std::copy_n(pv.row(r), pv.cols(), node.owned.row(r) + off);
    off += pv.cols();
  }
  node.requires_grad = needs;
  if (needs) {
    int id = node_count();
    node.backprop = [parts, id, rows](Tape& t) {
      const Tensor& g = t.grad_buf(id);
      int off2 = 0;
      for (int p : parts) {
        int w = t.value(p).cols();
        if (t.wants_grad(p)) {
          Tensor& d = t.grad_buf(p);
          for (int r = 0; r < rows; ++r) {
            const double* gr = g.row(r) + off2;
            double* dr = d.row(r);
            for (int c = 0; c < w; ++c) dr[c] += gr[c];
          }
        }
        off2 += w;
      }
    };
  }
  return push(std::move(node), "concat_cols");
}

int Tape::cross_entropy_sum(int logits, std::vector<int> targets) {
  const Tensor& lv = value(logits);
  int rows = lv.rows(), cols = lv.cols();
  if (static_cast<int>(targets.size()) != rows) {
    throw DataError("cross_entropy_sum: one target per row required");
  }
  double loss = 0;
  for (int r = 0; r < rows; ++r) {
    int y = targets[static_cast<size_t>(r)];
    if (y < 0 || y >= cols) throw DataError("cross_entropy_sum: target out of range");
    const double* in = lv.row(r);
    double mx = in[0];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
    double denom = 0;
    for (int c = 0; c < cols; ++c) denom += std::exp(in[c] - mx);
    loss += mx + std::log(denom) - in[y];
  }
  Node node;
  node.owned = Tensor::scalar(loss);
  node.requires_grad = wants_grad(logits);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [logits, id, targets = std::move(targets), rows, cols](Tape& t) {
      double gs = t.grad_buf(id).data[0];
      const Tensor& lv2 = t.value(logits);
      Tensor& d = t.grad_buf(logits);
      for (int r = 0; r < rows; ++r) {
        const double* in = lv2.row(r);
        double* dr = d.row(r);
        double mx = in[0];
        for (int c = 1; c < cols; ++c) mx = std::max(mx, in[c]);
        double denom = 0;
        for (int c = 0; c < cols; ++c) denom += std::exp(in[c] - mx);
        double inv = 1.0 / denom;
        for (int c = 0; c < cols; ++c) dr[c] += gs * std::exp(in[c] - mx) * inv;
        dr[targets[static_cast<size_t>(r)]] -= gs;
      }
    };
  }
  return push(std::move(node), "cross_entropy_sum");
}

int Tape::sum_squares(int a) {
  const Tensor& av = value(a);
  double total = 0;
  for (double v : av.data) total += v * v;
  Node node;
  node.owned = Tensor::scalar(total);
  node.requires_grad = wants_grad(a);
  if (node.requires_grad) {
    int id = node_count();
    node.backprop = [a, id](Tape& t) {
      double gs = t.grad_buf(id).data[0];
      const Tensor& x = t.value(a);
      Tensor& d = t.grad_buf(a);
      for (size_t i = 0; i < x.data.size(); ++i) d.data[i] += 2.0 * gs * x.data[i];
    };
  }
  return push(std::move(node), "sum_squares");
}

void Tape::backward(int scalar_node) {
  if (!grad_enabled_) throw NumericError("backward() on a no-grad tape");
  const Tensor& v = value(scalar_node);
  if (v.size() != 1) throw DataError("backward: loss must be scalar");
  if (!std::isfinite(v.data[0])) throw NumericError("backward: non-finite loss");
  grad_buf(scalar_node).data[0] = 1.0;
  for (int id = scalar_node; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.backprop && !n.grad.data.empty()) n.backprop(*this);
  }
}

}  // namespace uac::nn
