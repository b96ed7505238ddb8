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

#include <cstdint>
#include <numeric>
#include <vector>

#include "../common.hpp"

namespace uac::nn {

/// Dense tensor of 64-bit floats. Training runs entirely in doubles; 32-bit
/// precision exists only at the artifact-file boundary.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(element_count(shape)), 0.0);
  }

  static int64_t element_count(const std::vector<int>& s) {
    int64_t n = 1;
    for (int e : s) n *= e;
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor scalar(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols(); }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols(); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// Raw kernels. All accumulate into c, which the caller must initialize.
// c[m x n] += a[m x k] * b[k x n]
void matmul_acc(const double* a, const double* b, double* c, int m, int k, int n);
// c[m x n] += a[m x k] * b[n x k]^T
void matmul_nt_acc(const double* a, const double* b, double* c, int m, int k, int n);
// c[k x n] += a[m x k]^T * b[m x n]
void matmul_tn_acc(const double* a, const double* b, double* c, int m, int k, int n);

}  // namespace uac::nn
