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

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "nn/checkpoint.hpp"
#include "nn/gradcheck.hpp"

using namespace uac;
using namespace uac::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

// Independent scaled-dot-product attention, written directly from the
// formula; used as the oracle for the tape implementation.
Tensor naive_attention(const Tensor& x, const Tensor& wqkv, const Tensor& bqkv, const Tensor& wo,
                       const Tensor& bo, int heads) {
  int t_len = x.rows();
  int d = x.cols();
  int hd = d / heads;
  Tensor qkv({t_len, 3 * d});
  for (int i = 0; i < t_len; ++i) {
    for (int j = 0; j < 3 * d; ++j) {
      double acc = bqkv.data[j];
      for (int k = 0; k < d; ++k) acc += x.data[i * d + k] * wqkv.data[k * 3 * d + j];
      qkv.data[i * 3 * d + j] = acc;
    }
  }
  Tensor merged({t_len, d});
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < t_len; ++i) {
      std::vector<double> logits(t_len);
      double mx = -1e300;
      for (int j = 0; j < t_len; ++j) {
        double acc = 0;
        for (int k = 0; k < hd; ++k) {
          acc += qkv.data[i * 3 * d + h * hd + k] * qkv.data[j * 3 * d + d + h * hd + k];
        }
        logits[j] = acc / std::sqrt(static_cast<double>(hd));
        mx = std::max(mx, logits[j]);
      }
      double denom = 0;
      for (int j = 0; j < t_len; ++j) denom += std::exp(logits[j] - mx);
      for (int k = 0; k < hd; ++k) {
        double acc = 0;
        for (int j = 0; j < t_len; ++j) {
          acc += std::exp(logits[j] - mx) / denom * qkv.data[j * 3 * d + 2 * d + h * hd + k];
        }
        merged.data[i * d + h * hd + k] = acc;
      }
    }
  }
  Tensor out({t_len, d});
  for (int i = 0; i < t_len; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = bo.data[j];
      for (int k = 0; k < d; ++k) acc += merged.data[i * d + k] * wo.data[k * d + j];
      out.data[i * d + j] = acc;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("softmax rows sum to one and shift-invariance holds") {
  Rng rng(1);
  Tape tape(false);
  Tensor x = random_tensor({5, 9}, rng, 3.0);
  int a = tape.input(x);
  int s = tape.softmax_rows(a);
  for (int r = 0; r < 5; ++r) {
    double sum = 0;
    for (int c = 0; c < 9; ++c) sum += tape.value(s).row(r)[c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  Tensor shifted = x;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 9; ++c) shifted.data[r * 9 + c] += 17.5;
  }
  int b = tape.input(shifted);
  int s2 = tape.softmax_rows(b);
  for (size_t i = 0; i < tape.value(s).data.size(); ++i) {
    CHECK(tape.value(s2).data[i] == doctest::Approx(tape.value(s).data[i]).epsilon(1e-12));
  }
}

TEST_CASE("attention with zero bias matches the direct formula") {
  Rng rng(7);
  ParamStore ps;
  SelfAttentionParams attn = make_self_attention(ps, "attn", 8, 2, 0, rng);
  Tensor x = random_tensor({6, 8}, rng);

  Tape tape(false);
  Bound bound = bind_all(tape, ps);
  int out = self_attention(tape, bound, attn, tape.input(x), 2, 0, /*causal=*/false);

  Tensor oracle = naive_attention(x, ps.entry(attn.wqkv).value, ps.entry(attn.bqkv).value,
                                  ps.entry(attn.wo).value, ps.entry(attn.bo).value, 2);
  REQUIRE(tape.value(out).shape == oracle.shape);
  for (size_t i = 0; i < oracle.data.size(); ++i) {
    CHECK(tape.value(out).data[i] == doctest::Approx(oracle.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("single-position attention degenerates to the value projection") {
  Rng rng(11);
  ParamStore ps;
  SelfAttentionParams attn = make_self_attention(ps, "attn", 6, 3, 4, rng);
  Tensor x = random_tensor({1, 6}, rng);
  Tape tape(false);
  Bound bound = bind_all(tape, ps);
  int out = self_attention(tape, bound, attn, tape.input(x), 3, 4, true);
  // Softmax over one element is 1, so output = Wo * V + bo regardless of bias.
  Tensor oracle = naive_attention(x, ps.entry(attn.wqkv).value, ps.entry(attn.bqkv).value,
                                  ps.entry(attn.wo).value, ps.entry(attn.bo).value, 3);
  for (size_t i = 0; i < oracle.data.size(); ++i) {
    CHECK(tape.value(out).data[i] == doctest::Approx(oracle.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("causal attention at position zero sees only itself") {
  Rng rng(13);
  ParamStore ps;
  SelfAttentionParams attn = make_self_attention(ps, "attn", 8, 2, 3, rng);
  Tensor x3 = random_tensor({3, 8}, rng);
  Tensor x1({1, 8});
  std::copy_n(x3.data.begin(), 8, x1.data.begin());

  Tape t3(false);
  Bound b3 = bind_all(t3, ps);
  int out3 = self_attention(t3, b3, attn, t3.input(x3), 2, 3, true);
  Tape t1(false);
  Bound b1 = bind_all(t1, ps);
  int out1 = self_attention(t1, b1, attn, t1.input(x1), 2, 3, true);
  for (int c = 0; c < 8; ++c) {
    CHECK(t3.value(out3).row(0)[c] == doctest::Approx(t1.value(out1).row(0)[c]).epsilon(1e-12));
  }
}

TEST_CASE("relative bias shifts logits by clamped offset buckets") {
  ParamStore ps;
  Tensor table({1, 3});  // window 1: buckets for offsets -1, 0, +1
  table.data = {10.0, 20.0, 30.0};
  int bias = ps.add("bias", std::move(table));
  Tape tape(false);
  Bound bound = bind_all(tape, ps);
  Tensor scores({3, 3});
  int s = tape.input(scores);
  int out = tape.relative_bias(s, bound[bias], 0, 1, false);
  // offsets: clamp(j - i) with window 1.
  CHECK(tape.value(out).row(0)[0] == 20.0);
  CHECK(tape.value(out).row(0)[1] == 30.0);
  CHECK(tape.value(out).row(0)[2] == 30.0);  // clamped beyond +1
  CHECK(tape.value(out).row(2)[0] == 10.0);  // clamped beyond -1
  CHECK(tape.value(out).row(2)[2] == 20.0);
}

TEST_CASE("cross-entropy oracle values") {
  Tape tape(false);
  // Uniform logits over V classes -> loss ln V.
  const int v = 37;
  Tensor logits({1, v});
  int node = tape.cross_entropy_sum(tape.input(logits), {5});
  CHECK(tape.scalar_value(node) == doctest::Approx(std::log(static_cast<double>(v))).epsilon(1e-12));

  // Large-margin target -> loss ~ 0.
  Tensor margin({1, 4});
  margin.data = {0.0, 0.0, 50.0, 0.0};
  int node2 = tape.cross_entropy_sum(tape.input(margin), {2});
  CHECK(tape.scalar_value(node2) < 1e-9);

  // Random 10-class case against the direct formula.
  Rng rng(3);
  Tensor r({4, 10});
  for (auto& x : r.data) x = rng.normal();
  std::vector<int> targets = {1, 0, 9, 4};
  double expected = 0;
  for (int i = 0; i < 4; ++i) {
    double denom = 0;
    for (int c = 0; c < 10; ++c) denom += std::exp(r.data[i * 10 + c]);
    expected += -std::log(std::exp(r.data[i * 10 + targets[i]]) / denom);
  }
  int node3 = tape.cross_entropy_sum(tape.input(r), targets);
  CHECK(tape.scalar_value(node3) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient check: linear layer with squared loss") {
  Rng rng(17);
  ParamStore ps;
  LinearParams lin = make_linear(ps, "lin", 5, 4, rng);
  Tensor x = random_tensor({3, 5}, rng);
  auto build = [&](Tape& t, const Bound& b) {
    return t.sum_squares(linear(t, b, lin, t.input(x)));
  };
  GradCheckReport report = grad_check(ps, build, 1e-5);
  CHECK(report.max_rel_error < 1e-7);
}

TEST_CASE("gradient check: layer norm") {
  Rng rng(19);
  ParamStore ps;
  LayerNormParams ln = make_layer_norm(ps, "ln", 6);
  // Perturb gain/bias away from the identity so gradients are generic.
  for (auto& v : ps.entry(ln.gain).value.data) v = 1.0 + 0.3 * rng.normal();
  for (auto& v : ps.entry(ln.bias).value.data) v = 0.2 * rng.normal();
  Tensor x = random_tensor({4, 6}, rng);
  auto build = [&](Tape& t, const Bound& b) {
    return t.sum_squares(layer_norm(t, b, ln, t.input(x)));
  };
  CHECK(grad_check(ps, build, 1e-5).max_rel_error < 1e-6);
}

TEST_CASE("gradient check: attention block with relative bias") {
  Rng rng(23);
  ParamStore ps;
  SelfAttentionParams attn = make_self_attention(ps, "attn", 8, 2, 2, rng);
  for (auto& v : ps.entry(attn.rel).value.data) v = 0.1 * rng.normal();
  Tensor x = random_tensor({5, 8}, rng, 0.7);
  auto build = [&](Tape& t, const Bound& b) {
    return t.sum_squares(self_attention(t, b, attn, t.input(x), 2, 2, true));
  };
  CHECK(grad_check(ps, build, 1e-5).max_rel_error < 1e-5);
}

TEST_CASE("gradient of a parameter-free loss is zero") {
  Rng rng(29);
  ParamStore ps;
  LinearParams lin = make_linear(ps, "lin", 3, 3, rng);
  Tensor x = random_tensor({2, 3}, rng);
  Tape tape(true);
  Bound bound = bind_all(tape, ps);
  int loss = tape.sum_squares(tape.input(x));  // parameters never touched
  tape.backward(loss);
  for (int i = 0; i < ps.count(); ++i) {
    for (double g : tape.grad(bound[i]).data) CHECK(g == 0.0);
  }
  (void)lin;
}

TEST_CASE("finite checks trip on NaN when enabled") {
  Tensor bad({2, 2});
  bad.data[1] = std::numeric_limits<double>::quiet_NaN();
  set_finite_checks(true);
  Tape tape(false);
  CHECK_THROWS_AS(tape.input(std::move(bad)), NumericError);
  set_finite_checks(false);
  Tensor bad2({1, 1});
  bad2.data[0] = std::numeric_limits<double>::infinity();
  Tape tape2(false);
  CHECK_NOTHROW(tape2.input(std::move(bad2)));
}

TEST_CASE("adam with zero learning rate leaves parameters untouched") {
  Rng rng(31);
  ParamStore ps;
  LinearParams lin = make_linear(ps, "lin", 4, 4, rng);
  std::vector<double> before = ps.entry(lin.w).value.data;
  std::vector<Tensor> grads(ps.count());
  grads[lin.w] = random_tensor({4, 4}, rng);
  grads[lin.b] = random_tensor({4}, rng);
  Adam adam;
  adam.reset(ps);
  adam.step(ps, grads, 0.0, 1.0);
  CHECK(ps.entry(lin.w).value.data == before);
}

TEST_CASE("adam clips the global gradient norm") {
  Rng rng(37);
  ParamStore ps;
  int p = ps.add("p", Tensor({4}));
  std::vector<Tensor> grads(1);
  grads[0] = Tensor({4});
  grads[0].data = {1e6, 0, 0, 0};
  Adam adam;
  adam.reset(ps);
  adam.step(ps, grads, 0.1, 1.0);
  // After clipping, the first moment is bounded by (1-beta1) * clip.
  CHECK(std::fabs(ps.entry(p).m.data[0]) <= 0.1 + 1e-12);
}

TEST_CASE("checkpoints restore parameters bitwise") {
  Rng rng(41);
  ParamStore ps;
  make_linear(ps, "a", 3, 5, rng);
  make_layer_norm(ps, "b", 4);
  std::string path =
      (std::filesystem::temp_directory_path() / "unitac_test_ckpt.bin").string();
  save_params(path, "{\"note\":1}", ps, true);

  ParamStore restored;
  Rng rng2(999);
  make_linear(restored, "a", 3, 5, rng2);
  make_layer_norm(restored, "b", 4);
  std::string meta = load_params(path, restored, true);
  CHECK(meta == "{\"note\":1}");
  for (int i = 0; i < ps.count(); ++i) {
    CHECK(restored.entry(i).value.data == ps.entry(i).value.data);
  }

  ParamStore wrong;
  Rng rng3(1);
  make_linear(wrong, "a", 3, 6, rng3);
  CHECK_THROWS_AS(load_params(path, wrong), DataError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
}
