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

#include "gradcheck.hpp"

#include <cmath>

namespace uac::nn {

namespace {

double eval_loss(ParamStore& params, const LossBuilder& build) {
  Tape tape(/*grad_enabled=*/false);
  Bound bound;
  bound.node_of.reserve(static_cast<size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    bound.node_of.push_back(tape.external(&params.entry(i).value, false, i));
  }
  int loss = build(tape, bound);
  double v = tape.scalar_value(loss);
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
  return v;
}

}  // namespace

GradCheckReport grad_check(ParamStore& params, const LossBuilder& build, double eps) {
  // Analytic pass.
  std::vector<Tensor> analytic(static_cast<size_t>(params.count()));
  {
    Tape tape(/*grad_enabled=*/true);
    Bound bound = bind_all(tape, params);
    int loss = build(tape, bound);
    if (!std::isfinite(tape.scalar_value(loss))) throw NumericError("grad_check: non-finite loss");
    tape.backward(loss);
    for (int i = 0; i < params.count(); ++i) {
      analytic[static_cast<size_t>(i)] = tape.grad(bound[i]);
    }
  }

  GradCheckReport report;
  for (int i = 0; i < params.count(); ++i) {
    auto& entry = params.entry(i);
    for (size_t j = 0; j < entry.value.data.size(); ++j) {
      double original = entry.value.data[j];
      entry.value.data[j] = original + eps;
      double up = eval_loss(params, build);
      entry.value.data[j] = original - eps;
      double down = eval_loss(params, build);
      entry.value.data[j] = original;

      double fd = (up - down) / (2.0 * eps);
      double ga = analytic[static_cast<size_t>(i)].data[j];
      double rel = std::fabs(ga - fd) / std::max(1e-8, std::fabs(ga) + std::fabs(fd));
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = entry.name;
        report.worst_analytic = ga;
        report.worst_fd = fd;
      }
    }
  }
  return report;
}

}  // namespace uac::nn
