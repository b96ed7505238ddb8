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

#include "blocks.hpp"

namespace uac::nn {

/// Builds a scalar loss over the bound parameters; called repeatedly with
/// perturbed parameter values during finite differencing.
using LossBuilder = std::function<int(Tape&, const Bound&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_fd = 0.0;
};

/// Compares analytic gradients against central finite differences over every
/// parameter element: |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).
GradCheckReport grad_check(ParamStore& params, const LossBuilder& build, double eps = 1e-5);

}  // namespace uac::nn
