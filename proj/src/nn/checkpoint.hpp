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
#include <utility>
#include <vector>

#include "blocks.hpp"

namespace uac::nn {

/// Named-tensor table with a JSON metadata header. Values are 64-bit floats,
/// little-endian, under a versioned magic.
struct Checkpoint {
  std::string meta_json;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const std::string& meta_json,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors);
Checkpoint load_checkpoint(const std::string& path);

/// Saves params (and optionally Adam moments as `name#m` / `name#v`).
void save_params(const std::string& path, const std::string& meta_json, const ParamStore& params,
                 bool with_optimizer_state = false);
/// Strict by-name restore into an existing store; every store entry must be
/// present with a matching shape. Returns the checkpoint metadata.
std::string load_params(const std::string& path, ParamStore& params,
                        bool with_optimizer_state = false);

}  // namespace uac::nn
