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

#include "checkpoint.hpp"

#include <fstream>

namespace uac::nn {

static const char kCheckpointMagic[4] = {'U', 'A', 'C', 'C'};

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const std::string& meta_json,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  put_magic(os, kCheckpointMagic);
  put_u32(os, 1);
  put_u32(os, static_cast<uint32_t>(meta_json.size()));
  os.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
  put_u32(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(tensor->shape.size()));
    for (int d : tensor->shape) put_u32(os, static_cast<uint32_t>(d));
    for (double v : tensor->data) put_f64(os, v);
  }
  if (!os) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  expect_magic(is, kCheckpointMagic, "checkpoint " + path);
  uint32_t version = get_u32(is, "checkpoint version");
  if (version != 1) throw DataError("unsupported checkpoint version in " + path);
  Checkpoint out;
  uint32_t meta_len = get_u32(is, "checkpoint metadata length");
  out.meta_json.resize(meta_len);
  is.read(out.meta_json.data(), meta_len);
  if (!is) throw DataError("truncated checkpoint metadata in " + path);
  uint32_t n = get_u32(is, "checkpoint tensor count");
  out.tensors.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t name_len = get_u32(is, "tensor name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw DataError("truncated tensor name in " + path);
    uint32_t ndim = get_u32(is, "tensor rank");
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get_u32(is, "tensor dim"));
    Tensor t(shape);
    for (auto& v : t.data) v = get_f64(is, "tensor data");
    out.tensors.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void save_params(const std::string& path, const std::string& meta_json, const ParamStore& params,
                 bool with_optimizer_state) {
  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (int i = 0; i < params.count(); ++i) {
    const auto& e = params.entry(i);
    tensors.emplace_back(e.name, &e.value);
    if (with_optimizer_state) {
      tensors.emplace_back(e.name + "#m", &e.m);
      tensors.emplace_back(e.name + "#v", &e.v);
    }
  }
  save_checkpoint(path, meta_json, tensors);
}

std::string load_params(const std::string& path, ParamStore& params, bool with_optimizer_state) {
  Checkpoint ckpt = load_checkpoint(path);
  for (int i = 0; i < params.count(); ++i) {
    auto& e = params.entry(i);
    const Tensor* t = ckpt.find(e.name);
    if (!t) throw DataError("checkpoint " + path + " is missing parameter '" + e.name + "'");
    if (t->shape != e.value.shape) {
      throw DataError("checkpoint " + path + " has wrong shape for parameter '" + e.name + "'");
    }
    e.value = *t;
    if (with_optimizer_state) {
      const Tensor* m = ckpt.find(e.name + "#m");
      const Tensor* v = ckpt.find(e.name + "#v");
      if (!m || !v || m->shape != e.value.shape || v->shape != e.value.shape) {
        throw DataError("checkpoint " + path + " lacks optimizer state for '" + e.name + "'");
      }
      e.m = *m;
      e.v = *v;
    }
  }
  return ckpt.meta_json;
}

}  // namespace uac::nn
