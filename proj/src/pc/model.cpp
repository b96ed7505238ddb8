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

#include "model.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace uac::pc {

void PCConfig::validate() const {
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (model_dim < 1 || heads < 1) throw ConfigError("model_dim and heads must be >= 1");
  if (model_dim % heads != 0) throw ConfigError("model_dim must be divisible by heads");
  if (enc_layers < 1 || dec_layers < 1) throw ConfigError("need at least one layer per stack");
  if (rel_window < 0) throw ConfigError("relative window must be >= 0");
  if (units < 2) throw ConfigError("unit vocabulary must have K >= 2");
  if (median_target_len < 0) throw ConfigError("median_target_len must be >= 0");
}

std::string PCConfig::to_json() const {
  nlohmann::json j;
  j["feature_dim"] = feature_dim;
  j["model_dim"] = model_dim;
  j["heads"] = heads;
  j["ffn_dim"] = ffn_dim;
  j["enc_layers"] = enc_layers;
  j["dec_layers"] = dec_layers;
  j["rel_window"] = rel_window;
  j["units"] = units;
  j["median_target_len"] = median_target_len;
  return j.dump();
}

PCConfig PCConfig::from_json(const std::string& json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad model config JSON: ") + e.what());
  }
  PCConfig cfg;
  cfg.feature_dim = j.value("feature_dim", cfg.feature_dim);
  cfg.model_dim = j.value("model_dim", cfg.model_dim);
  cfg.heads = j.value("heads", cfg.heads);
  cfg.ffn_dim = j.value("ffn_dim", cfg.ffn_dim);
  cfg.enc_layers = j.value("enc_layers", cfg.enc_layers);
  cfg.dec_layers = j.value("dec_layers", cfg.dec_layers);
  cfg.rel_window = j.value("rel_window", cfg.rel_window);
  cfg.units = j.value("units", cfg.units);
  cfg.median_target_len = j.value("median_target_len", cfg.median_target_len);
  cfg.validate();
  return cfg;
}

PCModel::PCModel(const PCConfig& config, uint64_t seed) : cfg(config) {
  cfg.validate();
  Rng rng(derive_seed(seed, {0x9c0d}));
  const int d = cfg.model_dim;

  in_proj = nn::make_linear(params, "enc.in_proj", cfg.feature_dim, d, rng);
  enc_layers.reserve(static_cast<size_t>(cfg.enc_layers));
  for (int l = 0; l < cfg.enc_layers; ++l) {
    std::string p = "enc." + std::to_string(l);
    EncLayer layer;
    layer.ln1 = nn::make_layer_norm(params, p + ".ln1", d);
    layer.attn = nn::make_self_attention(params, p + ".attn", d, cfg.heads, cfg.rel_window, rng);
    layer.ln2 = nn::make_layer_norm(params, p + ".ln2", d);
    layer.ff_in = nn::make_linear(params, p + ".ff_in", d, cfg.ffn(), rng);
    layer.ff_out = nn::make_linear(params, p + ".ff_out", cfg.ffn(), d, rng);
    enc_layers.push_back(layer);
  }
  enc_norm = nn::make_layer_norm(params, "enc.norm", d);

  embed = params.add("dec.embed",
                     nn::normal_init({cfg.vocab(), d}, 1.0 / std::sqrt(static_cast<double>(d)), rng));
  dec_layers.reserve(static_cast<size_t>(cfg.dec_layers));
  for (int l = 0; l < cfg.dec_layers; ++l) {
    std::string p = "dec." + std::to_string(l);
    DecLayer layer;
    layer.ln1 = nn::make_layer_norm(params, p + ".ln1", d);
    layer.self_attn =
        nn::make_self_attention(params, p + ".self_attn", d, cfg.heads, cfg.rel_window, rng);
    layer.ln2 = nn::make_layer_norm(params, p + ".ln2", d);
    layer.cross_attn = nn::make_cross_attention(params, p + ".cross_attn", d, rng);
    layer.ln3 = nn::make_layer_norm(params, p + ".ln3", d);
    layer.ff_in = nn::make_linear(params, p + ".ff_in", d, cfg.ffn(), rng);
    layer.ff_out = nn::make_linear(params, p + ".ff_out", cfg.ffn(), d, rng);
    dec_layers.push_back(layer);
  }
  dec_norm = nn::make_layer_norm(params, "dec.norm", d);
  head = nn::make_linear(params, "head", d, cfg.vocab(), rng);
}

nn::Tensor PCModel::mat_to_tensor(const Mat& m) {
  nn::Tensor t({m.rows, m.cols});
  t.data = m.data;
  return t;
}

int PCModel::encode_node(nn::Tape& t, const nn::Bound& bound, int input_node) const {
  int x = nn::linear(t, bound, in_proj, input_node);
  for (const auto& layer : enc_layers) {
    int a = nn::self_attention(t, bound, layer.attn, nn::layer_norm(t, bound, layer.ln1, x),
                               cfg.heads, cfg.rel_window, /*causal=*/false);
    x = t.add(x, a);
    int f = nn::feed_forward(t, bound, layer.ff_in, layer.ff_out,
                             nn::layer_norm(t, bound, layer.ln2, x));
    x = t.add(x, f);
  }
  return nn::layer_norm(t, bound, enc_norm, x);
}

int PCModel::encode(nn::Tape& t, const nn::Bound& bound, const Mat& frames) const {
  if (frames.cols != cfg.feature_dim) throw DataError("encoder input dim mismatch");
  return encode_node(t, bound, t.input(mat_to_tensor(frames)));
}

int PCModel::decode_node(nn::Tape& t, const nn::Bound& bound, int enc_node,
                         const std::vector<int>& input_tokens) const {
  int x = t.scale(t.embedding(bound[embed], input_tokens),
                  std::sqrt(static_cast<double>(cfg.model_dim)));
  for (const auto& layer : dec_layers) {
    int a = nn::self_attention(t, bound, layer.self_attn, nn::layer_norm(t, bound, layer.ln1, x),
                               cfg.heads, cfg.rel_window, /*causal=*/true);
    x = t.add(x, a);
    int c = nn::cross_attention(t, bound, layer.cross_attn,
                                nn::layer_norm(t, bound, layer.ln2, x), enc_node, cfg.heads);
    x = t.add(x, c);
    int f = nn::feed_forward(t, bound, layer.ff_in, layer.ff_out,
                             nn::layer_norm(t, bound, layer.ln3, x));
    x = t.add(x, f);
  }
  x = nn::layer_norm(t, bound, dec_norm, x);
  return nn::linear(t, bound, head, x);
}

int PCModel::lm_node(nn::Tape& t, const nn::Bound& bound,
                     const std::vector<int>& input_tokens) const {
  int x = t.scale(t.embedding(bound[embed], input_tokens),
                  std::sqrt(static_cast<double>(cfg.model_dim)));
  for (const auto& layer : dec_layers) {
    int a = nn::self_attention(t, bound, layer.self_attn, nn::layer_norm(t, bound, layer.ln1, x),
                               cfg.heads, cfg.rel_window, /*causal=*/true);
    x = t.add(x, a);
    int f = nn::feed_forward(t, bound, layer.ff_in, layer.ff_out,
                             nn::layer_norm(t, bound, layer.ln3, x));
    x = t.add(x, f);
  }
  x = nn::layer_norm(t, bound, dec_norm, x);
  return nn::linear(t, bound, head, x);
}

void PCModel::save(const std::string& path, bool with_optimizer_state, int adam_steps) const {
  nlohmann::json meta;
  meta["format"] = "unitac-pc";
  meta["config"] = nlohmann::json::parse(cfg.to_json());
  meta["adam_steps"] = adam_steps;
  nn::save_params(path, meta.dump(), params, with_optimizer_state);
}

PCModel PCModel::load(const std::string& path) {
  nn::Checkpoint ckpt = nn::load_checkpoint(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.meta_json);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint metadata in " + path + ": " + e.what());
  }
  if (meta.value("format", "") != "unitac-pc") {
    throw DataError("checkpoint " + path + " is not a pronunciation-corrector model");
  }
  PCConfig cfg = PCConfig::from_json(meta["config"].dump());
  PCModel model(cfg, /*seed=*/0);
  nn::load_params(path, model.params, /*with_optimizer_state=*/false);
  return model;
}

}  // namespace uac::pc
