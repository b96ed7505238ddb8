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

#include "../nn/blocks.hpp"
#include "../nn/checkpoint.hpp"

namespace uac::pc {

/// Pronunciation-corrector architecture. The decoder vocabulary is the unit
/// inventory plus BOS/EOS/PAD sentinels.
struct PCConfig {
  int feature_dim = 16;
  int model_dim = 64;
  int heads = 4;
  int ffn_dim = 0;  // 0 -> 4 * model_dim
  int enc_layers = 2;
  int dec_layers = 2;
  int rel_window = 16;
  int units = 100;
  int median_target_len = 0;  // training-corpus statistic used to bound decoding

  int vocab() const { return units + 3; }
  int bos() const { return units; }
  int eos() const { return units + 1; }
  int pad() const { return units + 2; }
  int ffn() const { return ffn_dim > 0 ? ffn_dim : 4 * model_dim; }

  void validate() const;
  std::string to_json() const;
  static PCConfig from_json(const std::string& json);
};

/// Pre-norm encoder-decoder transformer over the minimal autodiff substrate.
/// Self-attention (encoder and decoder) carries learned relative-position
/// bias; cross-attention has none.
class PCModel {
 public:
  PCModel(const PCConfig& config, uint64_t seed);

  PCConfig cfg;
  nn::ParamStore params;

  // Graph builders shared by training, pretraining, and decoding.
  int encode_node(nn::Tape& t, const nn::Bound& bound, int input_node) const;
  int encode(nn::Tape& t, const nn::Bound& bound, const Mat& frames) const;
  /// Decoder logits for a BOS-prefixed token sequence: [len, vocab].
  int decode_node(nn::Tape& t, const nn::Bound& bound, int enc_node,
                  const std::vector<int>& input_tokens) const;
  /// Decoder-only (causal LM) logits; cross-attention blocks are skipped.
  int lm_node(nn::Tape& t, const nn::Bound& bound, const std::vector<int>& input_tokens) const;

  void save(const std::string& path, bool with_optimizer_state = false, int adam_steps = 0) const;
  static PCModel load(const std::string& path);
  static nn::Tensor mat_to_tensor(const Mat& m);

  struct EncLayer {
    nn::LayerNormParams ln1, ln2;
    nn::SelfAttentionParams attn;
    nn::LinearParams ff_in, ff_out;
  };
  struct DecLayer {
    nn::LayerNormParams ln1, ln2, ln3;
    nn::SelfAttentionParams self_attn;
    nn::CrossAttentionParams cross_attn;
    nn::LinearParams ff_in, ff_out;
  };

  nn::LinearParams in_proj;
  std::vector<EncLayer> enc_layers;
  nn::LayerNormParams enc_norm;
  int embed = -1;
  std::vector<DecLayer> dec_layers;
  nn::LayerNormParams dec_norm;
  nn::LinearParams head;
};

}  // namespace uac::pc
