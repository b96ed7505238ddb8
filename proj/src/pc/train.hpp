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
#include <vector>

#include "../augment.hpp"
#include "model.hpp"

namespace uac::pc {

struct TrainConfig {
  double peak_lr = 0.001;    // linear decay to zero over total_updates
  int total_updates = 5000;
  int micro_batch = 8;
  int grad_accum = 2;        // effective batch = micro_batch * grad_accum
  double clip_norm = 1.0;
  uint64_t seed = 1;
  int eval_interval = 250;
  int threads = 1;

  void validate() const;
};

struct TrainLogRecord {
  int update = 0;
  double loss = 0.0;  // mean token cross-entropy of the effective batch
  double lr = 0.0;
  double val_ppl = -1.0;  // < 0 when no evaluation ran at this update
};

struct TrainResult {
  double best_val_ppl = -1.0;
  int best_update = -1;
  double final_loss = 0.0;
  std::vector<TrainLogRecord> log;
};

/// Teacher-forced corpus NLL over target units plus EOS, full-vocabulary
/// softmax. Returns summed NLL; token_count receives the number of scored
/// tokens. Parallel over pairs with an order-independent reduction.
double teacher_forced_nll(const PCModel& model, const std::vector<ParallelPair>& pairs,
                          int threads, int64_t* token_count);

/// Corpus-pooled perplexity: exp(total NLL / total tokens).
double corpus_perplexity(const PCModel& model, const std::vector<ParallelPair>& pairs,
                         int threads = 1);

/// Teacher-forced training with gradient accumulation and a linear-decay
/// schedule. Evaluates on `val` every eval_interval updates and leaves the
/// best-validation parameters in the model (final parameters when `val` is
/// empty). Deterministic for a fixed seed, independent of thread count.
TrainResult train(PCModel& model, const std::vector<ParallelPair>& corpus,
                  const std::vector<ParallelPair>& val, const TrainConfig& cfg);

/// Causal unit language model over native unit sequences; trains the decoder
/// self-attention/FFN path, embedding and output head. Cross-attention stays
/// at its fresh initialization.
void pretrain_decoder_lm(PCModel& model, const std::vector<UnitSequence>& native_units,
                         const TrainConfig& cfg);

struct MaskConfig {
  double span_start_prob = 0.12;
  int span_len = 4;
};

/// Masked-frame pretraining: random frame spans are replaced by a learned
/// mask vector and a linear probe predicts the quantized unit of each masked
/// frame. The probe and mask vector are discarded afterwards.
void pretrain_encoder_masked(PCModel& model, const std::vector<FeatureSequence>& native_features,
                             const Codebook& codebook, const MaskConfig& mask_cfg,
                             const TrainConfig& cfg);

}  // namespace uac::pc
