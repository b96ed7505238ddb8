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

#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace uac::pc {

void TrainConfig::validate() const {
  if (peak_lr < 0) throw ConfigError("peak_lr must be >= 0");
  if (total_updates < 1) throw ConfigError("total_updates must be >= 1");
  if (micro_batch < 1 || grad_accum < 1) throw ConfigError("batch sizes must be >= 1");
  if (eval_interval < 1) throw ConfigError("eval_interval must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

namespace {

// Builds one example's loss graph; returns (loss node, token count).
using ExampleLoss =
    std::function<std::pair<int, int64_t>(nn::Tape&, const nn::Bound&, int example_idx,
                                          uint64_t draw_seed)>;
using UpdateHook = std::function<void(int update, double mean_loss, double lr)>;

// Shared optimization loop. Per-example gradients are computed in parallel
// and reduced in slot order, so results do not depend on the thread count.
double run_updates(nn::ParamStore& params, int n_examples, const ExampleLoss& loss_fn,
                   const TrainConfig& cfg, const UpdateHook& hook) {
  cfg.validate();
  if (n_examples < 1) throw ConfigError("training needs at least one example");

  nn::Adam adam;
  adam.reset(params);

  std::vector<int> order(static_cast<size_t>(n_examples));
  for (int i = 0; i < n_examples; ++i) order[static_cast<size_t>(i)] = i;
  size_t pos = order.size();  // force a shuffle on first use
  uint64_t epoch = 0;

  const int batch_n = cfg.micro_batch * cfg.grad_accum;
  std::vector<int> batch(static_cast<size_t>(batch_n));
  std::vector<std::unique_ptr<nn::Tape>> tapes(static_cast<size_t>(batch_n));
  std::vector<nn::Bound> bounds(static_cast<size_t>(batch_n));
  std::vector<double> losses(static_cast<size_t>(batch_n));
  std::vector<int64_t> tokens(static_cast<size_t>(batch_n));
  std::vector<nn::Tensor> grads(static_cast<size_t>(params.count()));

  double mean_loss = 0.0;
  for (int update = 0; update < cfg.total_updates; ++update) {
    for (int s = 0; s < batch_n; ++s) {
      if (pos >= order.size()) {
        Rng shuffle_rng(derive_seed(cfg.seed, {0x0d5e, epoch}));
        shuffle_rng.shuffle(order);
        pos = 0;
        ++epoch;
      }
      batch[static_cast<size_t>(s)] = order[pos++];
    }

    parallel_for(batch_n, cfg.threads, [&](int64_t begin, int64_t end) {
      for (int64_t s = begin; s < end; ++s) {
        auto& tape = tapes[static_cast<size_t>(s)];
        tape = std::make_unique<nn::Tape>(/*grad_enabled=*/true);
        bounds[static_cast<size_t>(s)] = nn::bind_all(*tape, params);
        uint64_t draw = derive_seed(cfg.seed, {0xd4aa, static_cast<uint64_t>(update),
                                               static_cast<uint64_t>(s)});
        auto [loss_node, n_tokens] =
            loss_fn(*tape, bounds[static_cast<size_t>(s)], batch[static_cast<size_t>(s)], draw);
        tape->backward(loss_node);
        losses[static_cast<size_t>(s)] = tape->scalar_value(loss_node);
        tokens[static_cast<size_t>(s)] = n_tokens;
      }
    });

    int64_t total_tokens = 0;
    double total_loss = 0.0;
    for (int s = 0; s < batch_n; ++s) {
      total_tokens += tokens[static_cast<size_t>(s)];
      total_loss += losses[static_cast<size_t>(s)];
    }
    if (total_tokens < 1) throw DataError("batch produced no target tokens");
    mean_loss = total_loss / static_cast<double>(total_tokens);
    if (!std::isfinite(mean_loss)) {
      throw NumericError("training diverged: non-finite loss at update " +
                         std::to_string(update));
    }

    for (auto& g : grads) {
      std::fill(g.data.begin(), g.data.end(), 0.0);
    }
    for (int s = 0; s < batch_n; ++s) {
      nn::Tape& tape = *tapes[static_cast<size_t>(s)];
      const nn::Bound& bound = bounds[static_cast<size_t>(s)];
      for (int pid = 0; pid < params.count(); ++pid) {
        if (!tape.has_grad(bound[pid])) continue;
        const nn::Tensor& g = tape.grad(bound[pid]);
        nn::Tensor& acc = grads[static_cast<size_t>(pid)];
        if (acc.data.empty()) acc = nn::Tensor(g.shape);
        for (size_t j = 0; j < g.data.size(); ++j) acc.data[j] += g.data[j];
      }
    }
    double inv_tokens = 1.0 / static_cast<double>(total_tokens);
    for (auto& g : grads) {
      for (double& v : g.data) v *= inv_tokens;
    }

    double lr = cfg.peak_lr *
                (1.0 - static_cast<double>(update) / static_cast<double>(cfg.total_updates));
    adam.step(params, grads, lr, cfg.clip_norm);
    for (auto& t : tapes) t.reset();

    if (hook) hook(update, mean_loss, lr);
  }
  return mean_loss;
}

std::pair<int, int64_t> pair_loss(const PCModel& model, nn::Tape& tape, const nn::Bound& bound,
                                  const ParallelPair& pair) {
  const auto& target = pair.target.units;
  if (target.empty()) throw DataError("training pair with empty target");
  int enc = model.encode(tape, bound, pair.input.frames);
  std::vector<int> input_tokens;
  input_tokens.reserve(target.size() + 1);
  input_tokens.push_back(model.cfg.bos());
  input_tokens.insert(input_tokens.end(), target.begin(), target.end());
  std::vector<int> ce_targets(target.begin(), target.end());
  ce_targets.push_back(model.cfg.eos());
  int logits = model.decode_node(tape, bound, enc, input_tokens);
  int loss = tape.cross_entropy_sum(logits, std::move(ce_targets));
  return {loss, static_cast<int64_t>(target.size()) + 1};
}

void check_corpus(const PCModel& model, const std::vector<ParallelPair>& corpus) {
  if (corpus.empty()) throw ConfigError("training corpus is empty");
  for (const auto& p : corpus) {
    if (!p.target.reduced) throw DataError("training targets must be reduced unit sequences");
    for (int u : p.target.units) {
      if (u < 0 || u >= model.cfg.units) {
        throw ConfigError("target unit id " + std::to_string(u) +
                          " outside the model vocabulary; K mismatch");
      }
    }
    if (p.input.dim() != model.cfg.feature_dim) {
      throw ConfigError("pair feature dim does not match the model");
    }
  }
}

}  // namespace

double teacher_forced_nll(const PCModel& model, const std::vector<ParallelPair>& pairs,
                          int threads, int64_t* token_count) {
  if (pairs.empty()) throw DataError("perplexity over an empty pair list");
  std::vector<double> nll(pairs.size());
  std::vector<int64_t> toks(pairs.size());
  parallel_for(static_cast<int64_t>(pairs.size()), threads, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      nn::Tape tape(/*grad_enabled=*/false);
      nn::Bound bound = nn::bind_all(tape, model.params);
      auto [loss, n] = pair_loss(model, tape, bound, pairs[static_cast<size_t>(i)]);
      nll[static_cast<size_t>(i)] = tape.scalar_value(loss);
      toks[static_cast<size_t>(i)] = n;
    }
  });
  double total = 0.0;
  int64_t total_tokens = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    total += nll[i];
    total_tokens += toks[i];
  }
  if (token_count) *token_count = total_tokens;
  return total;
}

double corpus_perplexity(const PCModel& model, const std::vector<ParallelPair>& pairs,
                         int threads) {
  int64_t tokens = 0;
  double nll = teacher_forced_nll(model, pairs, threads, &tokens);
  return std::exp(nll / static_cast<double>(tokens));
}

TrainResult train(PCModel& model, const std::vector<ParallelPair>& corpus,
                  const std::vector<ParallelPair>& val, const TrainConfig& cfg) {
  check_corpus(model, corpus);

  // Corpus statistic used to bound decode length later.
  {
    std::vector<int> lens;
    lens.reserve(corpus.size());
    for (const auto& p : corpus) lens.push_back(static_cast<int>(p.target.units.size()));
    std::sort(lens.begin(), lens.end());
    model.cfg.median_target_len = lens[(lens.size() - 1) / 2];
  }

  TrainResult result;
  std::vector<nn::Tensor> best_values;
  auto snapshot = [&]() {
    best_values.clear();
    best_values.reserve(static_cast<size_t>(model.params.count()));
    for (int i = 0; i < model.params.count(); ++i) {
      best_values.push_back(model.params.entry(i).value);
    }
  };

  auto hook = [&](int update, double mean_loss, double lr) {
    TrainLogRecord rec;
    rec.update = update + 1;
    rec.loss = mean_loss;
    rec.lr = lr;
    bool eval_now =
        !val.empty() && ((update + 1) % cfg.eval_interval == 0 || update + 1 == cfg.total_updates);
    if (eval_now) {
      rec.val_ppl = corpus_perplexity(model, val, cfg.threads);
      if (result.best_update < 0 || rec.val_ppl < result.best_val_ppl) {
        result.best_val_ppl = rec.val_ppl;
        result.best_update = update + 1;
        snapshot();
      }
    }
    result.log.push_back(rec);
  };

  result.final_loss = run_updates(
      model.params, static_cast<int>(corpus.size()),
      [&](nn::Tape& tape, const nn::Bound& bound, int idx, uint64_t) {
        return pair_loss(model, tape, bound, corpus[static_cast<size_t>(idx)]);
      },
      cfg, hook);

  // Leave the best-validation weights in the model.
  if (!best_values.empty()) {
    for (int i = 0; i < model.params.count(); ++i) {
      model.params.entry(i).value = best_values[static_cast<size_t>(i)];
    }
  }
  return result;
}

void pretrain_decoder_lm(PCModel& model, const std::vector<UnitSequence>& native_units,
                         const TrainConfig& cfg) {
  if (native_units.empty()) throw ConfigError("decoder pretraining corpus is empty");
  for (const auto& seq : native_units) {
    if (seq.units.empty()) throw DataError("decoder pretraining sequence is empty");
    for (int u : seq.units) {
      if (u < 0 || u >= model.cfg.units) throw ConfigError("pretraining unit outside vocabulary");
    }
  }
  run_updates(
      model.params, static_cast<int>(native_units.size()),
      [&](nn::Tape& tape, const nn::Bound& bound, int idx, uint64_t) {
        const auto& units = native_units[static_cast<size_t>(idx)].units;
        std::vector<int> input_tokens;
        input_tokens.reserve(units.size() + 1);
        input_tokens.push_back(model.cfg.bos());
        input_tokens.insert(input_tokens.end(), units.begin(), units.end());
        std::vector<int> targets(units.begin(), units.end());
        targets.push_back(model.cfg.eos());
        int logits = model.lm_node(tape, bound, input_tokens);
        int loss = tape.cross_entropy_sum(logits, std::move(targets));
        return std::pair<int, int64_t>{loss, static_cast<int64_t>(units.size()) + 1};
      },
      cfg, nullptr);
}

void pretrain_encoder_masked(PCModel& model, const std::vector<FeatureSequence>& native_features,
                             const Codebook& codebook, const MaskConfig& mask_cfg,
                             const TrainConfig& cfg) {
  if (native_features.empty()) throw ConfigError("encoder pretraining corpus is empty");
  if (mask_cfg.span_len < 1 || mask_cfg.span_start_prob <= 0 || mask_cfg.span_start_prob > 1) {
    throw ConfigError("invalid mask configuration");
  }
  if (codebook.dim != model.cfg.feature_dim) throw ConfigError("codebook dim mismatch");

  // Frame-level unit targets are fixed per example.
  std::vector<std::vector<int>> frame_units(native_features.size());
  for (size_t i = 0; i < native_features.size(); ++i) {
    frame_units[i] = quantize(native_features[i].frames, codebook).units;
  }

  const int original_params = model.params.count();
  Rng init_rng(derive_seed(cfg.seed, {0xe9c0}));
  int mask_vec = model.params.add(
      "pretrain.mask_vec", nn::normal_init({model.cfg.feature_dim}, 0.02, init_rng));
  nn::LinearParams probe =
      nn::make_linear(model.params, "pretrain.probe", model.cfg.model_dim, codebook.k, init_rng);

  run_updates(
      model.params, static_cast<int>(native_features.size()),
      [&](nn::Tape& tape, const nn::Bound& bound, int idx, uint64_t draw_seed) {
        const FeatureSequence& feats = native_features[static_cast<size_t>(idx)];
        const int frames = feats.length();
        Rng mask_rng(draw_seed);
        std::vector<char> mask(static_cast<size_t>(frames), 0);
        for (int t = 0; t < frames; ++t) {
          if (mask_rng.uniform() < mask_cfg.span_start_prob) {
            for (int s = t; s < std::min(frames, t + mask_cfg.span_len); ++s) {
              mask[static_cast<size_t>(s)] = 1;
            }
          }
        }
        std::vector<int> positions;
        for (int t = 0; t < frames; ++t) {
          if (mask[static_cast<size_t>(t)]) positions.push_back(t);
        }
        if (positions.empty()) {
          int forced = static_cast<int>(mask_rng.uniform_int(0, frames - 1));
          mask[static_cast<size_t>(forced)] = 1;
          positions.push_back(forced);
        }
        std::vector<int> targets;
        targets.reserve(positions.size());
        for (int t : positions) {
          targets.push_back(frame_units[static_cast<size_t>(idx)][static_cast<size_t>(t)]);
        }

        int input = tape.input(PCModel::mat_to_tensor(feats.frames));
        int masked = tape.replace_rows(input, std::move(mask), bound[mask_vec]);
        int enc = model.encode_node(tape, bound, masked);
        int picked = tape.gather_rows(enc, std::move(positions));
        int logits = nn::linear(tape, bound, probe, picked);
        int64_t n_tokens = static_cast<int64_t>(targets.size());
        int loss = tape.cross_entropy_sum(logits, std::move(targets));
        return std::pair<int, int64_t>{loss, n_tokens};
      },
      cfg, nullptr);

  model.params.truncate(original_params);
}

}  // namespace uac::pc
