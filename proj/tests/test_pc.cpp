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
#include <map>

#include "pc/search.hpp"
#include "pc/train.hpp"

using namespace uac;
using namespace uac::pc;

namespace {

PCConfig tiny_config(int units = 12, int feature_dim = 6) {
  PCConfig cfg;
  cfg.feature_dim = feature_dim;
  cfg.model_dim = 16;
  cfg.heads = 2;
  cfg.enc_layers = 1;
  cfg.dec_layers = 1;
  cfg.rel_window = 4;
  cfg.units = units;
  return cfg;
}

ParallelPair random_pair(int frames, int feature_dim, int target_len, int units, uint64_t seed) {
  ParallelPair p;
  Rng rng(seed);
  p.input.frames = Mat(frames, feature_dim);
  for (auto& v : p.input.frames.data) v = rng.normal();
  p.target.reduced = true;
  for (int i = 0; i < target_len; ++i) {
    int u;
    do {
      u = static_cast<int>(rng.uniform_int(0, units - 1));
    } while (!p.target.units.empty() && u == p.target.units.back());
    p.target.units.push_back(u);
  }
  p.meta.sentence_id = static_cast<int>(seed);
  return p;
}

/// Hand-built three-step distribution where the greedy path is suboptimal:
/// greedy takes token 0 (p=0.6) and finishes at 0.6*0.55 = 0.33, while the
/// runner-up prefix [1] finishes at 0.4*0.95 = 0.38.
class TrapScorer : public SequenceScorer {
 public:
  int vocab_size() const override { return 3; }  // tokens 0, 1; EOS = 2
  int eos_token() const override { return 2; }
  std::vector<double> next_logprobs(const std::vector<int>& prefix) override {
    if (prefix.empty()) return logp({0.6, 0.4, 1e-30});
    if (prefix == std::vector<int>{0}) return logp({0.25, 0.2, 0.55});
    if (prefix == std::vector<int>{1}) return logp({0.025, 0.025, 0.95});
    return logp({0.05, 0.05, 0.9});
  }
  static std::vector<double> logp(std::initializer_list<double> probs) {
    std::vector<double> out;
    for (double p : probs) out.push_back(std::log(p));
    return out;
  }
};

}  // namespace

TEST_CASE("model memorizes a single pair") {
  PCConfig cfg = tiny_config();
  PCModel model(cfg, 3);
  std::vector<ParallelPair> corpus{random_pair(15, cfg.feature_dim, 5, cfg.units, 1)};
  TrainConfig tc;
  tc.total_updates = 400;
  tc.micro_batch = 1;
  tc.grad_accum = 1;
  tc.eval_interval = 1000;
  tc.seed = 5;
  TrainResult r = train(model, corpus, {}, tc);
  CHECK(r.final_loss < 0.01);
  CHECK(model.cfg.median_target_len == 5);

  // Greedy decoding recovers the memorized target.
  PCScorer scorer(model, corpus[0].input.frames);
  Hypothesis hyp = decode_greedy(scorer, 32);
  CHECK(hyp.units.units == corpus[0].target.units);
  CHECK(hyp.finished);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  PCConfig cfg = tiny_config();
  PCModel model(cfg, 4);
  std::vector<std::vector<double>> before;
  for (int i = 0; i < model.params.count(); ++i) before.push_back(model.params.entry(i).value.data);
  std::vector<ParallelPair> corpus{random_pair(10, cfg.feature_dim, 4, cfg.units, 2)};
  TrainConfig tc;
  tc.peak_lr = 0.0;
  tc.total_updates = 5;
  tc.micro_batch = 1;
  tc.grad_accum = 1;
  tc.seed = 5;
  train(model, corpus, {}, tc);
  for (int i = 0; i < model.params.count(); ++i) {
    CHECK(model.params.entry(i).value.data == before[static_cast<size_t>(i)]);
  }
}

TEST_CASE("training is deterministic and thread-count independent") {
  PCConfig cfg = tiny_config();
  std::vector<ParallelPair> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back(random_pair(12, cfg.feature_dim, 4, cfg.units, 10 + i));
  auto run = [&](int threads) {
    PCModel model(cfg, 9);
    TrainConfig tc;
    tc.total_updates = 8;
    tc.micro_batch = 2;
    tc.grad_accum = 2;
    tc.seed = 3;
    tc.threads = threads;
    train(model, corpus, {}, tc);
    std::vector<double> flat;
    for (int i = 0; i < model.params.count(); ++i) {
      for (double v : model.params.entry(i).value.data) flat.push_back(v);
    }
    return flat;
  };
  CHECK(run(1) == run(2));
  CHECK(run(1) == run(4));
}

TEST_CASE("gradient accumulation equals one large micro batch") {
  PCConfig cfg = tiny_config();
  std::vector<ParallelPair> corpus;
  for (int i = 0; i < 4; ++i) corpus.push_back(random_pair(10, cfg.feature_dim, 4, cfg.units, 30 + i));
  auto run = [&](int micro, int accum) {
    PCModel model(cfg, 21);
    TrainConfig tc;
    tc.total_updates = 6;
    tc.micro_batch = micro;
    tc.grad_accum = accum;
    tc.seed = 3;
    train(model, corpus, {}, tc);
    std::vector<double> flat;
    for (int i = 0; i < model.params.count(); ++i) {
      for (double v : model.params.entry(i).value.data) flat.push_back(v);
    }
    return flat;
  };
  CHECK(run(4, 1) == run(2, 2));
  CHECK(run(4, 1) == run(1, 4));
}

TEST_CASE("training rejects corpus/model mismatches") {
  PCConfig cfg = tiny_config();
  PCModel model(cfg, 4);
  TrainConfig tc;
  CHECK_THROWS_AS(train(model, {}, {}, tc), ConfigError);
  ParallelPair bad = random_pair(10, cfg.feature_dim, 4, cfg.units, 3);
  bad.target.units[0] = cfg.units + 1;
  CHECK_THROWS_AS(train(model, {bad}, {}, tc), ConfigError);
  ParallelPair unreduced = random_pair(10, cfg.feature_dim, 4, cfg.units, 3);
  unreduced.target.reduced = false;
  CHECK_THROWS_AS(train(model, {unreduced}, {}, tc), DataError);
}

TEST_CASE("decoder logits are causal") {
  PCConfig cfg = tiny_config();
  PCModel model(cfg, 8);
  Mat frames(9, cfg.feature_dim);
  Rng rng(2);
  for (auto& v : frames.data) v = rng.normal();
  std::vector<int> tokens_a = {cfg.bos(), 1, 2, 3, 4};
  std::vector<int> tokens_b = {cfg.bos(), 1, 2, 9, 7};  // differs from position 3 on

  nn::Tape ta(false);
  nn::Bound ba = nn::bind_all(ta, model.params);
  int la = model.decode_node(ta, ba, model.encode(ta, ba, frames), tokens_a);
  nn::Tape tb(false);
  nn::Bound bb = nn::bind_all(tb, model.params);
  int lb = model.decode_node(tb, bb, model.encode(tb, bb, frames), tokens_b);

  for (int pos = 0; pos < 3; ++pos) {
    for (int v = 0; v < cfg.vocab(); ++v) {
      CHECK(ta.value(la).row(pos)[v] == tb.value(lb).row(pos)[v]);
    }
  }
  bool later_differs = false;
  for (int v = 0; v < cfg.vocab(); ++v) {
    later_differs |= (ta.value(la).row(3)[v] != tb.value(lb).row(3)[v]);
  }
  CHECK(later_differs);
}

TEST_CASE("greedy equals beam size one") {
  PCConfig cfg = tiny_config();
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    PCModel model(cfg, 100 + trial);  // random inits; decoding works untrained
    Mat frames(8, cfg.feature_dim);
    for (auto& v : frames.data) v = rng.normal();
    PCScorer g(model, frames);
    Hypothesis greedy = decode_greedy(g, 20);
    PCScorer b(model, frames);
    auto beam = beam_decode(b, 1, 20, false);
    REQUIRE(!beam.empty());
    CHECK(beam.front().units.units == greedy.units.units);
    CHECK(beam.front().finished == greedy.finished);
    CHECK(std::fabs(beam.front().score - greedy.score) < 1e-9);
  }
}

TEST_CASE("beam search finds the exhaustive optimum on the trap model") {
  TrapScorer scorer;
  Hypothesis greedy = decode_greedy(scorer, 3);
  CHECK(greedy.units.units == std::vector<int>{0});

  // Exhaustive enumeration over all sequences of length <= 3 (EOS-ended).
  double best_score = -1e300;
  std::vector<int> best_seq;
  std::vector<std::vector<int>> stack{{}};
  for (int len = 0; len <= 3; ++len) {
    std::vector<std::vector<int>> next;
    for (auto& prefix : stack) {
      TrapScorer s;
      double score = 0;
      bool valid = true;
      std::vector<int> built;
      for (int tok : prefix) {
        auto lp = s.next_logprobs(built);
        if (lp[tok] <= -1e29) {
          valid = false;
          break;
        }
        score += lp[tok];
        built.push_back(tok);
      }
      if (!valid) continue;
      auto lp = s.next_logprobs(built);
      double finished = score + lp[s.eos_token()];
      if (finished > best_score) {
        best_score = finished;
        best_seq = prefix;
      }
      if (len < 3) {
        for (int tok = 0; tok < 2; ++tok) {
          auto ext = prefix;
          ext.push_back(tok);
          next.push_back(ext);
        }
      }
    }
    stack = std::move(next);
  }

  auto beam = beam_decode(scorer, 2, 3, false);
  REQUIRE(!beam.empty());
  CHECK(beam.front().units.units == best_seq);
  CHECK(beam.front().score == doctest::Approx(best_score).epsilon(1e-12));
  CHECK(beam.front().score > greedy.score);
}

TEST_CASE("beam hypothesis scores match teacher-forced rescoring") {
  PCConfig cfg = tiny_config();
  PCModel model(cfg, 77);
  Mat frames(10, cfg.feature_dim);
  Rng rng(8);
  for (auto& v : frames.data) v = rng.normal();
  PCScorer scorer(model, frames);
  auto hyps = beam_decode(scorer, 4, 16, false);
  REQUIRE(!hyps.empty());
  for (const auto& h : hyps) {
    if (!h.finished) continue;
    double rescored = rescore(model, frames, h.units.units, true);
    CHECK(std::fabs(rescored - h.score) < 1e-9);
  }
}

TEST_CASE("beam validates its configuration") {
  TrapScorer scorer;
  CHECK_THROWS_AS(beam_decode(scorer, 0, 5, false), ConfigError);
  CHECK_THROWS_AS(decode_greedy(scorer, 0), ConfigError);
}

TEST_CASE("decoder LM pretraining trains only the decoder path") {
  PCConfig cfg = tiny_config();
  PCModel model(cfg, 12);
  std::map<std::string, std::vector<double>> before;
  for (int i = 0; i < model.params.count(); ++i) {
    before[model.params.entry(i).name] = model.params.entry(i).value.data;
  }
  std::vector<UnitSequence> units;
  Rng rng(9);
  for (int i = 0; i < 8; ++i) {
    UnitSequence u;
    u.reduced = true;
    for (int j = 0; j < 6; ++j) u.units.push_back(static_cast<int>(rng.uniform_int(0, cfg.units - 1)));
    units.push_back(reduce(u));
  }
  TrainConfig tc;
  tc.total_updates = 10;
  tc.micro_batch = 2;
  tc.grad_accum = 1;
  tc.seed = 4;
  pretrain_decoder_lm(model, units, tc);

  int changed = 0, cross_changed = 0, enc_changed = 0;
  for (int i = 0; i < model.params.count(); ++i) {
    const auto& e = model.params.entry(i);
    bool diff = e.value.data != before[e.name];
    changed += diff;
    if (e.name.find("cross_attn") != std::string::npos) cross_changed += diff;
    if (e.name.rfind("enc.", 0) == 0) enc_changed += diff;
  }
  CHECK(changed > 0);
  CHECK(cross_changed == 0);  // cross-attention stays at fresh initialization
  CHECK(enc_changed == 0);
}

TEST_CASE("masked encoder pretraining trains the encoder and drops its probe") {
  PCConfig cfg = tiny_config(8, 4);
  PCModel model(cfg, 13);
  int param_count = model.params.count();
  std::map<std::string, std::vector<double>> before;
  for (int i = 0; i < model.params.count(); ++i) {
    before[model.params.entry(i).name] = model.params.entry(i).value.data;
  }

  Codebook cb;
  cb.k = cfg.units;
  cb.dim = 4;
  cb.centroids = Mat(cb.k, 4);
  Rng rng(10);
  for (auto& v : cb.centroids.data) v = snap_f32(rng.normal() * 3);
  std::vector<FeatureSequence> feats(6);
  for (auto& f : feats) {
    f.frames = Mat(12, 4);
    for (auto& v : f.frames.data) v = rng.normal();
  }
  TrainConfig tc;
  tc.total_updates = 10;
  tc.micro_batch = 2;
  tc.grad_accum = 1;
  tc.seed = 4;
  pretrain_encoder_masked(model, feats, cb, MaskConfig{}, tc);

  CHECK(model.params.count() == param_count);  // probe and mask vector removed
  int enc_changed = 0, dec_changed = 0;
  for (int i = 0; i < model.params.count(); ++i) {
    const auto& e = model.params.entry(i);
    bool diff = e.value.data != before[e.name];
    if (e.name.rfind("enc.", 0) == 0) enc_changed += diff;
    if (e.name.rfind("dec.", 0) == 0 || e.name.rfind("head", 0) == 0) dec_changed += diff;
  }
  CHECK(enc_changed > 0);
  CHECK(dec_changed == 0);
}

TEST_CASE("model checkpoints reproduce logits bitwise") {
  PCConfig cfg = tiny_config();
  PCModel model(cfg, 55);
  model.cfg.median_target_len = 7;
  std::string path =
      (std::filesystem::temp_directory_path() / "unitac_test_pc.ckpt").string();
  model.save(path);
  PCModel back = PCModel::load(path);
  CHECK(back.cfg.median_target_len == 7);
  CHECK(back.cfg.units == cfg.units);

  Mat frames(7, cfg.feature_dim);
  Rng rng(3);
  for (auto& v : frames.data) v = rng.normal();
  std::vector<int> tokens = {cfg.bos(), 3, 1};
  nn::Tape ta(false);
  nn::Bound ba = nn::bind_all(ta, model.params);
  int la = model.decode_node(ta, ba, model.encode(ta, ba, frames), tokens);
  nn::Tape tb(false);
  nn::Bound bb = nn::bind_all(tb, back.params);
  int lb = back.decode_node(tb, bb, back.encode(tb, bb, frames), tokens);
  CHECK(ta.value(la).data == tb.value(lb).data);
  std::remove(path.c_str());
}

TEST_CASE("default decode length cap") {
  PCConfig cfg = tiny_config();
  cfg.median_target_len = 0;
  CHECK(default_max_len(cfg) == 64);
  cfg.median_target_len = 10;
  CHECK(default_max_len(cfg) == 40);
  CHECK(default_max_len(cfg, 2.0) == 20);
}
