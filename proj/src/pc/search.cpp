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

#include "search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace uac::pc {

namespace {

constexpr double kMasked = -1e30;

void finalize(Hypothesis& h) {
  size_t scored = h.units.units.size() + (h.finished ? 1 : 0);
  h.normalized_score = h.score / static_cast<double>(std::max<size_t>(1, scored));
  h.units.reduced = true;
  for (size_t i = 1; i < h.units.units.size(); ++i) {
    if (h.units.units[i] == h.units.units[i - 1]) {
      h.units.reduced = false;  // duplicates are legal raw output, just flagged
      break;
    }
  }
}

double criterion(const Hypothesis& h, bool length_norm) {
  return length_norm ? h.normalized_score : h.score;
}

}  // namespace

Hypothesis decode_greedy(SequenceScorer& scorer, int max_len) {
  if (max_len < 1) throw ConfigError("decode: max_len must be >= 1");
  Hypothesis h;
  for (int step = 0; step < max_len; ++step) {
    std::vector<double> lp = scorer.next_logprobs(h.units.units);
    int best = 0;
    for (int v = 1; v < static_cast<int>(lp.size()); ++v) {
      if (lp[static_cast<size_t>(v)] > lp[static_cast<size_t>(best)]) best = v;
    }
    h.score += lp[static_cast<size_t>(best)];
    if (best == scorer.eos_token()) {
      h.finished = true;
      break;
    }
    h.units.units.push_back(best);
  }
  finalize(h);
  return h;
}

std::vector<Hypothesis> beam_decode(SequenceScorer& scorer, int beam_size, int max_len,
                                    bool length_norm) {
  if (beam_size < 1) throw ConfigError("beam_decode: beam size must be >= 1");
  if (max_len < 1) throw ConfigError("beam_decode: max_len must be >= 1");

  struct Live {
    std::vector<int> tokens;
    double score = 0.0;
  };
  std::vector<Live> live(1);
  std::vector<Hypothesis> pool;
  const int eos = scorer.eos_token();

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    struct Candidate {
      int parent;
      int token;
      double score;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(live.size() * static_cast<size_t>(scorer.vocab_size()));
    for (int i = 0; i < static_cast<int>(live.size()); ++i) {
      std::vector<double> lp = scorer.next_logprobs(live[static_cast<size_t>(i)].tokens);
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        double s = lp[static_cast<size_t>(v)];
        if (s <= kMasked / 2) continue;  // masked token
        candidates.push_back(Candidate{i, v, live[static_cast<size_t>(i)].score + s});
      }
    }
    size_t width = static_cast<size_t>(beam_size) - pool.size();
    width = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(width),
                      candidates.end(), [](const Candidate& a, const Candidate& b) {
                        if (a.score != b.score) return a.score > b.score;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });

    std::vector<Live> next;
    next.reserve(width);
    for (size_t c = 0; c < width; ++c) {
      const Candidate& cand = candidates[c];
      if (cand.token == eos) {
        Hypothesis h;
        h.units.units = live[static_cast<size_t>(cand.parent)].tokens;
        h.score = cand.score;
        h.finished = true;
        finalize(h);
        pool.push_back(std::move(h));
      } else {
        Live nl;
        nl.tokens = live[static_cast<size_t>(cand.parent)].tokens;
        nl.tokens.push_back(cand.token);
        nl.score = cand.score;
        next.push_back(std::move(nl));
      }
    }
    live = std::move(next);

    if (!length_norm && !pool.empty() && !live.empty()) {
      double best_pool = pool[0].score;
      for (const auto& h : pool) best_pool = std::max(best_pool, h.score);
      double best_live = live[0].score;
      for (const auto& l : live) best_live = std::max(best_live, l.score);
      // Raw scores only decrease with length, so nothing live can pass the
      // pool's best any more.
      if (best_live <= best_pool) break;
    }
  }

  // Length cap reached: surviving prefixes retire unfinished.
  for (auto& l : live) {
    Hypothesis h;
    h.units.units = std::move(l.tokens);
    h.score = l.score;
    h.finished = false;
    finalize(h);
    pool.push_back(std::move(h));
  }

  std::stable_sort(pool.begin(), pool.end(), [length_norm](const Hypothesis& a, const Hypothesis& b) {
    return criterion(a, length_norm) > criterion(b, length_norm);
  });
  return pool;
}

PCScorer::PCScorer(const PCModel& model, const Mat& frames) : model_(model) {
  nn::Tape tape(/*grad_enabled=*/false);
  nn::Bound bound = nn::bind_all(tape, model_.params);
  int enc = model_.encode(tape, bound, frames);
  enc_out_ = tape.value(enc);
}

std::vector<double> PCScorer::next_logprobs(const std::vector<int>& prefix) {
  nn::Tape tape(/*grad_enabled=*/false);
  nn::Bound bound = nn::bind_all(tape, model_.params);
  int enc = tape.external(&enc_out_, /*requires_grad=*/false);
  std::vector<int> input;
  input.reserve(prefix.size() + 1);
  input.push_back(model_.cfg.bos());
  input.insert(input.end(), prefix.begin(), prefix.end());
  int logits = model_.decode_node(tape, bound, enc, input);
  const nn::Tensor& lv = tape.value(logits);
  const double* row = lv.row(lv.rows() - 1);
  int vocab = model_.cfg.vocab();

  std::vector<double> lp(static_cast<size_t>(vocab));
  double mx = -std::numeric_limits<double>::infinity();
  for (int v = 0; v < vocab; ++v) {
    double x = (v == model_.cfg.bos() || v == model_.cfg.pad()) ? kMasked : row[v];
    lp[static_cast<size_t>(v)] = x;
    mx = std::max(mx, x);
  }
  double denom = 0.0;
  for (int v = 0; v < vocab; ++v) denom += std::exp(lp[static_cast<size_t>(v)] - mx);
  double lse = mx + std::log(denom);
  for (int v = 0; v < vocab; ++v) {
    if (lp[static_cast<size_t>(v)] <= kMasked / 2) continue;  // keep masked tokens at -1e30
    lp[static_cast<size_t>(v)] -= lse;
  }
  return lp;
}

double rescore(const PCModel& model, const Mat& frames, const std::vector<int>& units,
               bool include_eos) {
  PCScorer scorer(model, frames);
  std::vector<int> prefix;
  prefix.reserve(units.size());
  double total = 0.0;
  for (int u : units) {
    std::vector<double> lp = scorer.next_logprobs(prefix);
    if (u < 0 || u >= model.cfg.vocab()) throw DataError("rescore: token out of range");
    total += lp[static_cast<size_t>(u)];
    prefix.push_back(u);
  }
  if (include_eos) {
    std::vector<double> lp = scorer.next_logprobs(prefix);
    total += lp[static_cast<size_t>(model.cfg.eos())];
  }
  return total;
}

int default_max_len(const PCConfig& cfg, double mult) {
  if (cfg.median_target_len <= 0) return 64;
  int cap = static_cast<int>(std::llround(mult * cfg.median_target_len));
  return std::max(8, cap);
}

}  // namespace uac::pc
