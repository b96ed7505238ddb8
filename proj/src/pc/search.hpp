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

#include <vector>

#include "../s2u.hpp"
#include "model.hpp"

namespace uac::pc {

struct Hypothesis {
  UnitSequence units;       // generated tokens, EOS excluded
  double score = 0.0;       // sum of token log-probs, EOS included when finished
  double normalized_score = 0.0;  // score / scored token count
  bool finished = false;    // ended with EOS rather than the length cap
};

/// Next-token distribution abstraction decoded against by greedy/beam search.
/// The prefix holds generated tokens only (no BOS).
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual int vocab_size() const = 0;
  virtual int eos_token() const = 0;
  virtual std::vector<double> next_logprobs(const std::vector<int>& prefix) = 0;
};

Hypothesis decode_greedy(SequenceScorer& scorer, int max_len);

/// Breadth-limited best-first search. Finished hypotheses occupy beam slots
/// permanently; in raw-score mode the search stops once the best live score
/// cannot beat the best finished one (token log-probs are never positive).
/// Length-normalized mode ranks by score/length and runs until the beam
/// drains or max_len.
std::vector<Hypothesis> beam_decode(SequenceScorer& scorer, int beam_size, int max_len,
                                    bool length_norm = false);

/// Scores the PC's next-unit distribution for one utterance. The encoder runs
/// once at construction. BOS and PAD are masked out of the distribution so
/// free decoding can only emit units or EOS.
class PCScorer : public SequenceScorer {
 public:
  PCScorer(const PCModel& model, const Mat& frames);

  int vocab_size() const override { return model_.cfg.vocab(); }
  int eos_token() const override { return model_.cfg.eos(); }
  std::vector<double> next_logprobs(const std::vector<int>& prefix) override;

 private:
  const PCModel& model_;
  nn::Tensor enc_out_;
};

/// Teacher-forced log-probability of `units` + EOS under the same masked
/// distribution used for decoding; reproduces beam/greedy hypothesis scores.
double rescore(const PCModel& model, const Mat& frames, const std::vector<int>& units,
               bool include_eos = true);

/// Decode length cap: max(8, mult * median target length); falls back to 64
/// when the model carries no corpus statistic.
int default_max_len(const PCConfig& cfg, double mult = 4.0);

}  // namespace uac::pc
