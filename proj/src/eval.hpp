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

#include <map>
#include <string>
#include <vector>

#include "augment.hpp"
#include "pc/search.hpp"
#include "pc/train.hpp"
#include "u2s.hpp"

namespace uac::eval {

/// Corpus-pooled test perplexity: exp(total teacher-forced NLL over target
/// tokens including EOS, divided by total token count).
double perplexity(const pc::PCModel& model, const std::vector<ParallelPair>& pairs,
                  int threads = 1);

int levenshtein(const std::vector<int>& a, const std::vector<int>& b);

/// Edit distance (insert/delete/substitute, unit cost) over reference length.
double unit_error_rate(const UnitSequence& hyp, const UnitSequence& ref);

/// Maps hypothesis units to phonemes, collapses adjacent duplicates and
/// scores 1 - Levenshtein / |ref|, floored at zero. The reference is the
/// content sentence (fillers never appear in it).
double phoneme_recovery(const UnitSequence& hyp_units, const std::vector<int>& unit_to_phoneme,
                        const std::vector<int>& ref_phonemes);

/// Cosine between the speaker embeddings of two feature sequences. Both
/// embeddings zero -> 1; exactly one zero -> 0.
double speaker_similarity(const FeatureSequence& converted, const FeatureSequence& source,
                          const Codebook& codebook);

/// |hyp| / |ref| over reduced sequences; 1.0 means native-like length.
double fluency_ratio(const UnitSequence& hyp, const UnitSequence& ref);

struct MetricRow {
  int64_t pairs = 0;
  double ppl = 0.0;
  double uer = 0.0;
  double phoneme_accuracy = 0.0;
  double speaker_cosine = 0.0;
  double fluency_ratio = 0.0;
};

struct EvalReport {
  MetricRow overall;
  std::map<int, MetricRow> per_accent;
};

struct EvalItem {
  ParallelPair pair;
  std::vector<int> ref_phonemes;  // underlying content sentence
};

struct EvalOptions {
  int beam = 8;
  bool length_norm = false;
  double max_len_mult = 4.0;
  int threads = 1;
};

/// Beam-decodes every test pair and aggregates all metrics with a per-accent
/// breakdown. UER and phoneme recovery pool edit distances over token counts;
/// speaker cosine and fluency are means over pairs.
EvalReport run_eval(const pc::PCModel& model, const std::vector<EvalItem>& items,
                    const Codebook& codebook, const UnitDecoder& decoder,
                    const std::vector<int>& unit_to_phoneme, const EvalOptions& options);

/// Writes the human-readable table and the line-delimited machine variant.
void write_report(const EvalReport& report, const std::string& text_path,
                  const std::string& jsonl_path);

}  // namespace uac::eval
