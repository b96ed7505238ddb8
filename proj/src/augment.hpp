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

#include "s2u.hpp"
#include "synth.hpp"

namespace uac {

enum class Strategy { NonOverlapped, Overlapped };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct AugmentStrategySpec {
  Strategy kind = Strategy::NonOverlapped;
  int accents_per_sentence = 6;  // Overlapped only; must equal the accent list size
};

struct PairMeta {
  int sentence_id = -1;
  int accent_id = -1;
  int speaker_id = -1;
  uint64_t seed = 0;
};

/// One training example: accented rendering paired with the native reduced
/// unit sequence of the same sentence.
struct ParallelPair {
  FeatureSequence input;
  UnitSequence target;  // reduced
  PairMeta meta;
};

struct NoiseRanges {
  double sigma_min = 0.02;
  double sigma_max = 0.10;
  double duration_noise_min = 0.0;
  double duration_noise_max = 0.2;
};

/// Materializes a parallel corpus of exactly `budget` pairs.
/// NonOverlapped: `budget` distinct sentences, one random (accent, speaker)
/// each. Overlapped: budget / accents_per_sentence distinct sentences, one
/// pair per (sentence, accent) over the full accent list with independently
/// random speakers. Native targets are computed once per sentence and shared.
/// Per-pair noise scales are drawn from `noise`. Output order is a seeded
/// shuffle, independent of scheduling.
std::vector<ParallelPair> build_parallel_corpus(const std::vector<Sentence>& sentences,
                                                const AugmentStrategySpec& strategy,
                                                const std::vector<AccentSpec>& accents,
                                                const std::vector<SpeakerSpec>& speakers,
                                                int budget, const Renderer& renderer,
                                                const Codebook& codebook,
                                                const NoiseRanges& noise, uint64_t seed,
                                                int threads = 1);

struct CorpusStats {
  int64_t pairs = 0;
  int64_t unique_sentences = 0;
  std::vector<std::pair<int, int64_t>> pairs_per_accent;  // accent id -> count
  int target_len_min = 0, target_len_median = 0, target_len_max = 0;
  int input_len_min = 0, input_len_median = 0, input_len_max = 0;
};

CorpusStats corpus_stats(const std::vector<ParallelPair>& pairs);

/// Corpus directory: manifest.txt (sentences), targets.units (one line per
/// unique sentence), features/<pair>.feat, index.txt mapping pair id to
/// input path, target line and metadata, meta.json with build parameters.
void write_corpus(const std::vector<ParallelPair>& pairs, const std::vector<Sentence>& sentences,
                  const std::string& dir, const std::string& meta_json = "{}");
std::vector<ParallelPair> read_corpus(const std::string& dir);
Manifest read_corpus_manifest(const std::string& dir);
std::string read_corpus_meta(const std::string& dir);

}  // namespace uac
