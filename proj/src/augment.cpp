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

#include "augment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace uac {

namespace fs = std::filesystem;

const char* strategy_name(Strategy s) {
  return s == Strategy::Overlapped ? "overlapped" : "non-overlapped";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "overlapped") return Strategy::Overlapped;
  if (name == "non-overlapped" || name == "nonoverlapped" || name == "non_overlapped") {
    return Strategy::NonOverlapped;
  }
  throw ConfigError("unknown augmentation strategy '" + name + "'");
}

std::vector<ParallelPair> build_parallel_corpus(const std::vector<Sentence>& sentences,
                                                const AugmentStrategySpec& strategy,
                                                const std::vector<AccentSpec>& accents,
                                                const std::vector<SpeakerSpec>& speakers,
                                                int budget, const Renderer& renderer,
                                                const Codebook& codebook,
                                                const NoiseRanges& noise, uint64_t seed,
                                                int threads) {
  if (budget < 1) throw ConfigError("corpus budget must be >= 1");
  if (accents.empty()) throw ConfigError("need at least one accent");
  if (speakers.empty()) throw ConfigError("need at least one speaker");
  if (noise.sigma_min < 0 || noise.sigma_max < noise.sigma_min ||
      noise.duration_noise_min < 0 || noise.duration_noise_max < noise.duration_noise_min) {
    throw ConfigError("invalid noise ranges");
  }

  int sentences_needed;
  int per_sentence;
  if (strategy.kind == Strategy::Overlapped) {
    per_sentence = strategy.accents_per_sentence;
    if (per_sentence < 1) throw ConfigError("accents_per_sentence must be >= 1");
    if (per_sentence != static_cast<int>(accents.size())) {
      throw ConfigError("overlapped strategy must pair every sentence with every listed accent");
    }
    if (budget % per_sentence != 0) {
      throw ConfigError("budget must be divisible by accents_per_sentence");
    }
    sentences_needed = budget / per_sentence;
  } else {
    per_sentence = 1;
    sentences_needed = budget;
  }
  if (static_cast<int>(sentences.size()) < sentences_needed) {
    throw ConfigError("not enough sentences for the requested budget: need " +
                      std::to_string(sentences_needed) + ", have " +
                      std::to_string(sentences.size()));
  }

  // Draw every stochastic choice up front in a fixed order so rendering can
  // run in parallel without affecting the result.
  struct PairPlan {
    int sentence_idx;
    int accent_idx;
    int speaker_idx;
    double sigma;
    double duration_noise;
    uint64_t seed;
  };
  Rng rng(derive_seed(seed, {0xa06e}));
  std::vector<PairPlan> plan;
  plan.reserve(static_cast<size_t>(budget));
  for (int s = 0; s < sentences_needed; ++s) {
    for (int a = 0; a < per_sentence; ++a) {
      PairPlan p;
      p.sentence_idx = s;
      p.accent_idx = strategy.kind == Strategy::Overlapped
                         ? a
                         : static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(accents.size()) - 1));
      p.speaker_idx = static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(speakers.size()) - 1));
      p.sigma = rng.uniform(noise.sigma_min, noise.sigma_max);
      p.duration_noise = rng.uniform(noise.duration_noise_min, noise.duration_noise_max);
      p.seed = rng.next_u64();
      plan.push_back(p);
    }
  }

  // Native targets, one per distinct sentence.
  std::vector<UnitSequence> targets(static_cast<size_t>(sentences_needed));
  parallel_for(sentences_needed, threads, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      FeatureSequence native = renderer.native_render(sentences[static_cast<size_t>(i)]);
      targets[static_cast<size_t>(i)] = reduce(quantize(native, codebook));
    }
  });

  std::vector<ParallelPair> pairs(plan.size());
  parallel_for(static_cast<int64_t>(plan.size()), threads, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      const PairPlan& p = plan[static_cast<size_t>(i)];
      const Sentence& sent = sentences[static_cast<size_t>(p.sentence_idx)];
      const AccentSpec& accent = accents[static_cast<size_t>(p.accent_idx)];
      const SpeakerSpec& speaker = speakers[static_cast<size_t>(p.speaker_idx)];
      ParallelPair pair;
      pair.input = renderer.render_with_noise(sent, speaker, accent, p.sigma, p.duration_noise,
                                              p.seed);
      pair.target = targets[static_cast<size_t>(p.sentence_idx)];
      pair.meta = PairMeta{sent.id, accent.id, speaker.id, p.seed};
      pairs[static_cast<size_t>(i)] = std::move(pair);
    }
  });

  // Deterministic shuffle decorrelates sentence order from batching.
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(seed, {0x5f1e}));
  shuffle_rng.shuffle(order);
  std::vector<ParallelPair> out;
  out.reserve(pairs.size());
  for (size_t i : order) out.push_back(std::move(pairs[i]));
  return out;
}

namespace {
int median_of(std::vector<int>& v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}
}  // namespace

CorpusStats corpus_stats(const std::vector<ParallelPair>& pairs) {
  CorpusStats st;
  st.pairs = static_cast<int64_t>(pairs.size());
  std::map<int, int64_t> per_accent;
  std::unordered_map<int, char> seen_sentences;
  std::vector<int> target_lens, input_lens;
  for (const auto& p : pairs) {
    ++per_accent[p.meta.accent_id];
    seen_sentences[p.meta.sentence_id] = 1;
    target_lens.push_back(static_cast<int>(p.target.units.size()));
    input_lens.push_back(p.input.length());
  }
  st.unique_sentences = static_cast<int64_t>(seen_sentences.size());
  st.pairs_per_accent.assign(per_accent.begin(), per_accent.end());
  if (!target_lens.empty()) {
    st.target_len_min = *std::min_element(target_lens.begin(), target_lens.end());
    st.target_len_max = *std::max_element(target_lens.begin(), target_lens.end());
    st.target_len_median = median_of(target_lens);
    st.input_len_min = *std::min_element(input_lens.begin(), input_lens.end());
    st.input_len_max = *std::max_element(input_lens.begin(), input_lens.end());
    st.input_len_median = median_of(input_lens);
  }
  return st;
}

void write_corpus(const std::vector<ParallelPair>& pairs, const std::vector<Sentence>& sentences,
                  const std::string& dir, const std::string& meta_json) {
  if (pairs.empty()) throw DataError("refusing to write an empty corpus");
  fs::create_directories(fs::path(dir) / "features");

  // Sentences referenced by the pairs, with targets one line per sentence.
  std::unordered_map<int, const Sentence*> by_id;
  for (const auto& s : sentences) by_id[s.id] = &s;
  std::vector<int> sentence_order;
  std::unordered_map<int, int> target_line;
  for (const auto& p : pairs) {
    if (!target_line.count(p.meta.sentence_id)) {
      if (!by_id.count(p.meta.sentence_id)) {
        throw DataError("corpus pair references unknown sentence id " +
                        std::to_string(p.meta.sentence_id));
      }
      target_line[p.meta.sentence_id] = static_cast<int>(sentence_order.size());
      sentence_order.push_back(p.meta.sentence_id);
    }
  }

  Manifest manifest;
  for (int sid : sentence_order) {
    manifest.records.push_back(ManifestRecord{sid, Role::Train, by_id[sid]->phonemes});
  }
  write_manifest(manifest, (fs::path(dir) / "manifest.txt").string());

  std::vector<UnitSequence> targets(sentence_order.size());
  for (const auto& p : pairs) {
    targets[static_cast<size_t>(target_line[p.meta.sentence_id])] = p.target;
  }
  write_units(targets, (fs::path(dir) / "targets.units").string());

  std::ofstream index((fs::path(dir) / "index.txt").string(), std::ios::binary);
  if (!index) throw DataError("cannot open corpus index for writing in " + dir);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    std::string feat_rel = "features/" + std::to_string(i) + ".feat";
    write_features(p.input, (fs::path(dir) / feat_rel).string());
    index << i << ' ' << feat_rel << ' ' << target_line[p.meta.sentence_id] << ' '
          << p.meta.sentence_id << ' ' << p.meta.accent_id << ' ' << p.meta.speaker_id << ' '
          << p.meta.seed << '\n';
  }
  if (!index) throw DataError("failed writing corpus index in " + dir);

  std::ofstream meta((fs::path(dir) / "meta.json").string(), std::ios::binary);
  meta << meta_json << '\n';
  if (!meta) throw DataError("failed writing corpus meta in " + dir);
}

std::vector<ParallelPair> read_corpus(const std::string& dir) {
  std::vector<UnitSequence> targets = read_units((fs::path(dir) / "targets.units").string());
  for (auto& t : targets) t.reduced = true;

  std::ifstream index((fs::path(dir) / "index.txt").string(), std::ios::binary);
  if (!index) throw DataError("cannot open corpus index in " + dir);
  std::vector<ParallelPair> out;
  std::string line;
  int line_no = 0;
  while (std::getline(index, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    size_t pair_id;
    std::string feat_rel;
    int tline;
    ParallelPair p;
    if (!(ls >> pair_id >> feat_rel >> tline >> p.meta.sentence_id >> p.meta.accent_id >>
          p.meta.speaker_id >> p.meta.seed)) {
      throw DataError("corpus index parse error at " + dir + "/index.txt:" +
                      std::to_string(line_no));
    }
    if (tline < 0 || tline >= static_cast<int>(targets.size())) {
      throw DataError("corpus index references missing target line " + std::to_string(tline));
    }
    p.input = read_features((fs::path(dir) / feat_rel).string());
    p.input.prov = Provenance{p.meta.sentence_id, p.meta.speaker_id, p.meta.accent_id, p.meta.seed};
    p.target = targets[static_cast<size_t>(tline)];
    out.push_back(std::move(p));
  }
  if (out.empty()) throw DataError("corpus at " + dir + " has no pairs");
  return out;
}

Manifest read_corpus_manifest(const std::string& dir) {
  return read_manifest((fs::path(dir) / "manifest.txt").string());
}

std::string read_corpus_meta(const std::string& dir) {
  std::ifstream is((fs::path(dir) / "meta.json").string(), std::ios::binary);
  if (!is) return "{}";
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace uac
