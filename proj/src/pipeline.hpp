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
#include <optional>
#include <string>
#include <vector>

#include "eval.hpp"

namespace uac::pipeline {

/// Everything needed to rebuild the synthetic world deterministically.
struct WorldConfig {
  uint64_t seed = 1;
  int inventory_size = 40;
  int confusables_per_phoneme = 3;
  int feature_dim = 16;
  double separation = 2.0;
  int duration_min = 2;
  int duration_max = 6;
  int frame_period_ms = 20;
  double native_sigma = 0.05;

  int num_accents = 6;
  double substitution_prob = 0.15;
  double filler_prob = 0.05;
  double duration_mult_min = 1.1;
  double duration_mult_max = 1.6;
  double accent_shift_scale = 1.0;

  int num_speakers = 20;
  double speaker_offset_bound = 0.5;

  int len_min = 5;
  int len_max = 30;

  int k = 100;
  int kmeans_max_iters = 50;
  double kmeans_tol = 1e-4;
  int64_t kmeans_max_frames = 200000;

  NoiseRanges noise;

  void validate() const;
  std::string to_json() const;
  static WorldConfig from_json_text(const std::string& text);
};

struct World {
  WorldConfig cfg;
  PhonemeInventory inventory;
  Renderer renderer;
  std::vector<AccentSpec> accents;    // non-native accents, ids 1..num_accents
  std::vector<SpeakerSpec> speakers;  // training speakers, ids 1..num_speakers

  static World build(const WorldConfig& cfg);
  SpeakerSpec native_speaker() const { return SpeakerSpec::native(cfg.feature_dim); }
  /// Speaker pool disjoint from the training speakers (fresh offsets).
  std::vector<SpeakerSpec> unseen_speakers(int count, uint64_t salt) const;
  std::string specs_json() const;
};

struct ExperimentConfig {
  WorldConfig world;
  int budget = 6000;
  std::vector<Strategy> strategies = {Strategy::Overlapped, Strategy::NonOverlapped};
  std::vector<std::string> inits = {"random", "dec-pretrain"};
  int seeds_per_cell = 3;
  int val_sentences = 50;
  int test_sentences = 60;
  int eval_beam = 8;
  pc::PCConfig model;
  pc::TrainConfig train;
  pc::TrainConfig pretrain;
  pc::MaskConfig mask;

  void validate() const;
  std::string to_json() const;
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);  // file with {"world":..,"experiment":..}
};

/// Shared artifacts derived from a world and a sentence pool.
struct WorldAssets {
  std::vector<Sentence> train_pool;
  std::vector<Sentence> val_sentences;
  std::vector<Sentence> test_sentences;
  Codebook codebook;
  UnitDecoder decoder;
  std::vector<int> unit_to_phoneme;
  std::vector<FeatureSequence> native_features;   // train pool, labeled frames
  std::vector<UnitSequence> native_units_reduced;  // train pool
  std::vector<ParallelPair> val_pairs;   // shared across cells
  std::vector<ParallelPair> test_pairs;  // unseen speakers
};

WorldAssets prepare_assets(const World& world, const ExperimentConfig& cfg, int threads,
                           const std::function<void(const std::string&)>& log = {});

struct CellResult {
  std::string strategy;
  std::string init;
  int seed_idx = 0;
  double val_ppl = 0.0;
  double test_ppl = 0.0;
  double final_loss = 0.0;
  int best_update = -1;
};

struct GridReport {
  std::vector<CellResult> cells;
  double mean_val_ppl(const std::string& strategy, const std::string& init) const;  // "" = any
  double mean_test_ppl(const std::string& strategy, const std::string& init) const;
  bool overlapped_below_nonoverlapped() const;  // mean val PPL ordering
  bool pretrained_not_worse_than_random() const;
};

/// Runs the strategy x initialization grid. Completed cells (result.json
/// present under out_dir) are loaded instead of recomputed; corpora and
/// pretrained initializations are derived deterministically per seed, so any
/// deleted cell reproduces exactly.
GridReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
                          const std::function<void(const std::string&)>& log = {});

void write_grid_report(const GridReport& report, const std::string& text_path,
                       const std::string& json_path);

struct ConvertResult {
  pc::Hypothesis hypothesis;
  FeatureSequence output;
  SpeakerEmbedding embedding;
};

/// Full accent conversion of one utterance: extract the speaker embedding,
/// beam-decode native units, synthesize output features with that embedding.
ConvertResult convert(const pc::PCModel& model, const Codebook& codebook,
                      const UnitDecoder& decoder, const FeatureSequence& input, int beam = 8,
                      bool length_norm = false, double max_len_mult = 4.0);

}  // namespace uac::pipeline
