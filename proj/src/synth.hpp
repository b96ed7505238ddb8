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

#include "common.hpp"
#include "corpus.hpp"

namespace uac {

struct RenderConfig {
  int dim = 16;
  int frame_period_ms = 20;  // metadata only; nothing downstream depends on it
  std::vector<int> base_durations;
  double duration_noise_scale = 0.0;
  double inference_noise_scale = 0.05;

  void validate() const;
};

/// Per-phoneme frame counts drawn uniform in [dur_min, dur_max] at inventory
/// creation time.
std::vector<int> make_base_durations(const PhonemeInventory& inventory, int dur_min, int dur_max,
                                     uint64_t seed);

struct SpeakerSpec {
  int id = 0;
  std::vector<double> offset;  // added to every frame

  static SpeakerSpec native(int dim) { return SpeakerSpec{0, std::vector<double>(dim, 0.0)}; }
  void validate(int dim, double norm_bound) const;
};

/// Accent transform. The per-phoneme feature shift is the rank-1 matrix
/// outer(shift_u, shift_v): phoneme p is displaced by shift_u[p] * shift_v.
struct AccentSpec {
  int id = 0;
  double substitution_prob = 0.0;
  std::vector<double> shift_u;  // length = inventory size
  std::vector<double> shift_v;  // length = feature dim
  double duration_multiplier = 1.0;
  double filler_prob = 0.0;

  static AccentSpec identity(int inventory_size, int dim);
  void validate(int inventory_size, int dim) const;
};

struct Provenance {
  int sentence_id = -1;
  int speaker_id = -1;
  int accent_id = -1;
  uint64_t seed = 0;
};

struct FeatureSequence {
  Mat frames;  // T x D
  Provenance prov;
  // Surface phoneme emitting each frame. Present on rendered sequences,
  // empty after a file round trip.
  std::vector<int> frame_phonemes;

  int length() const { return frames.rows; }
  int dim() const { return frames.cols; }
};

Mat phoneme_prototypes(const PhonemeInventory& inventory, int dim, double separation,
                       uint64_t seed);

std::vector<int> apply_accent(const Sentence& sentence, const AccentSpec& accent,
                              const PhonemeInventory& inventory, uint64_t seed);

/// Stateless renderer over a fixed world (inventory, prototypes, config).
class Renderer {
 public:
  Renderer(PhonemeInventory inventory, Mat prototypes, RenderConfig config,
           double native_sigma = 0.05);

  const PhonemeInventory& inventory() const { return inventory_; }
  const Mat& prototypes() const { return prototypes_; }
  const RenderConfig& config() const { return config_; }
  double native_sigma() const { return native_sigma_; }

  FeatureSequence render(const Sentence& sentence, const SpeakerSpec& speaker,
                         const AccentSpec& accent, uint64_t seed) const;

  /// render() with the config noise scales overridden, used by the
  /// per-pair noise randomization of corpus building.
  FeatureSequence render_with_noise(const Sentence& sentence, const SpeakerSpec& speaker,
                                    const AccentSpec& accent, double inference_noise,
                                    double duration_noise, uint64_t seed) const;

  /// Canonical native rendering: zero-offset speaker, identity accent, fixed
  /// noise scales, seed derived from the sentence id.
  FeatureSequence native_render(const Sentence& sentence) const;

 private:
  PhonemeInventory inventory_;
  Mat prototypes_;
  RenderConfig config_;
  double native_sigma_;
  AccentSpec identity_accent_;
};

// Binary feature file: magic, version, T, D, then row-major float32 LE.
void write_features(const FeatureSequence& features, const std::string& path);
FeatureSequence read_features(const std::string& path);

// Spec (de)serialization as JSON, used when dumping a generated world.
std::string accent_to_json(const AccentSpec& a);
std::string speaker_to_json(const SpeakerSpec& s);

}  // namespace uac
