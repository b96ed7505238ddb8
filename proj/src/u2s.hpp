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
#include <utility>
#include <vector>

#include "common.hpp"
#include "s2u.hpp"
#include "synth.hpp"

namespace uac {

struct SpeakerEmbedding {
  std::vector<double> v;
};

/// Statistical unit decoder: mean frame and median run length per unit,
/// learned from aligned native data.
struct UnitDecoder {
  int k = 0;
  int dim = 0;
  Mat unit_means;                   // k x dim, float32-snapped
  std::vector<int> unit_durations;  // frames emitted per unit, >= 1

  static UnitDecoder from_codebook(const Codebook& codebook, int duration = 1);
  void validate() const;
};

/// Fits unit means and median run lengths from frame-aligned pairs. Each pair
/// is (features, unreduced units) with unit[t] labeling frame t.
UnitDecoder fit_unit_decoder(
    const std::vector<std::pair<const FeatureSequence*, const UnitSequence*>>& corpus);

/// Mean quantization residual: mean over t of (frame[t] - nearest centroid).
SpeakerEmbedding speaker_embed(const FeatureSequence& features, const Codebook& codebook);

/// Emits unit_durations[k] copies of unit_means[k] + embedding per unit.
/// Noiseless and deterministic.
FeatureSequence synthesize(const UnitSequence& units, const SpeakerEmbedding& embedding,
                           const UnitDecoder& decoder);

// Decoder file: codebook layout plus a K-entry duration table.
void write_unit_decoder(const UnitDecoder& decoder, const std::string& path);
UnitDecoder read_unit_decoder(const std::string& path);

}  // namespace uac
