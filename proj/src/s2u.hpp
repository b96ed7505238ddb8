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
#include "synth.hpp"

namespace uac {

struct Codebook {
  int k = 0;
  int dim = 0;
  Mat centroids;  // k x dim, entries snapped to float32 so file round trips are lossless
  int iterations_run = 0;
  double final_objective = 0.0;

  void validate() const;
};

struct UnitSequence {
  std::vector<int> units;
  bool reduced = false;

  void validate(int k) const;
};

struct KmeansOptions {
  int max_iters = 100;
  double tol = 1e-6;
  int threads = 1;
};

/// Lloyd's algorithm with k-means++ initialization. Empty clusters are
/// reseeded to the point currently farthest from its assigned centroid.
/// If objective_trace is given it receives the assignment objective of each
/// iteration (non-increasing).
Codebook fit_kmeans(const Mat& frames, int k, const KmeansOptions& options, uint64_t seed,
                    std::vector<double>* objective_trace = nullptr);

/// Nearest-centroid assignment per frame; ties break to the smallest index.
UnitSequence quantize(const Mat& frames, const Codebook& codebook);
inline UnitSequence quantize(const FeatureSequence& features, const Codebook& codebook) {
  return quantize(features.frames, codebook);
}

/// Collapses maximal runs of equal adjacent units. Idempotent.
UnitSequence reduce(const UnitSequence& units);

/// Majority phoneme per unit over a labeled native corpus; units never
/// assigned map to -1 (unknown).
std::vector<int> unit_phoneme_map(const Codebook& codebook,
                                  const std::vector<FeatureSequence>& native_corpus);

// Codebook file: magic, version, K, D, row-major float32 LE.
void write_codebook(const Codebook& codebook, const std::string& path);
Codebook read_codebook(const std::string& path);

// Unit files: one utterance per line, space-separated ids.
void write_units(const std::vector<UnitSequence>& sequences, const std::string& path);
std::vector<UnitSequence> read_units(const std::string& path);

}  // namespace uac
