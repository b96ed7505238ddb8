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

#include "u2s.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace uac {

UnitDecoder UnitDecoder::from_codebook(const Codebook& codebook, int duration) {
  if (duration < 1) throw ConfigError("unit duration must be >= 1");
  UnitDecoder d;
  d.k = codebook.k;
  d.dim = codebook.dim;
  d.unit_means = codebook.centroids;
  d.unit_durations.assign(static_cast<size_t>(codebook.k), duration);
  return d;
}

void UnitDecoder::validate() const {
  if (k < 1 || dim < 1) throw DataError("unit decoder has degenerate shape");
  if (unit_means.rows != k || unit_means.cols != dim) throw DataError("unit means shape mismatch");
  if (static_cast<int>(unit_durations.size()) != k) throw DataError("duration table size mismatch");
  if (!all_finite(unit_means.data.data(), unit_means.data.size())) {
    throw DataError("unit means must be finite");
  }
  for (int d : unit_durations) {
    if (d < 1) throw DataError("unit durations must be >= 1");
  }
}

UnitDecoder fit_unit_decoder(
    const std::vector<std::pair<const FeatureSequence*, const UnitSequence*>>& corpus) {
  if (corpus.empty()) throw DataError("fit_unit_decoder: empty corpus");
  int dim = corpus.front().first->dim();
  int max_unit = -1;
  for (const auto& [feats, units] : corpus) {
    if (feats->dim() != dim) throw DataError("fit_unit_decoder: inconsistent feature dims");
    if (units->reduced || units->units.size() != static_cast<size_t>(feats->length())) {
      throw DataError("fit_unit_decoder: units must be unreduced and frame-aligned");
    }
    for (int u : units->units) max_unit = std::max(max_unit, u);
  }
  if (max_unit < 0) throw DataError("fit_unit_decoder: no units observed");
  int k = max_unit + 1;

  Mat sums(k, dim);
  std::vector<int64_t> counts(static_cast<size_t>(k), 0);
  std::vector<std::vector<int>> run_lengths(static_cast<size_t>(k));
  for (const auto& [feats, units] : corpus) {
    const auto& u = units->units;
    for (size_t t = 0; t < u.size(); ++t) {
      const double* x = feats->frames.row(static_cast<int>(t));
      double* s = sums.row(u[t]);
      for (int d = 0; d < dim; ++d) s[d] += x[d];
      ++counts[static_cast<size_t>(u[t])];
    }
    size_t t = 0;
    while (t < u.size()) {
      size_t start = t;
      while (t < u.size() && u[t] == u[start]) ++t;
      run_lengths[static_cast<size_t>(u[start])].push_back(static_cast<int>(t - start));
    }
  }

  UnitDecoder out;
  out.k = k;
  out.dim = dim;
  out.unit_means = Mat(k, dim);
  out.unit_durations.assign(static_cast<size_t>(k), 1);
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<size_t>(c)] > 0) {
      double inv = 1.0 / static_cast<double>(counts[static_cast<size_t>(c)]);
      for (int d = 0; d < dim; ++d) {
        out.unit_means.at(c, d) = snap_f32(sums.at(c, d) * inv);
      }
    }
    auto& runs = run_lengths[static_cast<size_t>(c)];
    if (!runs.empty()) {
      std::sort(runs.begin(), runs.end());
      out.unit_durations[static_cast<size_t>(c)] = runs[(runs.size() - 1) / 2];  // lower median
    }
  }
  out.validate();
  return out;
}

SpeakerEmbedding speaker_embed(const FeatureSequence& features, const Codebook& codebook) {
  if (features.length() < 1) throw DataError("speaker_embed: empty feature sequence");
  if (features.dim() != codebook.dim) throw DataError("speaker_embed: dim mismatch");
  const int dim = codebook.dim;
  SpeakerEmbedding e;
  e.v.assign(static_cast<size_t>(dim), 0.0);
  for (int t = 0; t < features.length(); ++t) {
    const double* x = features.frames.row(t);
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int c = 0; c < codebook.k; ++c) {
      double d = squared_distance(x, codebook.centroids.row(c), dim);
      if (d < best) {
        best = d;
        best_k = c;
      }
    }
    const double* centroid = codebook.centroids.row(best_k);
    for (int d = 0; d < dim; ++d) e.v[static_cast<size_t>(d)] += x[d] - centroid[d];
  }
  double inv = 1.0 / static_cast<double>(features.length());
  for (double& v : e.v) v *= inv;
  return e;
}

FeatureSequence synthesize(const UnitSequence& units, const SpeakerEmbedding& embedding,
                           const UnitDecoder& decoder) {
  decoder.validate();
  if (static_cast<int>(embedding.v.size()) != decoder.dim) {
    throw DataError("synthesize: embedding dim mismatch");
  }
  int total = 0;
  for (int u : units.units) {
    if (u < 0 || u >= decoder.k) throw DataError("synthesize: unit id out of range");
    total += decoder.unit_durations[static_cast<size_t>(u)];
  }
  FeatureSequence out;
  out.frames = Mat(total, decoder.dim);
  out.frame_phonemes.clear();
  int t = 0;
  for (int u : units.units) {
    const double* mean = decoder.unit_means.row(u);
    for (int f = 0; f < decoder.unit_durations[static_cast<size_t>(u)]; ++f, ++t) {
      double* row = out.frames.row(t);
      for (int d = 0; d < decoder.dim; ++d) row[d] = mean[d] + embedding.v[static_cast<size_t>(d)];
    }
  }
  return out;
}

static const char kDecoderMagic[4] = {'U', 'A', 'C', 'D'};

void write_unit_decoder(const UnitDecoder& decoder, const std::string& path) {
  decoder.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open unit decoder for writing: " + path);
  put_magic(os, kDecoderMagic);
  put_u32(os, 1);
  put_u32(os, static_cast<uint32_t>(decoder.k));
  put_u32(os, static_cast<uint32_t>(decoder.dim));
  for (double v : decoder.unit_means.data) put_f32(os, static_cast<float>(v));
  for (int d : decoder.unit_durations) put_u32(os, static_cast<uint32_t>(d));
  if (!os) throw DataError("failed writing unit decoder: " + path);
}

UnitDecoder read_unit_decoder(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open unit decoder: " + path);
  expect_magic(is, kDecoderMagic, "unit decoder " + path);
  uint32_t version = get_u32(is, "unit decoder version");
  if (version != 1) throw DataError("unsupported unit decoder version in " + path);
  UnitDecoder out;
  out.k = static_cast<int>(get_u32(is, "unit decoder K"));
  out.dim = static_cast<int>(get_u32(is, "unit decoder dim"));
  if (out.k < 1 || out.dim < 1) throw DataError("degenerate unit decoder header in " + path);
  out.unit_means = Mat(out.k, out.dim);
  for (auto& v : out.unit_means.data) v = static_cast<double>(get_f32(is, "unit means"));
  out.unit_durations.resize(static_cast<size_t>(out.k));
  for (auto& d : out.unit_durations) d = static_cast<int>(get_u32(is, "unit durations"));
  out.validate();
  return out;
}

}  // namespace uac
