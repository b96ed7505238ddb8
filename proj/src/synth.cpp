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

#include "synth.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace uac {

void RenderConfig::validate() const {
  if (dim < 2) throw ConfigError("feature dim must be >= 2");
  if (base_durations.empty()) throw ConfigError("base durations not initialized");
  for (int d : base_durations) {
    if (d < 1) throw ConfigError("base durations must be >= 1");
  }
  if (duration_noise_scale < 0 || inference_noise_scale < 0) {
    throw ConfigError("noise scales must be >= 0");
  }
}

std::vector<int> make_base_durations(const PhonemeInventory& inventory, int dur_min, int dur_max,
                                     uint64_t seed) {
  if (dur_min < 1 || dur_max < dur_min) throw ConfigError("invalid base duration range");
  Rng rng(derive_seed(seed, {0xd0b1}));
  std::vector<int> out(static_cast<size_t>(inventory.size));
  for (auto& d : out) d = static_cast<int>(rng.uniform_int(dur_min, dur_max));
  return out;
}

void SpeakerSpec::validate(int dim, double norm_bound) const {
  if (static_cast<int>(offset.size()) != dim) throw ConfigError("speaker offset dim mismatch");
  double nsq = 0;
  for (double v : offset) nsq += v * v;
  if (std::sqrt(nsq) > norm_bound + 1e-12) {
    throw ConfigError("speaker offset norm exceeds bound");
  }
}

AccentSpec AccentSpec::identity(int inventory_size, int dim) {
  AccentSpec a;
  a.id = 0;
  a.shift_u.assign(static_cast<size_t>(inventory_size), 0.0);
  a.shift_v.assign(static_cast<size_t>(dim), 0.0);
  return a;
}

void AccentSpec::validate(int inventory_size, int dim) const {
  if (substitution_prob < 0 || substitution_prob > 1) {
    throw ConfigError("substitution prob must be in [0,1]");
  }
  if (filler_prob < 0 || filler_prob > 1) throw ConfigError("filler prob must be in [0,1]");
  if (duration_multiplier <= 0) throw ConfigError("duration multiplier must be positive");
  if (static_cast<int>(shift_u.size()) != inventory_size) {
    throw ConfigError("accent shift_u must have one entry per phoneme");
  }
  if (static_cast<int>(shift_v.size()) != dim) throw ConfigError("accent shift_v dim mismatch");
}

Mat phoneme_prototypes(const PhonemeInventory& inventory, int dim, double separation,
                       uint64_t seed) {
  if (separation <= 0) throw ConfigError("prototype separation must be positive");
  if (dim < 1) throw ConfigError("prototype dim must be >= 1");
  Rng rng(derive_seed(seed, {0x9a07}));
  Mat protos(inventory.size, dim);
  const int max_attempts = 1000;
  std::vector<double> candidate(static_cast<size_t>(dim));
  for (int p = 0; p < inventory.size; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      for (int d = 0; d < dim; ++d) candidate[static_cast<size_t>(d)] = rng.normal();
      placed = true;
      for (int q = 0; q < p; ++q) {
        if (squared_distance(candidate.data(), protos.row(q), dim) < separation * separation) {
          placed = false;
          break;
        }
      }
      if (placed) {
        for (int d = 0; d < dim; ++d) protos.at(p, d) = candidate[static_cast<size_t>(d)];
      }
    }
    if (!placed) {
      throw ConfigError("could not place separated prototypes; lower separation or raise dim");
    }
  }
  return protos;
}

std::vector<int> apply_accent(const Sentence& sentence, const AccentSpec& accent,
                              const PhonemeInventory& inventory, uint64_t seed) {
  accent.validate(inventory.size, static_cast<int>(accent.shift_v.size()));
  Rng rng(derive_seed(seed, {0xacc3}));
  std::vector<int> surface;
  surface.reserve(sentence.phonemes.size() * 2);
  for (int p : sentence.phonemes) {
    int out = p;
    if (accent.substitution_prob > 0 && rng.uniform() < accent.substitution_prob) {
      const auto& options = inventory.confusion_map[static_cast<size_t>(p)];
      if (!options.empty()) {
        out = options[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(options.size()) - 1))];
      }
    }
    surface.push_back(out);
    if (accent.filler_prob > 0 && rng.uniform() < accent.filler_prob) {
      surface.push_back(inventory.filler);
    }
  }
  return surface;
}

Renderer::Renderer(PhonemeInventory inventory, Mat prototypes, RenderConfig config,
                   double native_sigma)
    : inventory_(std::move(inventory)),
      prototypes_(std::move(prototypes)),
      config_(std::move(config)),
      native_sigma_(native_sigma),
      identity_accent_(AccentSpec::identity(inventory_.size, config_.dim)) {
  inventory_.validate();
  config_.validate();
  if (native_sigma_ < 0) throw ConfigError("native sigma must be >= 0");
  if (prototypes_.rows != inventory_.size || prototypes_.cols != config_.dim) {
    throw ConfigError("prototype matrix shape must be inventory x dim");
  }
  if (static_cast<int>(config_.base_durations.size()) != inventory_.size) {
    throw ConfigError("base durations must cover the inventory");
  }
}

FeatureSequence Renderer::render(const Sentence& sentence, const SpeakerSpec& speaker,
                                 const AccentSpec& accent, uint64_t seed) const {
  return render_with_noise(sentence, speaker, accent, config_.inference_noise_scale,
                           config_.duration_noise_scale, seed);
}

FeatureSequence Renderer::render_with_noise(const Sentence& sentence, const SpeakerSpec& speaker,
                                            const AccentSpec& accent, double inference_noise,
                                            double duration_noise, uint64_t seed) const {
  if (sentence.phonemes.empty()) throw DataError("cannot render an empty sentence");
  if (static_cast<int>(speaker.offset.size()) != config_.dim) {
    throw ConfigError("speaker offset dim mismatch");
  }
  accent.validate(inventory_.size, config_.dim);
  if (inference_noise < 0 || duration_noise < 0) throw ConfigError("noise scales must be >= 0");

  std::vector<int> surface = apply_accent(sentence, accent, inventory_, derive_seed(seed, {1}));
  Rng rng(derive_seed(seed, {2}));

  const int dim = config_.dim;
  std::vector<int> durations(surface.size());
  int total = 0;
  for (size_t i = 0; i < surface.size(); ++i) {
    int p = surface[i];
    double frames = config_.base_durations[static_cast<size_t>(p)] * accent.duration_multiplier;
    if (duration_noise > 0) frames *= std::exp(duration_noise * rng.normal());
    int count = static_cast<int>(std::llround(frames));
    if (count < 1) count = 1;
    durations[i] = count;
    total += count;
  }

  FeatureSequence out;
  out.frames = Mat(total, dim);
  out.frame_phonemes.reserve(static_cast<size_t>(total));
  out.prov = Provenance{sentence.id, speaker.id, accent.id, seed};

  std::vector<double> base(static_cast<size_t>(dim));
  int t = 0;
  for (size_t i = 0; i < surface.size(); ++i) {
    int p = surface[i];
    const double* proto = prototypes_.row(p);
    double u = accent.shift_u[static_cast<size_t>(p)];
    for (int d = 0; d < dim; ++d) {
      base[static_cast<size_t>(d)] = proto[d] + u * accent.shift_v[static_cast<size_t>(d)] +
                                     speaker.offset[static_cast<size_t>(d)];
    }
    for (int f = 0; f < durations[i]; ++f, ++t) {
      double* row = out.frames.row(t);
      if (inference_noise > 0) {
        for (int d = 0; d < dim; ++d) row[d] = base[static_cast<size_t>(d)] + inference_noise * rng.normal();
      } else {
        for (int d = 0; d < dim; ++d) row[d] = base[static_cast<size_t>(d)];
      }
      out.frame_phonemes.push_back(p);
    }
  }
  return out;
}

FeatureSequence Renderer::native_render(const Sentence& sentence) const {
  // The native target must be a fixed function of content: the seed is derived
  // from the sentence id alone.
  uint64_t seed = derive_seed(0x4e415456ULL, {static_cast<uint64_t>(sentence.id)});
  return render_with_noise(sentence, SpeakerSpec::native(config_.dim), identity_accent_,
                           native_sigma_, 0.0, seed);
}

static const char kFeatureMagic[4] = {'U', 'A', 'C', 'F'};

void write_features(const FeatureSequence& features, const std::string& path) {
  if (features.frames.rows < 1) throw DataError("refusing to write empty feature sequence");
  if (!all_finite(features.frames.data.data(), features.frames.data.size())) {
    throw DataError("non-finite values in feature sequence");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open feature file for writing: " + path);
  put_magic(os, kFeatureMagic);
  put_u32(os, 1);  // version
  put_u32(os, static_cast<uint32_t>(features.frames.rows));
  put_u32(os, static_cast<uint32_t>(features.frames.cols));
  for (double v : features.frames.data) put_f32(os, static_cast<float>(v));
  if (!os) throw DataError("failed writing feature file: " + path);
}

FeatureSequence read_features(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open feature file: " + path);
  expect_magic(is, kFeatureMagic, "feature file " + path);
  uint32_t version = get_u32(is, "feature file version");
  if (version != 1) throw DataError("unsupported feature file version in " + path);
  uint32_t rows = get_u32(is, "feature frame count");
  uint32_t cols = get_u32(is, "feature dim");
  if (rows < 1 || cols < 1) throw DataError("degenerate feature shape in " + path);
  FeatureSequence out;
  out.frames = Mat(static_cast<int>(rows), static_cast<int>(cols));
  for (auto& v : out.frames.data) v = static_cast<double>(get_f32(is, "feature data"));
  if (!all_finite(out.frames.data.data(), out.frames.data.size())) {
    throw DataError("non-finite values in feature file " + path);
  }
  return out;
}

std::string accent_to_json(const AccentSpec& a) {
  nlohmann::json j;
  j["id"] = a.id;
  j["substitution_prob"] = a.substitution_prob;
  j["shift_u"] = a.shift_u;
  j["shift_v"] = a.shift_v;
  j["duration_multiplier"] = a.duration_multiplier;
  j["filler_prob"] = a.filler_prob;
  return j.dump();
}

std::string speaker_to_json(const SpeakerSpec& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["offset"] = s.offset;
  return j.dump();
}

}  // namespace uac
