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

#include "s2u.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace uac {

void Codebook::validate() const {
  if (k < 2) throw ConfigError("codebook needs K >= 2");
  if (centroids.rows != k || centroids.cols != dim) throw DataError("codebook shape mismatch");
  if (!all_finite(centroids.data.data(), centroids.data.size())) {
    throw DataError("codebook has non-finite centroids");
  }
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      if (squared_distance(centroids.row(a), centroids.row(b), dim) == 0.0) {
        throw DataError("codebook has identical centroids");
      }
    }
  }
}

void UnitSequence::validate(int k) const {
  for (size_t i = 0; i < units.size(); ++i) {
    if (units[i] < 0 || units[i] >= k) throw DataError("unit id out of range");
    if (reduced && i > 0 && units[i] == units[i - 1]) {
      throw DataError("reduced sequence has adjacent duplicates");
    }
  }
}

namespace {

// Assignment step: fills nearest ids, returns the objective. Parallel over
// points; each slot written by exactly one worker so the result does not
// depend on scheduling.
double assign_points(const Mat& frames, const Mat& centroids, std::vector<int>& nearest,
                     std::vector<double>& dist_sq, int threads) {
  const int n = frames.rows;
  const int k = centroids.rows;
  const int dim = frames.cols;
  parallel_for(n, threads, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      const double* x = frames.row(static_cast<int>(i));
      double best = std::numeric_limits<double>::infinity();
      int best_k = 0;
      for (int c = 0; c < k; ++c) {
        double d = squared_distance(x, centroids.row(c), dim);
        if (d < best) {
          best = d;
          best_k = c;
        }
      }
      nearest[static_cast<size_t>(i)] = best_k;
      dist_sq[static_cast<size_t>(i)] = best;
    }
  });
  double objective = 0.0;
  for (int i = 0; i < n; ++i) objective += dist_sq[static_cast<size_t>(i)];
  return objective;
}

Mat kmeanspp_init(const Mat& frames, int k, Rng& rng) {
  const int n = frames.rows;
  const int dim = frames.cols;
  Mat centroids(k, dim);
  int first = static_cast<int>(rng.uniform_int(0, n - 1));
  std::copy_n(frames.row(first), dim, centroids.row(0));

  std::vector<double> dist_sq(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    const double* last = centroids.row(c - 1);
    for (int i = 0; i < n; ++i) {
      double d = squared_distance(frames.row(i), last, dim);
      if (d < dist_sq[static_cast<size_t>(i)]) dist_sq[static_cast<size_t>(i)] = d;
      total += dist_sq[static_cast<size_t>(i)];
    }
    int chosen;
    if (total <= 0.0) {
      chosen = static_cast<int>(rng.uniform_int(0, n - 1));
    } else {
      double target = rng.uniform() * total;
      double acc = 0.0;
      chosen = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += dist_sq[static_cast<size_t>(i)];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    }
    std::copy_n(frames.row(chosen), dim, centroids.row(c));
  }
  return centroids;
}

}  // namespace

Codebook fit_kmeans(const Mat& frames, int k, const KmeansOptions& options, uint64_t seed,
                    std::vector<double>* objective_trace) {
  if (k < 2) throw ConfigError("fit_kmeans: K must be >= 2");
  if (frames.rows < k) throw ConfigError("fit_kmeans: need at least K frames");
  if (options.max_iters < 1) throw ConfigError("fit_kmeans: max_iters must be >= 1");
  if (options.tol < 0) throw ConfigError("fit_kmeans: tol must be >= 0");
  if (!all_finite(frames.data.data(), frames.data.size())) {
    throw DataError("fit_kmeans: non-finite input frames");
  }

  const int n = frames.rows;
  const int dim = frames.cols;
  Rng rng(derive_seed(seed, {0x4b6d}));
  Mat centroids = kmeanspp_init(frames, k, rng);

  std::vector<int> nearest(static_cast<size_t>(n), 0);
  std::vector<double> dist_sq(static_cast<size_t>(n), 0.0);
  std::vector<double> sums(static_cast<size_t>(k) * dim, 0.0);
  std::vector<int64_t> counts(static_cast<size_t>(k), 0);

  double objective = 0.0;
  int iterations = 0;
  for (int iter = 0; iter < options.max_iters; ++iter) {
    objective = assign_points(frames, centroids, nearest, dist_sq, options.threads);
    iterations = iter + 1;
    if (objective_trace) objective_trace->push_back(objective);

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      int c = nearest[static_cast<size_t>(i)];
      const double* x = frames.row(i);
      double* s = sums.data() + static_cast<size_t>(c) * dim;
      for (int d = 0; d < dim; ++d) s[d] += x[d];
      ++counts[static_cast<size_t>(c)];
    }

    // Reseed empty clusters to the farthest points, one point per cluster,
    // taken in decreasing distance order.
    std::vector<int> empties;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] == 0) empties.push_back(c);
    }
    std::vector<char> taken(static_cast<size_t>(n), 0);

    double movement = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<size_t>(c)] > 0) {
        double* row = centroids.row(c);
        const double* s = sums.data() + static_cast<size_t>(c) * dim;
        double inv = 1.0 / static_cast<double>(counts[static_cast<size_t>(c)]);
        double move_sq = 0.0;
        for (int d = 0; d < dim; ++d) {
          double nv = s[d] * inv;
          double delta = nv - row[d];
          move_sq += delta * delta;
          row[d] = nv;
        }
        movement = std::max(movement, std::sqrt(move_sq));
      }
    }
    for (int c : empties) {
      int far_idx = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (!taken[static_cast<size_t>(i)] && dist_sq[static_cast<size_t>(i)] > far_d) {
          far_d = dist_sq[static_cast<size_t>(i)];
          far_idx = i;
        }
      }
      if (far_idx < 0) throw NumericError("k-means: no reseed candidate left");  // k <= n
      taken[static_cast<size_t>(far_idx)] = 1;
      std::copy_n(frames.row(far_idx), dim, centroids.row(c));
      movement = std::max(movement, std::sqrt(far_d));
    }

    if (movement < options.tol) break;
  }

  Codebook out;
  out.k = k;
  out.dim = dim;
  out.centroids = std::move(centroids);
  for (auto& v : out.centroids.data) v = snap_f32(v);
  out.iterations_run = iterations;
  // Objective reported against the snapped centroids actually stored.
  {
    std::vector<int> tmp_near(static_cast<size_t>(n), 0);
    std::vector<double> tmp_d(static_cast<size_t>(n), 0.0);
    out.final_objective = assign_points(frames, out.centroids, tmp_near, tmp_d, options.threads);
  }
  out.validate();
  return out;
}

UnitSequence quantize(const Mat& frames, const Codebook& codebook) {
  if (frames.cols != codebook.dim) throw DataError("quantize: feature dim != codebook dim");
  if (!all_finite(frames.data.data(), frames.data.size())) {
    throw DataError("quantize: non-finite frames");
  }
  UnitSequence out;
  out.units.resize(static_cast<size_t>(frames.rows));
  out.reduced = false;
  for (int t = 0; t < frames.rows; ++t) {
    const double* x = frames.row(t);
    double best = std::numeric_limits<double>::infinity();
    int best_k = 0;
    for (int c = 0; c < codebook.k; ++c) {
      double d = squared_distance(x, codebook.centroids.row(c), codebook.dim);
      if (d < best) {  // strict: ties keep the smaller index
        best = d;
        best_k = c;
      }
    }
    out.units[static_cast<size_t>(t)] = best_k;
  }
  return out;
}

UnitSequence reduce(const UnitSequence& units) {
  UnitSequence out;
  out.reduced = true;
  out.units.reserve(units.units.size());
  for (int u : units.units) {
    if (out.units.empty() || out.units.back() != u) out.units.push_back(u);
  }
  return out;
}

std::vector<int> unit_phoneme_map(const Codebook& codebook,
                                  const std::vector<FeatureSequence>& native_corpus) {
  if (native_corpus.empty()) throw DataError("unit_phoneme_map: empty corpus");
  std::vector<std::unordered_map<int, int64_t>> votes(static_cast<size_t>(codebook.k));
  for (const auto& seq : native_corpus) {
    if (seq.frame_phonemes.size() != static_cast<size_t>(seq.frames.rows)) {
      throw DataError("unit_phoneme_map: corpus frames lack phoneme labels");
    }
    UnitSequence u = quantize(seq.frames, codebook);
    for (size_t t = 0; t < u.units.size(); ++t) {
      ++votes[static_cast<size_t>(u.units[t])][seq.frame_phonemes[t]];
    }
  }
  std::vector<int> map(static_cast<size_t>(codebook.k), -1);
  for (int c = 0; c < codebook.k; ++c) {
    int64_t best = 0;
    int best_p = -1;
    for (const auto& [phoneme, count] : votes[static_cast<size_t>(c)]) {
      if (count > best || (count == best && best_p >= 0 && phoneme < best_p)) {
        best = count;
        best_p = phoneme;
      }
    }
    map[static_cast<size_t>(c)] = best_p;
  }
  return map;
}

static const char kCodebookMagic[4] = {'U', 'A', 'C', 'K'};

void write_codebook(const Codebook& codebook, const std::string& path) {
  codebook.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open codebook for writing: " + path);
  put_magic(os, kCodebookMagic);
  put_u32(os, 1);
  put_u32(os, static_cast<uint32_t>(codebook.k));
  put_u32(os, static_cast<uint32_t>(codebook.dim));
  for (double v : codebook.centroids.data) put_f32(os, static_cast<float>(v));
  if (!os) throw DataError("failed writing codebook: " + path);
}

Codebook read_codebook(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open codebook: " + path);
  expect_magic(is, kCodebookMagic, "codebook " + path);
  uint32_t version = get_u32(is, "codebook version");
  if (version != 1) throw DataError("unsupported codebook version in " + path);
  Codebook out;
  out.k = static_cast<int>(get_u32(is, "codebook K"));
  out.dim = static_cast<int>(get_u32(is, "codebook dim"));
  if (out.k < 2 || out.dim < 1) throw DataError("degenerate codebook header in " + path);
  out.centroids = Mat(out.k, out.dim);
  for (auto& v : out.centroids.data) v = static_cast<double>(get_f32(is, "codebook data"));
  out.validate();
  return out;
}

void write_units(const std::vector<UnitSequence>& sequences, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open unit file for writing: " + path);
  for (const auto& seq : sequences) {
    for (size_t i = 0; i < seq.units.size(); ++i) {
      if (i) os << ' ';
      os << seq.units[i];
    }
    os << '\n';
  }
  if (!os) throw DataError("failed writing unit file: " + path);
}

std::vector<UnitSequence> read_units(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open unit file: " + path);
  std::vector<UnitSequence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    UnitSequence seq;
    std::istringstream ls(line);
    int u;
    while (ls >> u) {
      if (u < 0) {
        throw DataError("unit file parse error at " + path + ":" + std::to_string(line_no) +
                        ": negative unit id");
      }
      seq.units.push_back(u);
    }
    if (!ls.eof()) {
      throw DataError("unit file parse error at " + path + ":" + std::to_string(line_no) +
                      ": units must be integers");
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace uac
