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

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "s2u.hpp"

using namespace uac;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("unitac_test_" + name)).string();
}

// Test-side nearest-neighbor oracle, kept separate from the implementation.
int brute_force_nearest(const double* x, const Mat& centroids) {
  int best = 0;
  double best_d = 0;
  for (int c = 0; c < centroids.rows; ++c) {
    double d = 0;
    for (int j = 0; j < centroids.cols; ++j) {
      double diff = x[j] - centroids.at(c, j);
      d += diff * diff;
    }
    if (c == 0 || d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}
}  // namespace

TEST_CASE("k-means with N == K reproduces the points") {
  const int n = 6, dim = 3;
  Mat frames(n, dim);
  Rng rng(4);
  for (auto& v : frames.data) v = rng.uniform(-3, 3);
  KmeansOptions opts;
  Codebook cb = fit_kmeans(frames, n, opts, 11);
  CHECK(cb.final_objective == doctest::Approx(0.0).epsilon(1e-9));
  // Centroids equal the points up to permutation, at float32 precision.
  std::set<int> matched;
  for (int c = 0; c < n; ++c) {
    bool found = false;
    for (int p = 0; p < n && !found; ++p) {
      if (matched.count(p)) continue;
      bool same = true;
      for (int d = 0; d < dim; ++d) {
        if (cb.centroids.at(c, d) != snap_f32(frames.at(p, d))) same = false;
      }
      if (same) {
        matched.insert(p);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("k-means recovers well-separated blobs") {
  const int dim = 4;
  const int per_blob = 1000;
  Rng rng(8);
  std::vector<std::vector<double>> means = {{5, 0, 0, 0}, {0, 5, 0, 0}, {0, 0, 5, 0}};
  Mat frames(3 * per_blob, dim);
  std::vector<std::vector<double>> blob_sample_mean(3, std::vector<double>(dim, 0.0));
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < per_blob; ++i) {
      double* row = frames.row(b * per_blob + i);
      for (int d = 0; d < dim; ++d) {
        row[d] = means[b][d] + 0.05 * rng.normal();
        blob_sample_mean[b][d] += row[d];
      }
    }
    for (int d = 0; d < dim; ++d) blob_sample_mean[b][d] /= per_blob;
  }
  KmeansOptions opts;
  Codebook cb = fit_kmeans(frames, 3, opts, 21);
  // Each centroid within 0.1 of the sample mean of its blob (direct oracle).
  for (int c = 0; c < 3; ++c) {
    double best = 1e9;
    for (int b = 0; b < 3; ++b) {
      double d = squared_distance(cb.centroids.row(c), blob_sample_mean[b].data(), dim);
      best = std::min(best, std::sqrt(d));
    }
    CHECK(best < 0.1);
  }
}

TEST_CASE("objective trace is non-increasing") {
  Rng rng(2);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    Mat frames(300, 5);
    for (auto& v : frames.data) v = rng.uniform(-1, 1);
    std::vector<double> trace;
    KmeansOptions opts;
    opts.max_iters = 40;
    opts.tol = 0.0;
    fit_kmeans(frames, 12, opts, seed, &trace);
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i) {
      CHECK(trace[i] <= trace[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("k-means assignment is a fixed point at convergence") {
  Rng rng(31);
  Mat frames(400, 4);
  for (auto& v : frames.data) v = rng.uniform(-2, 2);
  KmeansOptions opts;
  opts.max_iters = 200;
  opts.tol = 1e-12;
  Codebook cb = fit_kmeans(frames, 8, opts, 5);
  // Reassigning and re-averaging moves no centroid beyond float rounding.
  UnitSequence assign = quantize(frames, cb);
  Mat sums(cb.k, cb.dim);
  std::vector<int> counts(cb.k, 0);
  for (int i = 0; i < frames.rows; ++i) {
    int c = assign.units[i];
    for (int d = 0; d < cb.dim; ++d) sums.at(c, d) += frames.at(i, d);
    ++counts[c];
  }
  for (int c = 0; c < cb.k; ++c) {
    REQUIRE(counts[c] > 0);
    for (int d = 0; d < cb.dim; ++d) {
      CHECK(sums.at(c, d) / counts[c] == doctest::Approx(cb.centroids.at(c, d)).epsilon(1e-5));
    }
  }
}

TEST_CASE("k-means threading does not change the result") {
  Rng rng(77);
  Mat frames(500, 6);
  for (auto& v : frames.data) v = rng.uniform(-1, 1);
  KmeansOptions one;
  one.threads = 1;
  KmeansOptions four;
  four.threads = 4;
  Codebook a = fit_kmeans(frames, 10, one, 3);
  Codebook b = fit_kmeans(frames, 10, four, 3);
  CHECK(a.centroids.data == b.centroids.data);
}

TEST_CASE("k-means input validation") {
  Mat frames(3, 2);
  CHECK_THROWS_AS(fit_kmeans(frames, 5, KmeansOptions{}, 1), ConfigError);
  Mat bad(5, 2);
  bad.data[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_kmeans(bad, 2, KmeansOptions{}, 1), DataError);
}

TEST_CASE("quantize maps a centroid to its own id") {
  Codebook cb;
  cb.k = 8;
  cb.dim = 3;
  cb.centroids = Mat(8, 3);
  Rng rng(12);
  for (auto& v : cb.centroids.data) v = snap_f32(rng.uniform(-2, 2));
  Mat frames(1, 3);
  for (int d = 0; d < 3; ++d) frames.at(0, d) = cb.centroids.at(7, d);
  UnitSequence u = quantize(frames, cb);
  CHECK(u.units == std::vector<int>{7});
  CHECK_FALSE(u.reduced);
}

TEST_CASE("quantize breaks ties toward the smaller index") {
  Codebook cb;
  cb.k = 6;
  cb.dim = 2;
  cb.centroids = Mat(6, 2);
  for (int c = 0; c < 6; ++c) {
    cb.centroids.at(c, 0) = 100.0 + 10 * c;  // far away by default
    cb.centroids.at(c, 1) = 0.0;
  }
  cb.centroids.at(2, 0) = -1.0;  // indices 2 and 5 equidistant from origin
  cb.centroids.at(5, 0) = 1.0;
  Mat frames(1, 2);
  UnitSequence u = quantize(frames, cb);
  CHECK(u.units == std::vector<int>{2});
}

TEST_CASE("quantize equals the brute-force oracle") {
  Rng rng(55);
  Codebook cb;
  cb.k = 10;
  cb.dim = 7;
  cb.centroids = Mat(10, 7);
  for (auto& v : cb.centroids.data) v = snap_f32(rng.uniform(-1, 1));
  Mat frames(50, 7);
  for (auto& v : frames.data) v = rng.uniform(-1, 1);
  UnitSequence u = quantize(frames, cb);
  for (int t = 0; t < frames.rows; ++t) {
    CHECK(u.units[t] == brute_force_nearest(frames.row(t), cb.centroids));
  }
}

TEST_CASE("quantize validates dimensions") {
  Codebook cb;
  cb.k = 3;
  cb.dim = 4;
  cb.centroids = Mat(3, 4);
  for (int c = 0; c < 3; ++c) cb.centroids.at(c, 0) = c;
  Mat frames(2, 5);
  CHECK_THROWS_AS(quantize(frames, cb), DataError);
}

TEST_CASE("reduce collapses runs and is idempotent") {
  UnitSequence u;
  u.units = {5, 5, 3, 3, 3, 7};
  CHECK(reduce(u).units == std::vector<int>{5, 3, 7});

  UnitSequence empty;
  CHECK(reduce(empty).units.empty());
  CHECK(reduce(empty).reduced);

  Rng rng(14);
  for (int trial = 0; trial < 1000; ++trial) {
    UnitSequence seq;
    int len = static_cast<int>(rng.uniform_int(0, 40));
    for (int i = 0; i < len; ++i) seq.units.push_back(static_cast<int>(rng.uniform_int(0, 5)));
    UnitSequence once = reduce(seq);
    UnitSequence twice = reduce(once);
    CHECK(once.units == twice.units);
    CHECK(once.units.size() <= seq.units.size());
    for (size_t i = 1; i < once.units.size(); ++i) CHECK(once.units[i] != once.units[i - 1]);
    // First element of every run survives in order.
    std::vector<int> run_heads;
    for (size_t i = 0; i < seq.units.size(); ++i) {
      if (i == 0 || seq.units[i] != seq.units[i - 1]) run_heads.push_back(seq.units[i]);
    }
    CHECK(once.units == run_heads);
  }
}

TEST_CASE("unit-phoneme map picks the majority phoneme") {
  Codebook cb;
  cb.k = 3;
  cb.dim = 1;
  cb.centroids = Mat(3, 1);
  cb.centroids.at(0, 0) = 0.0;
  cb.centroids.at(1, 0) = 10.0;
  cb.centroids.at(2, 0) = 20.0;

  FeatureSequence f;
  f.frames = Mat(5, 1);
  f.frames.at(0, 0) = 0.1;   // unit 0
  f.frames.at(1, 0) = -0.1;  // unit 0
  f.frames.at(2, 0) = 0.2;   // unit 0
  f.frames.at(3, 0) = 10.0;  // unit 1
  f.frames.at(4, 0) = 9.9;   // unit 1
  f.frame_phonemes = {4, 4, 6, 2, 2};

  auto map = unit_phoneme_map(cb, {f});
  CHECK(map[0] == 4);   // majority over {4,4,6}
  CHECK(map[1] == 2);
  CHECK(map[2] == -1);  // never assigned
  CHECK_THROWS_AS(unit_phoneme_map(cb, {}), DataError);
}

TEST_CASE("codebook files round trip exactly") {
  Rng rng(3);
  Mat frames(50, 4);
  for (auto& v : frames.data) v = rng.uniform(-1, 1);
  Codebook cb = fit_kmeans(frames, 6, KmeansOptions{}, 2);
  std::string path = temp_path("codebook.bin");
  write_codebook(cb, path);
  Codebook back = read_codebook(path);
  CHECK(back.k == cb.k);
  CHECK(back.dim == cb.dim);
  CHECK(back.centroids.data == cb.centroids.data);  // float-snapped, lossless
  std::remove(path.c_str());
}

TEST_CASE("unit files round trip and report parse errors") {
  std::vector<UnitSequence> seqs(3);
  seqs[0].units = {1, 2, 3};
  seqs[1].units = {};
  seqs[2].units = {99, 0};
  std::string path = temp_path("units.txt");
  write_units(seqs, path);
  auto back = read_units(path);
  REQUIRE(back.size() == 3);
  CHECK(back[0].units == seqs[0].units);
  CHECK(back[1].units.empty());
  CHECK(back[2].units == seqs[2].units);
  {
    std::ofstream os(path);
    os << "1 2 3\n4 x 5\n";
  }
  try {
    read_units(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("noise-free pipeline yields one unit per surface phoneme") {
  // With centroids equal to the prototypes and all noise off, quantization
  // inverts rendering exactly.
  PhonemeInventory inv = PhonemeInventory::make(12, 2, 9);
  Mat protos = phoneme_prototypes(inv, 6, 1.5, 10);
  RenderConfig rc;
  rc.dim = 6;
  rc.base_durations = make_base_durations(inv, 2, 6, 11);
  rc.inference_noise_scale = 0.0;
  Renderer renderer(inv, protos, rc);

  Codebook cb;
  cb.k = inv.size;
  cb.dim = 6;
  cb.centroids = protos;
  for (auto& v : cb.centroids.data) v = snap_f32(v);

  Sentence s{0, {1, 4, 2, 2, 9}};
  FeatureSequence f = renderer.render(s, SpeakerSpec::native(6), AccentSpec::identity(12, 6), 3);
  UnitSequence reduced = reduce(quantize(f, cb));
  // Adjacent repeated phonemes merge, exactly like reduce over units.
  std::vector<int> expected = {1, 4, 2, 9};
  CHECK(reduced.units == expected);
}
