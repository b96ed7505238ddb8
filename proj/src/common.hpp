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

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace uac {

// Error taxonomy, mirrored 1:1 by the C API status codes and CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Seeding and random numbers.
//
// All distributions are implemented by hand on top of mt19937_64 so that
// sampled values are identical across platforms and standard libraries.
// Artifact files produced from the same (config, seed) must be byte-identical.
// ---------------------------------------------------------------------------

constexpr uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Mixes a base seed with a list of salts into an independent stream seed.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> salts) {
  uint64_t s = splitmix64(base);
  for (uint64_t v : salts) s = splitmix64(s ^ (v + 0x9e3779b97f4a7c15ULL));
  return s;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive, unbiased via rejection.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    if (hi < lo) throw ConfigError("uniform_int: empty range");
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(eng_());  // full 64-bit range
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return lo + static_cast<int64_t>(x % span);
  }

  // Standard normal via Box-Muller; caches the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles. Storage type only; numerics live with
// their modules.
// ---------------------------------------------------------------------------

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  bool empty() const { return rows == 0 || cols == 0; }
};

double squared_distance(const double* a, const double* b, int n);
bool all_finite(const double* a, size_t n);

// Runs body(begin, end) over [0, n) split into contiguous chunks, one per
// worker. Caller is responsible for making the result independent of the
// partition (e.g. by writing to disjoint slots).
void parallel_for(int64_t n, int threads, const std::function<void(int64_t, int64_t)>& body);

// ---------------------------------------------------------------------------
// Little-endian binary I/O for artifact files.
// ---------------------------------------------------------------------------

void put_u32(std::ostream& os, uint32_t v);
void put_u64(std::ostream& os, uint64_t v);
void put_f32(std::ostream& os, float v);
void put_f64(std::ostream& os, double v);
uint32_t get_u32(std::istream& is, const std::string& what);
uint64_t get_u64(std::istream& is, const std::string& what);
float get_f32(std::istream& is, const std::string& what);
double get_f64(std::istream& is, const std::string& what);
void put_magic(std::ostream& os, const char tag[4]);
void expect_magic(std::istream& is, const char tag[4], const std::string& what);

// Rounds through float, the on-disk precision of feature-like artifacts.
inline double snap_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace uac
