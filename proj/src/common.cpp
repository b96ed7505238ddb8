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

#include "common.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

namespace uac {

double squared_distance(const double* a, const double* b, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

bool all_finite(const double* a, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(a[i])) return false;
  }
  return true;
}

void parallel_for(int64_t n, int threads, const std::function<void(int64_t, int64_t)>& body) {
  if (n <= 0) return;
  if (threads < 1) threads = 1;
  int workers = static_cast<int>(std::min<int64_t>(threads, n));
  if (workers == 1) {
    body(0, n);
    return;
  }
  int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w) {
    int64_t begin = w * chunk;
    int64_t end = std::min<int64_t>(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(0, std::min<int64_t>(n, chunk));
  for (auto& t : pool) t.join();
}

namespace {

void put_bytes_le(std::ostream& os, uint64_t v, int nbytes) {
  char buf[8];
  for (int i = 0; i < nbytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, nbytes);
}

uint64_t get_bytes_le(std::istream& is, int nbytes, const std::string& what) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), nbytes);
  if (!is) throw DataError("truncated read while parsing " + what);
  uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void put_u32(std::ostream& os, uint32_t v) { put_bytes_le(os, v, 4); }
void put_u64(std::ostream& os, uint64_t v) { put_bytes_le(os, v, 8); }

void put_f32(std::ostream& os, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_bytes_le(os, bits, 4);
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_bytes_le(os, bits, 8);
}

uint32_t get_u32(std::istream& is, const std::string& what) {
  return static_cast<uint32_t>(get_bytes_le(is, 4, what));
}

uint64_t get_u64(std::istream& is, const std::string& what) { return get_bytes_le(is, 8, what); }

float get_f32(std::istream& is, const std::string& what) {
  uint32_t bits = static_cast<uint32_t>(get_bytes_le(is, 4, what));
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

double get_f64(std::istream& is, const std::string& what) {
  uint64_t bits = get_bytes_le(is, 8, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_magic(std::ostream& os, const char tag[4]) { os.write(tag, 4); }

void expect_magic(std::istream& is, const char tag[4], const std::string& what) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, tag, 4) != 0) {
    throw DataError("bad magic while parsing " + what);
  }
}

}  // namespace uac
