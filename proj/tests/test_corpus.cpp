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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "corpus.hpp"

using namespace uac;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("unitac_test_" + name)).string();
}
}  // namespace

TEST_CASE("inventory construction and validation") {
  PhonemeInventory inv = PhonemeInventory::make(40, 3, 11);
  CHECK(inv.size == 40);
  CHECK(inv.filler == 39);
  for (int p = 0; p < inv.size; ++p) {
    CHECK(inv.confusion_map[p].size() == 3);
    std::set<int> seen;
    for (int q : inv.confusion_map[p]) {
      CHECK(q != p);
      CHECK(q != inv.filler);
      CHECK(q >= 0);
      CHECK(q < inv.size);
      seen.insert(q);
    }
    CHECK(seen.size() == 3);
  }
  PhonemeInventory again = PhonemeInventory::make(40, 3, 11);
  CHECK(inv.confusion_map == again.confusion_map);
  CHECK_THROWS_AS(PhonemeInventory::make(1, 1, 0), ConfigError);
  CHECK_THROWS_AS(PhonemeInventory::make(10, 9, 0), ConfigError);
}

TEST_CASE("degenerate length range forces exact length") {
  PhonemeInventory inv = PhonemeInventory::make(10, 2, 1);
  auto sentences = sample_sentences(1, 3, 3, inv, 7);
  REQUIRE(sentences.size() == 1);
  CHECK(sentences[0].phonemes.size() == 3);
}

TEST_CASE("sampling is deterministic under the seed") {
  PhonemeInventory inv = PhonemeInventory::make(40, 3, 2);
  auto a = sample_sentences(1000, 5, 30, inv, 123);
  auto b = sample_sentences(1000, 5, 30, inv, 123);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].phonemes == b[i].phonemes);
  }
  auto c = sample_sentences(1000, 5, 30, inv, 124);
  bool any_diff = false;
  for (size_t i = 0; i < a.size(); ++i) any_diff |= (a[i].phonemes != c[i].phonemes);
  CHECK(any_diff);
}

TEST_CASE("mean sentence length matches uniform expectation") {
  // E[uniform(5..30)] = 17.5.
  PhonemeInventory inv = PhonemeInventory::make(40, 3, 5);
  auto sentences = sample_sentences(10000, 5, 30, inv, 9);
  double mean = 0;
  for (const auto& s : sentences) mean += static_cast<double>(s.phonemes.size());
  mean /= static_cast<double>(sentences.size());
  CHECK(mean > 17.0);
  CHECK(mean < 18.0);
}

TEST_CASE("sampled content never contains the filler symbol") {
  PhonemeInventory inv = PhonemeInventory::make(12, 2, 3);
  auto sentences = sample_sentences(500, 5, 20, inv, 4);
  std::set<int> used;
  for (const auto& s : sentences) {
    for (int p : s.phonemes) {
      CHECK(p != inv.filler);
      used.insert(p);
    }
  }
  CHECK(used.size() == static_cast<size_t>(inv.content_count()));
}

TEST_CASE("sampling rejects invalid configuration") {
  PhonemeInventory inv = PhonemeInventory::make(10, 2, 1);
  CHECK_THROWS_AS(sample_sentences(0, 5, 10, inv, 1), ConfigError);
  CHECK_THROWS_AS(sample_sentences(5, 0, 10, inv, 1), ConfigError);
  CHECK_THROWS_AS(sample_sentences(5, 10, 5, inv, 1), ConfigError);
}

TEST_CASE("split honors the paper ratio") {
  PhonemeInventory inv = PhonemeInventory::make(10, 2, 1);
  auto sentences = sample_sentences(1001, 5, 10, inv, 3);
  auto [train, val] = split_train_val(sentences, 1000, 1, 17);
  CHECK(train.size() == 1000);
  CHECK(val.size() == 1);
}

TEST_CASE("even split is disjoint") {
  PhonemeInventory inv = PhonemeInventory::make(10, 2, 1);
  auto sentences = sample_sentences(10, 5, 10, inv, 3);
  auto [train, val] = split_train_val(sentences, 1, 1, 5);
  CHECK(train.size() == 5);
  CHECK(val.size() == 5);
  std::set<int> train_ids, val_ids;
  for (const auto& s : train) train_ids.insert(s.id);
  for (const auto& s : val) val_ids.insert(s.id);
  for (int id : val_ids) CHECK(train_ids.count(id) == 0);
}

TEST_CASE("split is a partition respecting integer rounding") {
  PhonemeInventory inv = PhonemeInventory::make(10, 2, 1);
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    int n = static_cast<int>(rng.uniform_int(5, 400));
    int tp = static_cast<int>(rng.uniform_int(1, 20));
    int vp = static_cast<int>(rng.uniform_int(1, 4));
    if (n < tp + vp) continue;
    auto sentences = sample_sentences(n, 5, 8, inv, trial);
    auto [train, val] = split_train_val(sentences, tp, vp, trial * 31);
    CHECK(train.size() + val.size() == sentences.size());
    size_t expected_val =
        static_cast<size_t>(static_cast<int64_t>(n) * vp / (static_cast<int64_t>(tp) + vp));
    CHECK(val.size() == expected_val);  // remainder goes to train
    std::set<int> ids;
    for (const auto& s : train) ids.insert(s.id);
    for (const auto& s : val) ids.insert(s.id);
    CHECK(ids.size() == sentences.size());
  }
}

TEST_CASE("split is deterministic and rejects bad input") {
  PhonemeInventory inv = PhonemeInventory::make(10, 2, 1);
  auto sentences = sample_sentences(30, 5, 10, inv, 3);
  auto [t1, v1] = split_train_val(sentences, 3, 1, 9);
  auto [t2, v2] = split_train_val(sentences, 3, 1, 9);
  REQUIRE(t1.size() == t2.size());
  for (size_t i = 0; i < t1.size(); ++i) CHECK(t1[i].id == t2[i].id);

  CHECK_THROWS_AS(split_train_val({}, 1, 1, 0), ConfigError);
  CHECK_THROWS_AS(split_train_val(sentences, 0, 1, 0), ConfigError);
  CHECK_THROWS_AS(split_train_val(sentences, 40, 1, 0), ConfigError);
}

TEST_CASE("manifest round trip preserves every field") {
  PhonemeInventory inv = PhonemeInventory::make(20, 2, 6);
  auto sentences = sample_sentences(50, 5, 15, inv, 21);
  Manifest m;
  for (size_t i = 0; i < sentences.size(); ++i) {
    Role role = i % 3 == 0 ? Role::Train : (i % 3 == 1 ? Role::Val : Role::Test);
    m.records.push_back(ManifestRecord{sentences[i].id, role, sentences[i].phonemes});
  }
  std::string path = temp_path("manifest.txt");
  write_manifest(m, path);
  Manifest back = read_manifest(path);
  REQUIRE(back.records.size() == m.records.size());
  for (size_t i = 0; i < m.records.size(); ++i) {
    CHECK(back.records[i].sentence_id == m.records[i].sentence_id);
    CHECK(back.records[i].role == m.records[i].role);
    CHECK(back.records[i].phonemes == m.records[i].phonemes);
  }
  std::remove(path.c_str());
}

TEST_CASE("manifest parse errors report the line number") {
  std::string path = temp_path("manifest_bad.txt");
  {
    std::ofstream os(path);
    os << "0 train 1 2 3\n";
    os << "1 nonsense 4 5\n";
  }
  try {
    read_manifest(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(read_manifest(temp_path("does_not_exist.txt")), DataError);
}

TEST_CASE("manifest validation rejects duplicates") {
  Manifest m;
  m.records.push_back(ManifestRecord{1, Role::Train, {1, 2}});
  m.records.push_back(ManifestRecord{1, Role::Val, {3}});
  CHECK_THROWS_AS(m.validate(), DataError);
}
