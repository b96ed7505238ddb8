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

#include "corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace uac {

PhonemeInventory PhonemeInventory::make(int size, int confusables_per_phoneme, uint64_t seed) {
  if (size < 2) throw ConfigError("inventory size must be at least 2");
  if (confusables_per_phoneme < 1 || confusables_per_phoneme > size - 2) {
    throw ConfigError("confusables per phoneme must be in [1, size-2]");
  }
  PhonemeInventory inv;
  inv.size = size;
  inv.filler = size - 1;
  inv.confusion_map.resize(static_cast<size_t>(size));
  Rng rng(derive_seed(seed, {0x1c0f}));
  for (int p = 0; p < size; ++p) {
    // Confusables are content phonemes distinct from the key; the filler is
    // never a substitution target.
    std::vector<int> candidates;
    candidates.reserve(static_cast<size_t>(size) - 1);
    for (int q = 0; q < size; ++q) {
      if (q != p && q != inv.filler) candidates.push_back(q);
    }
    rng.shuffle(candidates);
    candidates.resize(static_cast<size_t>(confusables_per_phoneme));
    inv.confusion_map[static_cast<size_t>(p)] = std::move(candidates);
  }
  inv.validate();
  return inv;
}

void PhonemeInventory::validate() const {
  if (size < 2) throw ConfigError("inventory size must be at least 2");
  if (filler < 0 || filler >= size) throw ConfigError("filler id outside inventory");
  if (confusion_map.size() != static_cast<size_t>(size)) {
    throw ConfigError("confusion map must cover every phoneme");
  }
  for (int p = 0; p < size; ++p) {
    for (int q : confusion_map[static_cast<size_t>(p)]) {
      if (q < 0 || q >= size || q == p) {
        throw ConfigError("confusable ids must be valid phonemes distinct from their key");
      }
    }
  }
}

const char* role_name(Role r) {
  switch (r) {
    case Role::Train: return "train";
    case Role::Val: return "val";
    case Role::Test: return "test";
  }
  return "train";
}

Role role_from_name(const std::string& s) {
  if (s == "train") return Role::Train;
  if (s == "val") return Role::Val;
  if (s == "test") return Role::Test;
  throw DataError("unknown manifest role '" + s + "'");
}

void Manifest::validate() const {
  std::unordered_set<int> seen;
  for (const auto& rec : records) {
    if (rec.phonemes.empty()) throw DataError("manifest record with empty sentence");
    if (!seen.insert(rec.sentence_id).second) {
      throw DataError("duplicate sentence id in manifest: " + std::to_string(rec.sentence_id));
    }
  }
}

std::vector<Sentence> Manifest::sentences(Role role) const {
  std::vector<Sentence> out;
  for (const auto& rec : records) {
    if (rec.role == role) out.push_back(Sentence{rec.sentence_id, rec.phonemes});
  }
  return out;
}

std::vector<Sentence> Manifest::all_sentences() const {
  std::vector<Sentence> out;
  out.reserve(records.size());
  for (const auto& rec : records) out.push_back(Sentence{rec.sentence_id, rec.phonemes});
  return out;
}

Manifest manifest_from(const std::vector<Sentence>& sentences, Role role) {
  Manifest m;
  m.records.reserve(sentences.size());
  for (const auto& s : sentences) m.records.push_back(ManifestRecord{s.id, role, s.phonemes});
  return m;
}

std::vector<Sentence> sample_sentences(int n, int len_min, int len_max,
                                       const PhonemeInventory& inventory, uint64_t seed) {
  if (n < 1) throw ConfigError("sample_sentences: n must be >= 1");
  if (len_min < 1 || len_max < len_min) throw ConfigError("sample_sentences: invalid length range");
  inventory.validate();
  if (inventory.content_count() < 1) throw ConfigError("sample_sentences: empty content inventory");

  Rng rng(derive_seed(seed, {0x5e27}));
  std::vector<Sentence> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Sentence s;
    s.id = i;
    int len = static_cast<int>(rng.uniform_int(len_min, len_max));
    s.phonemes.reserve(static_cast<size_t>(len));
    for (int j = 0; j < len; ++j) {
      // Uniform over content symbols; the filler slot is skipped.
      int p = static_cast<int>(rng.uniform_int(0, inventory.size - 2));
      if (p >= inventory.filler) ++p;
      s.phonemes.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::pair<std::vector<Sentence>, std::vector<Sentence>> split_train_val(
    const std::vector<Sentence>& sentences, int train_parts, int val_parts, uint64_t seed) {
  if (train_parts < 1 || val_parts < 1) throw ConfigError("split ratio parts must be positive");
  if (sentences.empty()) throw ConfigError("split_train_val: empty sentence list");
  int64_t total_parts = static_cast<int64_t>(train_parts) + val_parts;
  if (static_cast<int64_t>(sentences.size()) < total_parts) {
    throw ConfigError("split_train_val: fewer sentences than ratio parts");
  }

  // Remainder goes to train.
  size_t n = sentences.size();
  size_t n_val = static_cast<size_t>(static_cast<int64_t>(n) * val_parts / total_parts);
  size_t n_train = n - n_val;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, {0x3917}));
  rng.shuffle(order);

  std::vector<char> is_train(n, 0);
  for (size_t i = 0; i < n_train; ++i) is_train[order[i]] = 1;

  std::vector<Sentence> train, val;
  train.reserve(n_train);
  val.reserve(n_val);
  for (size_t i = 0; i < n; ++i) {
    if (is_train[i]) {
      train.push_back(sentences[i]);
    } else {
      val.push_back(sentences[i]);
    }
  }
  return {std::move(train), std::move(val)};
}

void write_manifest(const Manifest& manifest, const std::string& path) {
  manifest.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open manifest for writing: " + path);
  for (const auto& rec : manifest.records) {
    os << rec.sentence_id << ' ' << role_name(rec.role);
    for (int p : rec.phonemes) os << ' ' << p;
    os << '\n';
  }
  if (!os) throw DataError("failed writing manifest: " + path);
}

Manifest read_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open manifest: " + path);
  Manifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestRecord rec;
    std::string role;
    if (!(ls >> rec.sentence_id >> role)) {
      throw DataError("manifest parse error at " + path + ":" + std::to_string(line_no));
    }
    try {
      rec.role = role_from_name(role);
    } catch (const DataError&) {
      throw DataError("manifest parse error at " + path + ":" + std::to_string(line_no) +
                      ": unknown role '" + role + "'");
    }
    int p;
    while (ls >> p) rec.phonemes.push_back(p);
    if (!ls.eof()) {
      throw DataError("manifest parse error at " + path + ":" + std::to_string(line_no) +
                      ": phonemes must be integers");
    }
    if (rec.phonemes.empty()) {
      throw DataError("manifest parse error at " + path + ":" + std::to_string(line_no) +
                      ": empty sentence");
    }
    m.records.push_back(std::move(rec));
  }
  m.validate();
  return m;
}

}  // namespace uac
