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

namespace uac {

/// Closed set of phoneme ids 0..size-1. One symbol (by default the last) is
/// reserved as the filler used to model disfluencies; content sentences never
/// contain it. confusion_map[p] lists the phonemes an accent may substitute
/// for p.
struct PhonemeInventory {
  int size = 40;
  int filler = 39;
  std::vector<std::vector<int>> confusion_map;

  static PhonemeInventory make(int size, int confusables_per_phoneme, uint64_t seed);
  int content_count() const { return size - 1; }
  void validate() const;
};

struct Sentence {
  int id = -1;
  std::vector<int> phonemes;
};

enum class Role { Train, Val, Test };

const char* role_name(Role r);
Role role_from_name(const std::string& s);

struct ManifestRecord {
  int sentence_id = -1;
  Role role = Role::Train;
  std::vector<int> phonemes;
};

/// Line-delimited sentence listing: `<sentence_id> <role> <p0> <p1> ...`.
struct Manifest {
  std::vector<ManifestRecord> records;

  void validate() const;  // ids unique, sentences nonempty
  std::vector<Sentence> sentences(Role role) const;
  std::vector<Sentence> all_sentences() const;
};

Manifest manifest_from(const std::vector<Sentence>& sentences, Role role);

std::vector<Sentence> sample_sentences(int n, int len_min, int len_max,
                                       const PhonemeInventory& inventory, uint64_t seed);

std::pair<std::vector<Sentence>, std::vector<Sentence>> split_train_val(
    const std::vector<Sentence>& sentences, int train_parts, int val_parts, uint64_t seed);

void write_manifest(const Manifest& manifest, const std::string& path);
Manifest read_manifest(const std::string& path);

}  // namespace uac
