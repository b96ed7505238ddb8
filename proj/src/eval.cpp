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

#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace uac::eval {

double perplexity(const pc::PCModel& model, const std::vector<ParallelPair>& pairs, int threads) {
  return pc::corpus_perplexity(model, pairs, threads);
}

int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double unit_error_rate(const UnitSequence& hyp, const UnitSequence& ref) {
  if (ref.units.empty()) throw DataError("unit_error_rate: empty reference");
  return static_cast<double>(levenshtein(hyp.units, ref.units)) /
         static_cast<double>(ref.units.size());
}

double phoneme_recovery(const UnitSequence& hyp_units, const std::vector<int>& unit_to_phoneme,
                        const std::vector<int>& ref_phonemes) {
  if (ref_phonemes.empty()) throw DataError("phoneme_recovery: empty reference");
  std::vector<int> hyp_phonemes;
  hyp_phonemes.reserve(hyp_units.units.size());
  for (int u : hyp_units.units) {
    int p = (u >= 0 && u < static_cast<int>(unit_to_phoneme.size()))
                ? unit_to_phoneme[static_cast<size_t>(u)]
                : -1;
    if (hyp_phonemes.empty() || hyp_phonemes.back() != p) hyp_phonemes.push_back(p);
  }
  double err = static_cast<double>(levenshtein(hyp_phonemes, ref_phonemes)) /
               static_cast<double>(ref_phonemes.size());
  return std::max(0.0, 1.0 - err);
}

double speaker_similarity(const FeatureSequence& converted, const FeatureSequence& source,
                          const Codebook& codebook) {
  SpeakerEmbedding a = speaker_embed(converted, codebook);
  SpeakerEmbedding b = speaker_embed(source, codebook);
  double na = 0, nb = 0, dot = 0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    na += a.v[i] * a.v[i];
    nb += b.v[i] * b.v[i];
    dot += a.v[i] * b.v[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double fluency_ratio(const UnitSequence& hyp, const UnitSequence& ref) {
  if (ref.units.empty()) throw DataError("fluency_ratio: empty reference");
  return static_cast<double>(hyp.units.size()) / static_cast<double>(ref.units.size());
}

EvalReport run_eval(const pc::PCModel& model, const std::vector<EvalItem>& items,
                    const Codebook& codebook, const UnitDecoder& decoder,
                    const std::vector<int>& unit_to_phoneme, const EvalOptions& options) {
  if (items.empty()) throw DataError("run_eval: empty test set");

  struct PerItem {
    int accent = 0;
    double nll = 0;
    int64_t tokens = 0;
    int64_t edit = 0;
    int64_t ref_len = 0;
    double phoneme_acc = 0;
    double cosine = 0;
    double fluency = 0;
  };
  std::vector<PerItem> rows(items.size());
  int max_len = pc::default_max_len(model.cfg, options.max_len_mult);

  parallel_for(static_cast<int64_t>(items.size()), options.threads, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      const EvalItem& item = items[static_cast<size_t>(i)];
      PerItem& r = rows[static_cast<size_t>(i)];
      r.accent = item.pair.meta.accent_id;

      std::vector<ParallelPair> one{item.pair};
      int64_t toks = 0;
      r.nll = pc::teacher_forced_nll(model, one, 1, &toks);
      r.tokens = toks;

      pc::PCScorer scorer(model, item.pair.input.frames);
      std::vector<pc::Hypothesis> hyps =
          pc::beam_decode(scorer, options.beam, max_len, options.length_norm);
      const UnitSequence& hyp = hyps.front().units;

      r.edit = levenshtein(hyp.units, item.pair.target.units);
      r.ref_len = static_cast<int64_t>(item.pair.target.units.size());
      r.phoneme_acc = phoneme_recovery(hyp, unit_to_phoneme, item.ref_phonemes);
      r.fluency = fluency_ratio(hyp, item.pair.target);

      SpeakerEmbedding embedding = speaker_embed(item.pair.input, codebook);
      FeatureSequence converted = synthesize(hyp, embedding, decoder);
      r.cosine = speaker_similarity(converted, item.pair.input, codebook);
    }
  });

  struct Accumulator {
    int64_t pairs = 0;
    double nll = 0;
    int64_t tokens = 0;
    int64_t edit = 0;
    int64_t ref_len = 0;
    double phoneme_acc = 0;
    double cosine = 0;
    double fluency = 0;

    void add(const PerItem& r) {
      ++pairs;
      nll += r.nll;
      tokens += r.tokens;
      edit += r.edit;
      ref_len += r.ref_len;
      phoneme_acc += r.phoneme_acc;
      cosine += r.cosine;
      fluency += r.fluency;
    }
    MetricRow row() const {
      MetricRow m;
      m.pairs = pairs;
      m.ppl = std::exp(nll / static_cast<double>(tokens));
      m.uer = static_cast<double>(edit) / static_cast<double>(ref_len);
      m.phoneme_accuracy = phoneme_acc / static_cast<double>(pairs);
      m.speaker_cosine = cosine / static_cast<double>(pairs);
      m.fluency_ratio = fluency / static_cast<double>(pairs);
      return m;
    }
  };

  Accumulator overall;
  std::map<int, Accumulator> per_accent;
  for (const auto& r : rows) {
    overall.add(r);
    per_accent[r.accent].add(r);
  }

  EvalReport report;
  report.overall = overall.row();
  for (const auto& [accent, acc] : per_accent) report.per_accent[accent] = acc.row();
  return report;
}

namespace {

void print_row(std::ostream& os, const std::string& label, const MetricRow& m) {
  os << std::left << std::setw(12) << label << std::right << std::fixed << std::setprecision(4)
     << std::setw(8) << m.pairs << std::setw(12) << m.ppl << std::setw(12) << m.uer
     << std::setw(12) << m.phoneme_accuracy << std::setw(12) << m.speaker_cosine << std::setw(12)
     << m.fluency_ratio << '\n';
}

nlohmann::json row_json(const std::string& scope, const MetricRow& m) {
  nlohmann::json j;
  j["scope"] = scope;
  j["pairs"] = m.pairs;
  j["ppl"] = m.ppl;
  j["uer"] = m.uer;
  j["phoneme_accuracy"] = m.phoneme_accuracy;
  j["speaker_cosine"] = m.speaker_cosine;
  j["fluency_ratio"] = m.fluency_ratio;
  return j;
}

}  // namespace

void write_report(const EvalReport& report, const std::string& text_path,
                  const std::string& jsonl_path) {
  {
    std::ofstream os(text_path, std::ios::binary);
    if (!os) throw DataError("cannot open report for writing: " + text_path);
    os << std::left << std::setw(12) << "scope" << std::right << std::setw(8) << "pairs"
       << std::setw(12) << "ppl" << std::setw(12) << "uer" << std::setw(12) << "phon_acc"
       << std::setw(12) << "spk_cos" << std::setw(12) << "fluency" << '\n';
    print_row(os, "all", report.overall);
    for (const auto& [accent, row] : report.per_accent) {
      print_row(os, "accent:" + std::to_string(accent), row);
    }
    if (!os) throw DataError("failed writing report: " + text_path);
  }
  {
    std::ofstream os(jsonl_path, std::ios::binary);
    if (!os) throw DataError("cannot open report for writing: " + jsonl_path);
    os << row_json("all", report.overall).dump() << '\n';
    for (const auto& [accent, row] : report.per_accent) {
      os << row_json("accent:" + std::to_string(accent), row).dump() << '\n';
    }
    if (!os) throw DataError("failed writing report: " + jsonl_path);
  }
}

}  // namespace uac::eval
