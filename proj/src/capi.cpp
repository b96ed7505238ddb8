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

#include "unitac/unitac.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

struct uac_context {
  json config = json::object();
  int threads = 1;
  std::string last_error;
};

struct uac_codebook {
  uac::Codebook v;
};
struct uac_features {
  uac::FeatureSequence v;
};
struct uac_units {
  uac::UnitSequence v;
};
struct uac_unit_decoder {
  uac::UnitDecoder v;
};
struct uac_model {
  uac::pc::PCModel v;
};

namespace {

template <typename F>
uac_status guarded(uac_context* ctx, F&& fn) {
  if (!ctx) return UAC_ERR_CONFIG;
  try {
    fn();
    ctx->last_error.clear();
    return UAC_OK;
  } catch (const uac::ConfigError& e) {
    ctx->last_error = e.what();
    return UAC_ERR_CONFIG;
  } catch (const uac::NumericError& e) {
    ctx->last_error = e.what();
    return UAC_ERR_NUMERIC;
  } catch (const uac::DataError& e) {
    ctx->last_error = e.what();
    return UAC_ERR_DATA;
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return UAC_ERR_DATA;
  }
}

const char* require(const char* arg, const char* what) {
  if (!arg || !*arg) throw uac::ConfigError(std::string("missing required argument: ") + what);
  return arg;
}

uac::pipeline::ExperimentConfig experiment_config(const uac_context* ctx) {
  return uac::pipeline::ExperimentConfig::from_json_text(ctx->config.dump());
}

uac::pipeline::World build_world(const uac_context* ctx) {
  return uac::pipeline::World::build(experiment_config(ctx).world);
}

std::string padded_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08d.feat", id);
  return buf;
}

std::vector<std::string> list_feature_files(const std::string& path) {
  std::vector<std::string> files;
  fs::path p(path);
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && entry.path().extension() == ".feat") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(p)) {
    files.push_back(p.string());
  }
  if (files.empty()) throw uac::DataError("no feature files at " + path);
  return files;
}

const uac::AccentSpec accent_by_id(const uac::pipeline::World& world, int accent_id) {
  if (accent_id == 0) {
    return uac::AccentSpec::identity(world.cfg.inventory_size, world.cfg.feature_dim);
  }
  for (const auto& a : world.accents) {
    if (a.id == accent_id) return a;
  }
  throw uac::ConfigError("unknown accent id " + std::to_string(accent_id));
}

const uac::SpeakerSpec speaker_by_id(const uac::pipeline::World& world, int speaker_id) {
  if (speaker_id == 0) return world.native_speaker();
  for (const auto& s : world.speakers) {
    if (s.id == speaker_id) return s;
  }
  throw uac::ConfigError("unknown speaker id " + std::to_string(speaker_id));
}

void write_train_log(const std::string& path, const std::vector<uac::pc::TrainLogRecord>& log) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw uac::DataError("cannot open training log for writing: " + path);
  for (const auto& rec : log) {
    json r;
    r["update"] = rec.update;
    r["loss"] = rec.loss;
    r["lr"] = rec.lr;
    if (rec.val_ppl >= 0) r["val_ppl"] = rec.val_ppl;
    os << r.dump() << '\n';
  }
  if (!os) throw uac::DataError("failed writing training log: " + path);
}

}  // namespace

extern "C" {

const char* uac_version(void) { return "0.1.0"; }

uac_context* uac_context_create(void) {
  auto* ctx = new uac_context();
  unsigned hw = std::thread::hardware_concurrency();
  ctx->threads = hw ? static_cast<int>(hw) : 1;
  return ctx;
}

void uac_context_destroy(uac_context* ctx) { delete ctx; }

const char* uac_last_error(const uac_context* ctx) {
  return ctx ? ctx->last_error.c_str() : "null context";
}

uac_status uac_context_load_config(uac_context* ctx, const char* path) {
  return guarded(ctx, [&] {
    std::ifstream is(require(path, "config path"), std::ios::binary);
    if (!is) throw uac::DataError(std::string("cannot open config: ") + path);
    std::stringstream ss;
    ss << is.rdbuf();
    json loaded;
    try {
      loaded = json::parse(ss.str());
    } catch (const json::exception& e) {
      throw uac::DataError(std::string("bad config JSON in ") + path + ": " + e.what());
    }
    ctx->config.merge_patch(loaded);
    // Validate eagerly so a broken file fails at load time.
    experiment_config(ctx);
  });
}

uac_status uac_context_set_option(uac_context* ctx, const char* key, const char* value) {
  return guarded(ctx, [&] {
    std::string k = require(key, "option key");
    require(value, "option value");
    json v;
    try {
      v = json::parse(value);
    } catch (const json::exception&) {
      v = std::string(value);  // plain strings need no quoting
    }
    json* node = &ctx->config;
    size_t start = 0;
    while (true) {
      size_t dot = k.find('.', start);
      std::string part = k.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw uac::ConfigError("bad option key '" + k + "'");
      if (dot == std::string::npos) {
        (*node)[part] = v;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
    experiment_config(ctx);
  });
}

uac_status uac_context_set_threads(uac_context* ctx, int threads) {
  return guarded(ctx, [&] {
    if (threads < 1) throw uac::ConfigError("threads must be >= 1");
    ctx->threads = threads;
  });
}

uac_status uac_corpus_sample(uac_context* ctx, int n, int len_min, int len_max, uint64_t seed,
                             const char* out_manifest) {
  return guarded(ctx, [&] {
    uac::pipeline::World world = build_world(ctx);
    auto sentences = uac::sample_sentences(n, len_min, len_max, world.inventory, seed);
    uac::write_manifest(uac::manifest_from(sentences, uac::Role::Train),
                        require(out_manifest, "output manifest"));
  });
}

uac_status uac_corpus_split(uac_context* ctx, const char* manifest, int train_parts,
                            int val_parts, uint64_t seed, const char* out_train,
                            const char* out_val) {
  return guarded(ctx, [&] {
    uac::Manifest m = uac::read_manifest(require(manifest, "manifest"));
    auto [train, val] = uac::split_train_val(m.all_sentences(), train_parts, val_parts, seed);
    uac::write_manifest(uac::manifest_from(train, uac::Role::Train),
                        require(out_train, "train manifest"));
    uac::write_manifest(uac::manifest_from(val, uac::Role::Val), require(out_val, "val manifest"));
  });
}

uac_status uac_synth_render(uac_context* ctx, const char* manifest, int accent_id, int speaker_id,
                            uint64_t seed, const char* out_dir) {
  return guarded(ctx, [&] {
    uac::pipeline::World world = build_world(ctx);
    uac::Manifest m = uac::read_manifest(require(manifest, "manifest"));
    uac::AccentSpec accent = accent_by_id(world, accent_id);
    uac::SpeakerSpec speaker = speaker_by_id(world, speaker_id);
    fs::create_directories(require(out_dir, "output directory"));
    for (const auto& rec : m.records) {
      uac::Sentence s{rec.sentence_id, rec.phonemes};
      uac::FeatureSequence f = world.renderer.render(
          s, speaker, accent, uac::derive_seed(seed, {static_cast<uint64_t>(s.id)}));
      uac::write_features(f, (fs::path(out_dir) / padded_name(s.id)).string());
    }
  });
}

uac_status uac_synth_native(uac_context* ctx, const char* manifest, const char* out_dir) {
  return guarded(ctx, [&] {
    uac::pipeline::World world = build_world(ctx);
    uac::Manifest m = uac::read_manifest(require(manifest, "manifest"));
    fs::create_directories(require(out_dir, "output directory"));
    for (const auto& rec : m.records) {
      uac::Sentence s{rec.sentence_id, rec.phonemes};
      uac::FeatureSequence f = world.renderer.native_render(s);
      uac::write_features(f, (fs::path(out_dir) / padded_name(s.id)).string());
    }
  });
}

uac_status uac_s2u_fit(uac_context* ctx, const char* features_dir, int k, int max_iters,
                       double tol, uint64_t seed, const char* out_codebook) {
  return guarded(ctx, [&] {
    auto files = list_feature_files(require(features_dir, "features directory"));
    std::vector<uac::FeatureSequence> all;
    all.reserve(files.size());
    int64_t total = 0;
    for (const auto& f : files) {
      all.push_back(uac::read_features(f));
      total += all.back().length();
    }
    uac::Mat frames(static_cast<int>(total), all.front().dim());
    int64_t t = 0;
    for (const auto& f : all) {
      if (f.dim() != frames.cols) throw uac::DataError("inconsistent feature dims under " +
                                                       std::string(features_dir));
      std::copy_n(f.frames.data.data(), f.frames.data.size(), frames.row(static_cast<int>(t)));
      t += f.length();
    }
    uac::KmeansOptions opts;
    opts.max_iters = max_iters;
    opts.tol = tol;
    opts.threads = ctx->threads;
    uac::Codebook cb = uac::fit_kmeans(frames, k, opts, seed);
    uac::write_codebook(cb, require(out_codebook, "output codebook"));
  });
}

uac_status uac_s2u_quantize(uac_context* ctx, const char* codebook, const char* features_path,
                            int reduce_flag, const char* out_units) {
  return guarded(ctx, [&] {
    uac::Codebook cb = uac::read_codebook(require(codebook, "codebook"));
    auto files = list_feature_files(require(features_path, "features path"));
    std::vector<uac::UnitSequence> out;
    out.reserve(files.size());
    for (const auto& f : files) {
      uac::UnitSequence u = uac::quantize(uac::read_features(f), cb);
      out.push_back(reduce_flag ? uac::reduce(u) : u);
    }
    uac::write_units(out, require(out_units, "output unit file"));
  });
}

uac_status uac_u2s_fit(uac_context* ctx, const char* features_dir, const char* codebook,
                       const char* out_decoder) {
  return guarded(ctx, [&] {
    uac::Codebook cb = uac::read_codebook(require(codebook, "codebook"));
    auto files = list_feature_files(require(features_dir, "features directory"));
    std::vector<uac::FeatureSequence> feats;
    std::vector<uac::UnitSequence> units;
    feats.reserve(files.size());
    units.reserve(files.size());
    for (const auto& f : files) {
      feats.push_back(uac::read_features(f));
      units.push_back(uac::quantize(feats.back(), cb));
    }
    std::vector<std::pair<const uac::FeatureSequence*, const uac::UnitSequence*>> aligned;
    for (size_t i = 0; i < feats.size(); ++i) aligned.emplace_back(&feats[i], &units[i]);
    uac::UnitDecoder dec = uac::fit_unit_decoder(aligned);
    uac::write_unit_decoder(dec, require(out_decoder, "output decoder"));
  });
}

uac_status uac_u2s_synth(uac_context* ctx, const char* decoder, const char* units_file, int line,
                         const char* speaker_from, const char* codebook,
                         const char* out_features) {
  return guarded(ctx, [&] {
    uac::UnitDecoder dec = uac::read_unit_decoder(require(decoder, "decoder"));
    auto sequences = uac::read_units(require(units_file, "units file"));
    if (line < 0 || line >= static_cast<int>(sequences.size())) {
      throw uac::ConfigError("unit file line " + std::to_string(line) + " out of range");
    }
    uac::SpeakerEmbedding embedding;
    embedding.v.assign(static_cast<size_t>(dec.dim), 0.0);
    if (speaker_from && *speaker_from) {
      uac::Codebook cb = uac::read_codebook(require(codebook, "codebook (for --speaker-from)"));
      embedding = uac::speaker_embed(uac::read_features(speaker_from), cb);
    }
    uac::UnitSequence seq = sequences[static_cast<size_t>(line)];
    seq.reduced = true;
    uac::FeatureSequence out = uac::synthesize(seq, embedding, dec);
    uac::write_features(out, require(out_features, "output features"));
  });
}

uac_status uac_augment_build(uac_context* ctx, const char* manifest, const char* strategy,
                             int budget, const char* codebook, uint64_t seed,
                             const char* out_dir) {
  return guarded(ctx, [&] {
    uac::pipeline::World world = build_world(ctx);
    uac::Manifest m = uac::read_manifest(require(manifest, "manifest"));
    uac::Codebook cb = uac::read_codebook(require(codebook, "codebook"));
    uac::AugmentStrategySpec spec;
    spec.kind = uac::strategy_from_name(require(strategy, "strategy"));
    spec.accents_per_sentence = static_cast<int>(world.accents.size());
    auto sentences = m.all_sentences();
    auto pairs = uac::build_parallel_corpus(sentences, spec, world.accents, world.speakers,
                                            budget, world.renderer, cb, world.cfg.noise, seed,
                                            ctx->threads);
    json meta;
    meta["strategy"] = strategy;
    meta["budget"] = budget;
    meta["k"] = cb.k;
    meta["feature_dim"] = cb.dim;
    uac::write_corpus(pairs, sentences, require(out_dir, "output directory"), meta.dump());
  });
}

uac_status uac_pc_pretrain_dec(uac_context* ctx, const char* units_file,
                               const char* out_checkpoint) {
  return guarded(ctx, [&] {
    auto cfg = experiment_config(ctx);
    auto sequences = uac::read_units(require(units_file, "units file"));
    for (auto& s : sequences) s.reduced = true;
    uac::pc::PCModel model(cfg.model, uac::derive_seed(cfg.world.seed, {0xf17}));
    uac::pc::TrainConfig pre = cfg.pretrain;
    pre.threads = ctx->threads;
    pre.seed = uac::derive_seed(cfg.world.seed, {0xf18});
    uac::pc::pretrain_decoder_lm(model, sequences, pre);
    model.save(require(out_checkpoint, "output checkpoint"));
  });
}

uac_status uac_pc_pretrain_enc(uac_context* ctx, const char* features_dir, const char* codebook,
                               const char* out_checkpoint) {
  return guarded(ctx, [&] {
    auto cfg = experiment_config(ctx);
    uac::Codebook cb = uac::read_codebook(require(codebook, "codebook"));
    auto files = list_feature_files(require(features_dir, "features directory"));
    std::vector<uac::FeatureSequence> feats;
    feats.reserve(files.size());
    for (const auto& f : files) feats.push_back(uac::read_features(f));
    uac::pc::PCModel model(cfg.model, uac::derive_seed(cfg.world.seed, {0xf17}));
    uac::pc::TrainConfig pre = cfg.pretrain;
    pre.threads = ctx->threads;
    pre.seed = uac::derive_seed(cfg.world.seed, {0xf19});
    uac::pc::pretrain_encoder_masked(model, feats, cb, cfg.mask, pre);
    model.save(require(out_checkpoint, "output checkpoint"));
  });
}

uac_status uac_pc_train(uac_context* ctx, const char* corpus_dir, const char* val_dir,
                        const char* init_from, const char* out_checkpoint, const char* out_log) {
  return guarded(ctx, [&] {
    auto cfg = experiment_config(ctx);
    auto corpus = uac::read_corpus(require(corpus_dir, "corpus directory"));
    std::vector<uac::ParallelPair> val;
    if (val_dir && *val_dir) val = uac::read_corpus(val_dir);

    uac::pc::PCModel model =
        (init_from && *init_from)
            ? uac::pc::PCModel::load(init_from)
            : uac::pc::PCModel(cfg.model, uac::derive_seed(cfg.world.seed, {0xf17}));
    uac::pc::TrainConfig tc = cfg.train;
    tc.threads = ctx->threads;
    tc.seed = uac::derive_seed(cfg.world.seed, {0xf20});
    uac::pc::TrainResult result = uac::pc::train(model, corpus, val, tc);
    model.save(require(out_checkpoint, "output checkpoint"));
    if (out_log && *out_log) write_train_log(out_log, result.log);
  });
}

uac_status uac_codebook_load(uac_context* ctx, const char* path, uac_codebook** out) {
  return guarded(ctx, [&] {
    if (!out) throw uac::ConfigError("null output handle");
    *out = new uac_codebook{uac::read_codebook(require(path, "codebook path"))};
  });
}
void uac_codebook_free(uac_codebook* cb) { delete cb; }
int uac_codebook_k(const uac_codebook* cb) { return cb ? cb->v.k : 0; }
int uac_codebook_dim(const uac_codebook* cb) { return cb ? cb->v.dim : 0; }

uac_status uac_features_load(uac_context* ctx, const char* path, uac_features** out) {
  return guarded(ctx, [&] {
    if (!out) throw uac::ConfigError("null output handle");
    *out = new uac_features{uac::read_features(require(path, "features path"))};
  });
}

uac_status uac_features_save(uac_context* ctx, const uac_features* f, const char* path) {
  return guarded(ctx, [&] {
    if (!f) throw uac::ConfigError("null features handle");
    uac::write_features(f->v, require(path, "output path"));
  });
}

void uac_features_free(uac_features* f) { delete f; }
int uac_features_frames(const uac_features* f) { return f ? f->v.length() : 0; }
int uac_features_dim(const uac_features* f) { return f ? f->v.dim() : 0; }

uac_status uac_features_copy(uac_context* ctx, const uac_features* f, double* out) {
  return guarded(ctx, [&] {
    if (!f || !out) throw uac::ConfigError("null argument");
    std::copy(f->v.frames.data.begin(), f->v.frames.data.end(), out);
  });
}

void uac_units_free(uac_units* u) { delete u; }
int uac_units_length(const uac_units* u) {
  return u ? static_cast<int>(u->v.units.size()) : 0;
}

uac_status uac_units_copy(uac_context* ctx, const uac_units* u, int32_t* out) {
  return guarded(ctx, [&] {
    if (!u || !out) throw uac::ConfigError("null argument");
    for (size_t i = 0; i < u->v.units.size(); ++i) out[i] = u->v.units[i];
  });
}

uac_status uac_unit_decoder_load(uac_context* ctx, const char* path, uac_unit_decoder** out) {
  return guarded(ctx, [&] {
    if (!out) throw uac::ConfigError("null output handle");
    *out = new uac_unit_decoder{uac::read_unit_decoder(require(path, "decoder path"))};
  });
}
void uac_unit_decoder_free(uac_unit_decoder* d) { delete d; }

uac_status uac_model_load(uac_context* ctx, const char* path, uac_model** out) {
  return guarded(ctx, [&] {
    if (!out) throw uac::ConfigError("null output handle");
    *out = new uac_model{uac::pc::PCModel::load(require(path, "model path"))};
  });
}
void uac_model_free(uac_model* m) { delete m; }

uac_status uac_quantize(uac_context* ctx, const uac_codebook* cb, const uac_features* f,
                        int reduce_flag, uac_units** out) {
  return guarded(ctx, [&] {
    if (!cb || !f || !out) throw uac::ConfigError("null argument");
    uac::UnitSequence u = uac::quantize(f->v, cb->v);
    *out = new uac_units{reduce_flag ? uac::reduce(u) : u};
  });
}

uac_status uac_speaker_embed(uac_context* ctx, const uac_codebook* cb, const uac_features* f,
                             double* out) {
  return guarded(ctx, [&] {
    if (!cb || !f || !out) throw uac::ConfigError("null argument");
    uac::SpeakerEmbedding e = uac::speaker_embed(f->v, cb->v);
    std::copy(e.v.begin(), e.v.end(), out);
  });
}

uac_status uac_synthesize(uac_context* ctx, const uac_unit_decoder* d, const int32_t* units,
                          int n_units, const double* embedding, uac_features** out) {
  return guarded(ctx, [&] {
    if (!d || !out || (n_units > 0 && !units)) throw uac::ConfigError("null argument");
    uac::UnitSequence seq;
    seq.reduced = true;
    seq.units.assign(units, units + n_units);
    uac::SpeakerEmbedding e;
    if (embedding) {
      e.v.assign(embedding, embedding + d->v.dim);
    } else {
      e.v.assign(static_cast<size_t>(d->v.dim), 0.0);
    }
    *out = new uac_features{uac::synthesize(seq, e, d->v)};
  });
}

uac_status uac_decode(uac_context* ctx, const uac_model* m, const uac_features* f, int beam,
                      int length_norm, int max_len, double max_len_mult, uac_units** out,
                      double* score) {
  return guarded(ctx, [&] {
    if (!m || !f || !out) throw uac::ConfigError("null argument");
    uac::pc::PCScorer scorer(m->v, f->v.frames);
    double mult = max_len_mult > 0 ? max_len_mult : 4.0;
    int cap = max_len > 0 ? max_len : uac::pc::default_max_len(m->v.cfg, mult);
    auto hyps = uac::pc::beam_decode(scorer, beam, cap, length_norm != 0);
    if (score) *score = hyps.front().score;
    *out = new uac_units{hyps.front().units};
  });
}

uac_status uac_convert(uac_context* ctx, const uac_model* m, const uac_codebook* cb,
                       const uac_unit_decoder* d, const uac_features* input,
                       uac_units** out_units, uac_features** out_features) {
  return guarded(ctx, [&] {
    if (!m || !cb || !d || !input || !out_units || !out_features) {
      throw uac::ConfigError("null argument");
    }
    auto result = uac::pipeline::convert(m->v, cb->v, d->v, input->v);
    *out_units = new uac_units{result.hypothesis.units};
    *out_features = new uac_features{std::move(result.output)};
  });
}

uac_status uac_eval_run(uac_context* ctx, const char* model, const char* codebook,
                        const char* decoder, const char* test_dir, int beam,
                        const char* report_path) {
  return guarded(ctx, [&] {
    uac::pc::PCModel pc_model = uac::pc::PCModel::load(require(model, "model"));
    uac::Codebook cb = uac::read_codebook(require(codebook, "codebook"));
    uac::UnitDecoder dec = uac::read_unit_decoder(require(decoder, "decoder"));
    auto pairs = uac::read_corpus(require(test_dir, "test corpus directory"));
    uac::Manifest manifest = uac::read_corpus_manifest(test_dir);

    // Reference phonemes per sentence and the unit->phoneme map derived from
    // native renders of the same sentences.
    uac::pipeline::World world = build_world(ctx);
    std::vector<uac::FeatureSequence> native;
    native.reserve(manifest.records.size());
    std::unordered_map<int, const uac::ManifestRecord*> by_id;
    for (const auto& rec : manifest.records) {
      by_id[rec.sentence_id] = &rec;
      native.push_back(world.renderer.native_render(uac::Sentence{rec.sentence_id, rec.phonemes}));
    }
    std::vector<int> unit_to_phoneme = uac::unit_phoneme_map(cb, native);

    std::vector<uac::eval::EvalItem> items;
    items.reserve(pairs.size());
    for (auto& p : pairs) {
      auto it = by_id.find(p.meta.sentence_id);
      if (it == by_id.end()) {
        throw uac::DataError("test pair references sentence missing from the manifest");
      }
      uac::eval::EvalItem item;
      item.pair = std::move(p);
      item.ref_phonemes = it->second->phonemes;
      items.push_back(std::move(item));
    }

    uac::eval::EvalOptions opts;
    opts.beam = beam;
    opts.threads = ctx->threads;
    uac::eval::EvalReport report =
        uac::eval::run_eval(pc_model, items, cb, dec, unit_to_phoneme, opts);
    std::string text_path = require(report_path, "report path");
    uac::eval::write_report(report, text_path, text_path + ".jsonl");
  });
}

uac_status uac_experiment_run(uac_context* ctx, const char* out_dir, int verbose) {
  return guarded(ctx, [&] {
    auto cfg = experiment_config(ctx);
    std::function<void(const std::string&)> log;
    if (verbose) {
      log = [](const std::string& msg) { std::fprintf(stderr, "[experiment] %s\n", msg.c_str()); };
    }
    uac::pipeline::run_experiment(cfg, require(out_dir, "output directory"), ctx->threads, log);
  });
}

uac_status uac_convert_files(uac_context* ctx, const char* model, const char* codebook,
                             const char* decoder, const char* input_features,
                             const char* out_features, const char* out_units) {
  return guarded(ctx, [&] {
    uac::pc::PCModel pc_model = uac::pc::PCModel::load(require(model, "model"));
    uac::Codebook cb = uac::read_codebook(require(codebook, "codebook"));
    uac::UnitDecoder dec = uac::read_unit_decoder(require(decoder, "decoder"));
    uac::FeatureSequence input = uac::read_features(require(input_features, "input features"));
    auto result = uac::pipeline::convert(pc_model, cb, dec, input);
    uac::write_features(result.output, require(out_features, "output features"));
    uac::write_units({result.hypothesis.units}, require(out_units, "output units"));
  });
}

}  // extern "C"
