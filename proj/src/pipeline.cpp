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

#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace uac::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

void WorldConfig::validate() const {
  if (inventory_size < 3) throw ConfigError("inventory_size must be >= 3");
  if (feature_dim < 2) throw ConfigError("feature_dim must be >= 2");
  if (separation <= 0) throw ConfigError("separation must be positive");
  if (duration_min < 1 || duration_max < duration_min) throw ConfigError("bad duration range");
  if (num_accents < 1) throw ConfigError("need at least one accent");
  if (num_speakers < 1) throw ConfigError("need at least one speaker");
  if (len_min < 1 || len_max < len_min) throw ConfigError("bad sentence length range");
  if (k < 2) throw ConfigError("K must be >= 2");
  if (substitution_prob < 0 || substitution_prob > 1 || filler_prob < 0 || filler_prob > 1) {
    throw ConfigError("probabilities must lie in [0,1]");
  }
  if (duration_mult_min <= 0 || duration_mult_max < duration_mult_min) {
    throw ConfigError("bad duration multiplier range");
  }
  if (native_sigma < 0 || accent_shift_scale < 0 || speaker_offset_bound < 0) {
    throw ConfigError("scales must be >= 0");
  }
}

namespace {

json world_to_json(const WorldConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["inventory_size"] = c.inventory_size;
  j["confusables_per_phoneme"] = c.confusables_per_phoneme;
  j["feature_dim"] = c.feature_dim;
  j["separation"] = c.separation;
  j["duration_min"] = c.duration_min;
  j["duration_max"] = c.duration_max;
  j["frame_period_ms"] = c.frame_period_ms;
  j["native_sigma"] = c.native_sigma;
  j["num_accents"] = c.num_accents;
  j["substitution_prob"] = c.substitution_prob;
  j["filler_prob"] = c.filler_prob;
  j["duration_mult_min"] = c.duration_mult_min;
  j["duration_mult_max"] = c.duration_mult_max;
  j["accent_shift_scale"] = c.accent_shift_scale;
  j["num_speakers"] = c.num_speakers;
  j["speaker_offset_bound"] = c.speaker_offset_bound;
  j["len_min"] = c.len_min;
  j["len_max"] = c.len_max;
  j["k"] = c.k;
  j["kmeans_max_iters"] = c.kmeans_max_iters;
  j["kmeans_tol"] = c.kmeans_tol;
  j["kmeans_max_frames"] = c.kmeans_max_frames;
  j["sigma_min"] = c.noise.sigma_min;
  j["sigma_max"] = c.noise.sigma_max;
  j["duration_noise_min"] = c.noise.duration_noise_min;
  j["duration_noise_max"] = c.noise.duration_noise_max;
  return j;
}

WorldConfig world_from_json(const json& j) {
  WorldConfig c;
  c.seed = j.value("seed", c.seed);
  c.inventory_size = j.value("inventory_size", c.inventory_size);
  c.confusables_per_phoneme = j.value("confusables_per_phoneme", c.confusables_per_phoneme);
  c.feature_dim = j.value("feature_dim", c.feature_dim);
  c.separation = j.value("separation", c.separation);
  c.duration_min = j.value("duration_min", c.duration_min);
  c.duration_max = j.value("duration_max", c.duration_max);
  c.frame_period_ms = j.value("frame_period_ms", c.frame_period_ms);
  c.native_sigma = j.value("native_sigma", c.native_sigma);
  c.num_accents = j.value("num_accents", c.num_accents);
  c.substitution_prob = j.value("substitution_prob", c.substitution_prob);
  c.filler_prob = j.value("filler_prob", c.filler_prob);
  c.duration_mult_min = j.value("duration_mult_min", c.duration_mult_min);
  c.duration_mult_max = j.value("duration_mult_max", c.duration_mult_max);
  c.accent_shift_scale = j.value("accent_shift_scale", c.accent_shift_scale);
  c.num_speakers = j.value("num_speakers", c.num_speakers);
  c.speaker_offset_bound = j.value("speaker_offset_bound", c.speaker_offset_bound);
  c.len_min = j.value("len_min", c.len_min);
  c.len_max = j.value("len_max", c.len_max);
  c.k = j.value("k", c.k);
  c.kmeans_max_iters = j.value("kmeans_max_iters", c.kmeans_max_iters);
  c.kmeans_tol = j.value("kmeans_tol", c.kmeans_tol);
  c.kmeans_max_frames = j.value("kmeans_max_frames", c.kmeans_max_frames);
  c.noise.sigma_min = j.value("sigma_min", c.noise.sigma_min);
  c.noise.sigma_max = j.value("sigma_max", c.noise.sigma_max);
  c.noise.duration_noise_min = j.value("duration_noise_min", c.noise.duration_noise_min);
  c.noise.duration_noise_max = j.value("duration_noise_max", c.noise.duration_noise_max);
  c.validate();
  return c;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError("bad " + what + " JSON: " + e.what());
  }
}

pc::PCConfig model_from_json(const json& j, int feature_dim, int k) {
  pc::PCConfig m;
  m.feature_dim = feature_dim;
  m.units = k;
  m.model_dim = j.value("model_dim", m.model_dim);
  m.heads = j.value("heads", m.heads);
  m.ffn_dim = j.value("ffn_dim", m.ffn_dim);
  m.enc_layers = j.value("enc_layers", m.enc_layers);
  m.dec_layers = j.value("dec_layers", m.dec_layers);
  m.rel_window = j.value("rel_window", m.rel_window);
  m.validate();
  return m;
}

pc::TrainConfig train_from_json(const json& j, const pc::TrainConfig& defaults) {
  pc::TrainConfig t = defaults;
  t.peak_lr = j.value("peak_lr", t.peak_lr);
  t.total_updates = j.value("total_updates", t.total_updates);
  t.micro_batch = j.value("micro_batch", t.micro_batch);
  t.grad_accum = j.value("grad_accum", t.grad_accum);
  t.clip_norm = j.value("clip_norm", t.clip_norm);
  t.eval_interval = j.value("eval_interval", t.eval_interval);
  t.validate();
  return t;
}

json train_to_json(const pc::TrainConfig& t) {
  json j;
  j["peak_lr"] = t.peak_lr;
  j["total_updates"] = t.total_updates;
  j["micro_batch"] = t.micro_batch;
  j["grad_accum"] = t.grad_accum;
  j["clip_norm"] = t.clip_norm;
  j["eval_interval"] = t.eval_interval;
  return j;
}

}  // namespace

std::string WorldConfig::to_json() const { return world_to_json(*this).dump(2); }

WorldConfig WorldConfig::from_json_text(const std::string& text) {
  return world_from_json(parse_json(text, "world config"));
}

World World::build(const WorldConfig& cfg) {
  cfg.validate();
  PhonemeInventory inventory = PhonemeInventory::make(
      cfg.inventory_size, cfg.confusables_per_phoneme, derive_seed(cfg.seed, {0x111}));
  Mat protos = phoneme_prototypes(inventory, cfg.feature_dim, cfg.separation,
                                  derive_seed(cfg.seed, {0x222}));
  RenderConfig rc;
  rc.dim = cfg.feature_dim;
  rc.frame_period_ms = cfg.frame_period_ms;
  rc.base_durations = make_base_durations(inventory, cfg.duration_min, cfg.duration_max,
                                          derive_seed(cfg.seed, {0x333}));
  rc.duration_noise_scale = 0.0;
  rc.inference_noise_scale = (cfg.noise.sigma_min + cfg.noise.sigma_max) / 2.0;
  Renderer renderer(inventory, std::move(protos), rc, cfg.native_sigma);

  World w{cfg, std::move(inventory), std::move(renderer), {}, {}};
  w.accents.reserve(static_cast<size_t>(cfg.num_accents));
  for (int a = 1; a <= cfg.num_accents; ++a) {
    Rng rng(derive_seed(cfg.seed, {0x444, static_cast<uint64_t>(a)}));
    AccentSpec spec;
    spec.id = a;
    spec.substitution_prob = cfg.substitution_prob;
    spec.filler_prob = cfg.filler_prob;
    spec.duration_multiplier = rng.uniform(cfg.duration_mult_min, cfg.duration_mult_max);
    spec.shift_u.resize(static_cast<size_t>(cfg.inventory_size));
    for (auto& u : spec.shift_u) u = rng.normal();
    spec.shift_v.resize(static_cast<size_t>(cfg.feature_dim));
    double norm_sq = 0;
    for (auto& v : spec.shift_v) {
      v = rng.normal();
      norm_sq += v * v;
    }
    double scale = cfg.accent_shift_scale / std::max(1e-12, std::sqrt(norm_sq));
    for (auto& v : spec.shift_v) v *= scale;
    spec.validate(cfg.inventory_size, cfg.feature_dim);
    w.accents.push_back(std::move(spec));
  }

  auto make_speaker = [&](int id, uint64_t salt) {
    Rng rng(derive_seed(cfg.seed, {0x555, salt, static_cast<uint64_t>(id)}));
    SpeakerSpec s;
    s.id = id;
    s.offset.resize(static_cast<size_t>(cfg.feature_dim));
    double norm_sq = 0;
    for (auto& v : s.offset) {
      v = rng.normal();
      norm_sq += v * v;
    }
    double target_norm = cfg.speaker_offset_bound * rng.uniform();
    double scale = target_norm / std::max(1e-12, std::sqrt(norm_sq));
    for (auto& v : s.offset) v *= scale;
    return s;
  };
  w.speakers.reserve(static_cast<size_t>(cfg.num_speakers));
  for (int i = 1; i <= cfg.num_speakers; ++i) w.speakers.push_back(make_speaker(i, 0));
  return w;
}

std::vector<SpeakerSpec> World::unseen_speakers(int count, uint64_t salt) const {
  std::vector<SpeakerSpec> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 1; i <= count; ++i) {
    Rng rng(derive_seed(cfg.seed, {0x666, salt, static_cast<uint64_t>(i)}));
    SpeakerSpec s;
    s.id = 1000 + i;  // ids disjoint from training speakers
    s.offset.resize(static_cast<size_t>(cfg.feature_dim));
    double norm_sq = 0;
    for (auto& v : s.offset) {
      v = rng.normal();
      norm_sq += v * v;
    }
    double target_norm = cfg.speaker_offset_bound * rng.uniform();
    double scale = target_norm / std::max(1e-12, std::sqrt(norm_sq));
    for (auto& v : s.offset) v *= scale;
    out.push_back(std::move(s));
  }
  return out;
}

std::string World::specs_json() const {
  json j;
  j["world"] = world_to_json(cfg);
  j["accents"] = json::array();
  for (const auto& a : accents) j["accents"].push_back(json::parse(accent_to_json(a)));
  j["speakers"] = json::array();
  for (const auto& s : speakers) j["speakers"].push_back(json::parse(speaker_to_json(s)));
  return j.dump(2);
}

void ExperimentConfig::validate() const {
  world.validate();
  if (budget < 1) throw ConfigError("experiment budget must be >= 1");
  if (strategies.empty()) throw ConfigError("experiment needs at least one strategy");
  if (inits.empty()) throw ConfigError("experiment needs at least one initialization");
  for (const auto& init : inits) {
    if (init != "random" && init != "dec-pretrain" && init != "enc-pretrain" && init != "both") {
      throw ConfigError("unknown initialization '" + init + "'");
    }
  }
  if (seeds_per_cell < 1) throw ConfigError("seeds_per_cell must be >= 1");
  if (val_sentences < 1 || test_sentences < 1) throw ConfigError("need val and test sentences");
  if (eval_beam < 1) throw ConfigError("eval beam must be >= 1");
  model.validate();
  train.validate();
  pretrain.validate();
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["world"] = world_to_json(world);
  json e;
  e["budget"] = budget;
  e["strategies"] = json::array();
  for (Strategy s : strategies) e["strategies"].push_back(strategy_name(s));
  e["inits"] = inits;
  e["seeds_per_cell"] = seeds_per_cell;
  e["val_sentences"] = val_sentences;
  e["test_sentences"] = test_sentences;
  e["eval_beam"] = eval_beam;
  e["model"] = json::parse(model.to_json());
  e["train"] = train_to_json(train);
  e["pretrain"] = train_to_json(pretrain);
  e["mask"] = {{"span_start_prob", mask.span_start_prob}, {"span_len", mask.span_len}};
  j["experiment"] = e;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = parse_json(text, "experiment config");
  ExperimentConfig cfg;
  if (j.contains("world")) cfg.world = world_from_json(j["world"]);
  // Desk-scale defaults sized for a two-core grid run.
  cfg.model.model_dim = 48;
  cfg.model.heads = 4;
  cfg.model.rel_window = 16;
  cfg.train.total_updates = 1000;
  cfg.train.micro_batch = 8;
  cfg.train.grad_accum = 1;
  cfg.train.eval_interval = 200;
  cfg.pretrain.total_updates = 500;
  cfg.pretrain.micro_batch = 8;
  cfg.pretrain.grad_accum = 2;
  cfg.pretrain.eval_interval = 1000000;  // no mid-pretrain evaluation
  if (j.contains("experiment")) {
    const json& e = j["experiment"];
    cfg.budget = e.value("budget", cfg.budget);
    if (e.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : e["strategies"]) {
        cfg.strategies.push_back(strategy_from_name(s.get<std::string>()));
      }
    }
    if (e.contains("inits")) {
      cfg.inits = e["inits"].get<std::vector<std::string>>();
    }
    cfg.seeds_per_cell = e.value("seeds_per_cell", cfg.seeds_per_cell);
    cfg.val_sentences = e.value("val_sentences", cfg.val_sentences);
    cfg.test_sentences = e.value("test_sentences", cfg.test_sentences);
    cfg.eval_beam = e.value("eval_beam", cfg.eval_beam);
    if (e.contains("model")) {
      cfg.model = model_from_json(e["model"], cfg.world.feature_dim, cfg.world.k);
    }
    if (e.contains("train")) cfg.train = train_from_json(e["train"], cfg.train);
    if (e.contains("pretrain")) cfg.pretrain = train_from_json(e["pretrain"], cfg.pretrain);
    if (e.contains("mask")) {
      cfg.mask.span_start_prob = e["mask"].value("span_start_prob", cfg.mask.span_start_prob);
      cfg.mask.span_len = e["mask"].value("span_len", cfg.mask.span_len);
    }
  }
  cfg.model.feature_dim = cfg.world.feature_dim;
  cfg.model.units = cfg.world.k;
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open experiment config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

WorldAssets prepare_assets(const World& world, const ExperimentConfig& cfg, int threads,
                           const std::function<void(const std::string&)>& log) {
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  WorldAssets assets;

  int max_train_sentences = cfg.budget;  // non-overlapped needs the most
  int pool_n = max_train_sentences + cfg.val_sentences + cfg.test_sentences;
  std::vector<Sentence> pool = sample_sentences(pool_n, cfg.world.len_min, cfg.world.len_max,
                                                world.inventory,
                                                derive_seed(cfg.world.seed, {0x777}));
  assets.train_pool.assign(pool.begin(), pool.begin() + max_train_sentences);
  assets.val_sentences.assign(pool.begin() + max_train_sentences,
                              pool.begin() + max_train_sentences + cfg.val_sentences);
  assets.test_sentences.assign(pool.begin() + max_train_sentences + cfg.val_sentences, pool.end());

  say("rendering native corpus (" + std::to_string(assets.train_pool.size()) + " sentences)");
  assets.native_features.resize(assets.train_pool.size());
  parallel_for(static_cast<int64_t>(assets.train_pool.size()), threads,
               [&](int64_t begin, int64_t end) {
                 for (int64_t i = begin; i < end; ++i) {
                   assets.native_features[static_cast<size_t>(i)] =
                       world.renderer.native_render(assets.train_pool[static_cast<size_t>(i)]);
                 }
               });

  // K-means over a deterministic subsample of native frames.
  int64_t total_frames = 0;
  for (const auto& f : assets.native_features) total_frames += f.length();
  int64_t budget_frames = std::min<int64_t>(total_frames, cfg.world.kmeans_max_frames);
  say("fitting K-means (K=" + std::to_string(cfg.world.k) + ") on " +
      std::to_string(budget_frames) + " of " + std::to_string(total_frames) + " frames");
  Mat frames(static_cast<int>(budget_frames), cfg.world.feature_dim);
  {
    // Stride-sample frames without materializing the full concatenation.
    double step = static_cast<double>(total_frames) / static_cast<double>(budget_frames);
    int64_t flat = 0;
    int64_t next_pick = 0;
    int64_t picked = 0;
    for (const auto& f : assets.native_features) {
      for (int t = 0; t < f.length(); ++t, ++flat) {
        if (picked < budget_frames && flat >= next_pick) {
          std::copy_n(f.frames.row(t), cfg.world.feature_dim, frames.row(static_cast<int>(picked)));
          ++picked;
          next_pick = static_cast<int64_t>(std::llround(static_cast<double>(picked) * step));
        }
      }
    }
    if (picked < budget_frames) frames.rows = static_cast<int>(picked);
  }
  KmeansOptions kopts;
  kopts.max_iters = cfg.world.kmeans_max_iters;
  kopts.tol = cfg.world.kmeans_tol;
  kopts.threads = threads;
  assets.codebook = fit_kmeans(frames, cfg.world.k, kopts, derive_seed(cfg.world.seed, {0x888}));

  say("fitting unit decoder and unit->phoneme map");
  std::vector<UnitSequence> unreduced(assets.native_features.size());
  parallel_for(static_cast<int64_t>(assets.native_features.size()), threads,
               [&](int64_t begin, int64_t end) {
                 for (int64_t i = begin; i < end; ++i) {
                   unreduced[static_cast<size_t>(i)] =
                       quantize(assets.native_features[static_cast<size_t>(i)], assets.codebook);
                 }
               });
  std::vector<std::pair<const FeatureSequence*, const UnitSequence*>> aligned;
  aligned.reserve(unreduced.size());
  for (size_t i = 0; i < unreduced.size(); ++i) {
    aligned.emplace_back(&assets.native_features[i], &unreduced[i]);
  }
  assets.decoder = fit_unit_decoder(aligned);
  assets.unit_to_phoneme = unit_phoneme_map(assets.codebook, assets.native_features);
  assets.native_units_reduced.resize(unreduced.size());
  for (size_t i = 0; i < unreduced.size(); ++i) {
    assets.native_units_reduced[i] = reduce(unreduced[i]);
  }

  say("building shared validation and test pairs");
  AugmentStrategySpec coverage;
  coverage.kind = Strategy::Overlapped;
  coverage.accents_per_sentence = static_cast<int>(world.accents.size());
  assets.val_pairs = build_parallel_corpus(
      assets.val_sentences, coverage, world.accents, world.speakers,
      cfg.val_sentences * coverage.accents_per_sentence, world.renderer, assets.codebook,
      cfg.world.noise, derive_seed(cfg.world.seed, {0x999}), threads);
  std::vector<SpeakerSpec> fresh = world.unseen_speakers(cfg.world.num_speakers, 0xbeef);
  assets.test_pairs = build_parallel_corpus(
      assets.test_sentences, coverage, world.accents, fresh,
      cfg.test_sentences * coverage.accents_per_sentence, world.renderer, assets.codebook,
      cfg.world.noise, derive_seed(cfg.world.seed, {0xaaa}), threads);
  return assets;
}

double GridReport::mean_val_ppl(const std::string& strategy, const std::string& init) const {
  double sum = 0;
  int n = 0;
  for (const auto& c : cells) {
    if (!strategy.empty() && c.strategy != strategy) continue;
    if (!init.empty() && c.init != init) continue;
    sum += c.val_ppl;
    ++n;
  }
  return n ? sum / n : 0.0;
}

double GridReport::mean_test_ppl(const std::string& strategy, const std::string& init) const {
  double sum = 0;
  int n = 0;
  for (const auto& c : cells) {
    if (!strategy.empty() && c.strategy != strategy) continue;
    if (!init.empty() && c.init != init) continue;
    sum += c.test_ppl;
    ++n;
  }
  return n ? sum / n : 0.0;
}

bool GridReport::overlapped_below_nonoverlapped() const {
  return mean_val_ppl("overlapped", "") < mean_val_ppl("non-overlapped", "");
}

bool GridReport::pretrained_not_worse_than_random() const {
  return mean_val_ppl("", "dec-pretrain") <= mean_val_ppl("", "random");
}

GridReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int threads,
                          const std::function<void(const std::string&)>& log) {
  cfg.validate();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };
  fs::create_directories(out_dir);

  World world = World::build(cfg.world);
  {
    std::ofstream os((fs::path(out_dir) / "world.json").string(), std::ios::binary);
    os << world.specs_json() << '\n';
  }
  {
    std::ofstream os((fs::path(out_dir) / "experiment.json").string(), std::ios::binary);
    os << cfg.to_json() << '\n';
  }

  WorldAssets assets = prepare_assets(world, cfg, threads, log);

  // Pretrained initializations are shared by every strategy at the same seed.
  auto init_model = [&](const std::string& init, int seed_idx) {
    uint64_t model_seed = derive_seed(cfg.world.seed, {0xbbb, static_cast<uint64_t>(seed_idx)});
    pc::PCModel model(cfg.model, model_seed);
    if (init == "random") return model;
    fs::path cache = fs::path(out_dir) / ("pretrain-" + init + "-s" + std::to_string(seed_idx) +
                                          ".ckpt");
    if (fs::exists(cache)) {
      say("loading cached " + init + " initialization (seed " + std::to_string(seed_idx) + ")");
      nn::load_params(cache.string(), model.params);
      return model;
    }
    say("pretraining " + init + " initialization (seed " + std::to_string(seed_idx) + ")");
    pc::TrainConfig pre = cfg.pretrain;
    pre.threads = threads;
    pre.seed = derive_seed(cfg.world.seed, {0xccc, static_cast<uint64_t>(seed_idx)});
    if (init == "dec-pretrain" || init == "both") {
      pc::pretrain_decoder_lm(model, assets.native_units_reduced, pre);
    }
    if (init == "enc-pretrain" || init == "both") {
      pc::pretrain_encoder_masked(model, assets.native_features, assets.codebook, cfg.mask, pre);
    }
    model.save(cache.string());
    return model;
  };

  GridReport report;
  for (Strategy strategy : cfg.strategies) {
    for (int seed_idx = 0; seed_idx < cfg.seeds_per_cell; ++seed_idx) {
      // One corpus per (strategy, seed), shared by every initialization.
      std::vector<ParallelPair> corpus;
      bool corpus_built = false;
      auto ensure_corpus = [&]() {
        if (corpus_built) return;
        AugmentStrategySpec spec;
        spec.kind = strategy;
        spec.accents_per_sentence = static_cast<int>(world.accents.size());
        say(std::string("building ") + strategy_name(strategy) + " corpus, seed " +
            std::to_string(seed_idx));
        corpus = build_parallel_corpus(
            assets.train_pool, spec, world.accents, world.speakers, cfg.budget, world.renderer,
            assets.codebook, cfg.world.noise,
            derive_seed(cfg.world.seed,
                        {0xddd, static_cast<uint64_t>(strategy == Strategy::Overlapped ? 1 : 0),
                         static_cast<uint64_t>(seed_idx)}),
            threads);
        corpus_built = true;
      };

      for (const std::string& init : cfg.inits) {
        std::string cell_name = std::string(strategy_name(strategy)) + "-" + init + "-s" +
                                std::to_string(seed_idx);
        fs::path cell_dir = fs::path(out_dir) / "cells" / cell_name;
        fs::path result_path = cell_dir / "result.json";
        if (fs::exists(result_path)) {
          std::ifstream is(result_path.string(), std::ios::binary);
          std::stringstream ss;
          ss << is.rdbuf();
          json r = parse_json(ss.str(), "cell result");
          CellResult cell;
          cell.strategy = r.value("strategy", "");
          cell.init = r.value("init", "");
          cell.seed_idx = r.value("seed_idx", 0);
          cell.val_ppl = r.value("val_ppl", 0.0);
          cell.test_ppl = r.value("test_ppl", 0.0);
          cell.final_loss = r.value("final_loss", 0.0);
          cell.best_update = r.value("best_update", -1);
          report.cells.push_back(cell);
          say("cell " + cell_name + " already complete; skipping");
          continue;
        }

        ensure_corpus();
        fs::create_directories(cell_dir);
        pc::PCModel model = init_model(init, seed_idx);
        pc::TrainConfig tc = cfg.train;
        tc.threads = threads;
        tc.seed = derive_seed(cfg.world.seed, {0xeee, static_cast<uint64_t>(seed_idx)});
        say("training cell " + cell_name + " (" + std::to_string(tc.total_updates) + " updates)");
        pc::TrainResult tr = pc::train(model, corpus, assets.val_pairs, tc);
        double test_ppl = eval::perplexity(model, assets.test_pairs, threads);

        model.save((cell_dir / "model.ckpt").string());
        {
          std::ofstream os((cell_dir / "train_log.jsonl").string(), std::ios::binary);
          for (const auto& rec : tr.log) {
            json r;
            r["update"] = rec.update;
            r["loss"] = rec.loss;
            r["lr"] = rec.lr;
            if (rec.val_ppl >= 0) r["val_ppl"] = rec.val_ppl;
            os << r.dump() << '\n';
          }
        }
        CellResult cell;
        cell.strategy = strategy_name(strategy);
        cell.init = init;
        cell.seed_idx = seed_idx;
        cell.val_ppl = tr.best_val_ppl;
        cell.test_ppl = test_ppl;
        cell.final_loss = tr.final_loss;
        cell.best_update = tr.best_update;
        {
          json r;
          r["strategy"] = cell.strategy;
          r["init"] = cell.init;
          r["seed_idx"] = cell.seed_idx;
          r["val_ppl"] = cell.val_ppl;
          r["test_ppl"] = cell.test_ppl;
          r["final_loss"] = cell.final_loss;
          r["best_update"] = cell.best_update;
          std::ofstream os(result_path.string(), std::ios::binary);
          os << r.dump(2) << '\n';
          if (!os) throw DataError("failed writing cell result: " + result_path.string());
        }
        say("cell " + cell_name + ": val ppl " + std::to_string(cell.val_ppl) + ", test ppl " +
            std::to_string(cell.test_ppl));
        report.cells.push_back(cell);
      }
    }
  }

  write_grid_report(report, (fs::path(out_dir) / "grid.txt").string(),
                    (fs::path(out_dir) / "grid.json").string());
  return report;
}

void write_grid_report(const GridReport& report, const std::string& text_path,
                       const std::string& json_path) {
  std::vector<std::pair<std::string, std::string>> groups;
  for (const auto& c : report.cells) {
    std::pair<std::string, std::string> key{c.strategy, c.init};
    if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
  }

  auto spread = [&](const std::string& strategy, const std::string& init, bool test) {
    double lo = 0, hi = 0;
    bool first = true;
    for (const auto& c : report.cells) {
      if (c.strategy != strategy || c.init != init) continue;
      double v = test ? c.test_ppl : c.val_ppl;
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    return std::make_pair(lo, hi);
  };

  {
    std::ofstream os(text_path, std::ios::binary);
    if (!os) throw DataError("cannot open grid report for writing: " + text_path);
    os << std::left << std::setw(16) << "strategy" << std::setw(14) << "init" << std::right
       << std::setw(12) << "val_ppl" << std::setw(22) << "val range" << std::setw(12)
       << "test_ppl" << '\n';
    os << std::fixed << std::setprecision(4);
    for (const auto& [strategy, init] : groups) {
      auto [lo, hi] = spread(strategy, init, false);
      os << std::left << std::setw(16) << strategy << std::setw(14) << init << std::right
         << std::setw(12) << report.mean_val_ppl(strategy, init) << std::setw(10) << lo << " .. "
         << std::setw(8) << hi << std::setw(12) << report.mean_test_ppl(strategy, init) << '\n';
    }
    os << '\n';
    os << "ordering overlapped < non-overlapped (mean val ppl): "
       << (report.overlapped_below_nonoverlapped() ? "holds" : "violated") << '\n';
    os << "ordering dec-pretrain <= random (mean val ppl): "
       << (report.pretrained_not_worse_than_random() ? "holds" : "violated") << '\n';
  }
  {
    json j;
    j["cells"] = json::array();
    for (const auto& c : report.cells) {
      json r;
      r["strategy"] = c.strategy;
      r["init"] = c.init;
      r["seed_idx"] = c.seed_idx;
      r["val_ppl"] = c.val_ppl;
      r["test_ppl"] = c.test_ppl;
      r["final_loss"] = c.final_loss;
      r["best_update"] = c.best_update;
      j["cells"].push_back(r);
    }
    j["ordering_overlapped_below_nonoverlapped"] = report.overlapped_below_nonoverlapped();
    j["ordering_pretrained_not_worse"] = report.pretrained_not_worse_than_random();
    std::ofstream os(json_path, std::ios::binary);
    if (!os) throw DataError("cannot open grid report for writing: " + json_path);
    os << j.dump(2) << '\n';
  }
}

ConvertResult convert(const pc::PCModel& model, const Codebook& codebook,
                      const UnitDecoder& decoder, const FeatureSequence& input, int beam,
                      bool length_norm, double max_len_mult) {
  ConvertResult out;
  out.embedding = speaker_embed(input, codebook);
  pc::PCScorer scorer(model, input.frames);
  int max_len = pc::default_max_len(model.cfg, max_len_mult);
  std::vector<pc::Hypothesis> hyps = pc::beam_decode(scorer, beam, max_len, length_norm);
  out.hypothesis = hyps.front();
  out.output = synthesize(out.hypothesis.units, out.embedding, decoder);
  out.output.prov = input.prov;
  return out;
}

}  // namespace uac::pipeline
