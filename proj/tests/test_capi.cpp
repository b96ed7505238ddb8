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

// Exercises the shared-library surface end to end: context options, stage
// commands over files, opaque handles and error-code mapping.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "unitac/unitac.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("context lifecycle and option handling") {
  uac_context* ctx = uac_context_create();
  REQUIRE(ctx != nullptr);
  CHECK(std::string(uac_last_error(ctx)).empty());
  CHECK(uac_version() != nullptr);

  CHECK(uac_context_set_threads(ctx, 0) == UAC_ERR_CONFIG);
  CHECK(std::string(uac_last_error(ctx)).find("threads") != std::string::npos);
  CHECK(uac_context_set_threads(ctx, 2) == UAC_OK);

  CHECK(uac_context_set_option(ctx, "world.seed", "9") == UAC_OK);
  CHECK(uac_context_set_option(ctx, "world.k", "1") == UAC_ERR_CONFIG);  // K >= 2
  CHECK(uac_context_set_option(ctx, "world.k", "64") == UAC_OK);

  CHECK(uac_context_load_config(ctx, "/no/such/config.json") == UAC_ERR_DATA);
  uac_context_destroy(ctx);
}

TEST_CASE("config file loading validates JSON") {
  TempDir dir("unitac_capi_cfg");
  uac_context* ctx = uac_context_create();
  {
    std::ofstream os(dir / "bad.json");
    os << "{ not json";
  }
  CHECK(uac_context_load_config(ctx, (dir / "bad.json").c_str()) == UAC_ERR_DATA);
  {
    std::ofstream os(dir / "good.json");
    os << R"({"world": {"seed": 5, "inventory_size": 20}, "experiment": {"budget": 60}})";
  }
  CHECK(uac_context_load_config(ctx, (dir / "good.json").c_str()) == UAC_OK);
  uac_context_destroy(ctx);
}

TEST_CASE("pipeline stages compose through the C API") {
  TempDir dir("unitac_capi_pipe");
  uac_context* ctx = uac_context_create();
  uac_context_set_threads(ctx, 2);
  // A small world keeps this fast.
  uac_context_set_option(ctx, "world.inventory_size", "12");
  uac_context_set_option(ctx, "world.feature_dim", "6");
  uac_context_set_option(ctx, "world.k", "16");
  uac_context_set_option(ctx, "world.num_accents", "3");

  std::string manifest = dir / "m.txt";
  REQUIRE(uac_corpus_sample(ctx, 30, 4, 8, 7, manifest.c_str()) == UAC_OK);
  CHECK(fs::exists(manifest));
  // Determinism: byte-identical on rerun.
  std::string first = slurp(manifest);
  REQUIRE(uac_corpus_sample(ctx, 30, 4, 8, 7, manifest.c_str()) == UAC_OK);
  CHECK(slurp(manifest) == first);

  std::string train_m = dir / "train.txt", val_m = dir / "val.txt";
  REQUIRE(uac_corpus_split(ctx, manifest.c_str(), 9, 1, 3, train_m.c_str(), val_m.c_str()) ==
          UAC_OK);

  std::string native_dir = dir / "native";
  REQUIRE(uac_synth_native(ctx, manifest.c_str(), native_dir.c_str()) == UAC_OK);
  std::string accent_dir = dir / "accented";
  REQUIRE(uac_synth_render(ctx, manifest.c_str(), 1, 1, 11, accent_dir.c_str()) == UAC_OK);
  CHECK(uac_synth_render(ctx, manifest.c_str(), 99, 1, 11, accent_dir.c_str()) ==
        UAC_ERR_CONFIG);  // unknown accent id

  std::string codebook = dir / "cb.bin";
  REQUIRE(uac_s2u_fit(ctx, native_dir.c_str(), 16, 40, 1e-4, 5, codebook.c_str()) == UAC_OK);
  std::string units = dir / "units.txt";
  REQUIRE(uac_s2u_quantize(ctx, codebook.c_str(), native_dir.c_str(), 1, units.c_str()) == UAC_OK);

  std::string decoder = dir / "dec.bin";
  REQUIRE(uac_u2s_fit(ctx, native_dir.c_str(), codebook.c_str(), decoder.c_str()) == UAC_OK);

  // Handle-level round trip: quantize(synthesize(u)) == u.
  uac_codebook* cb = nullptr;
  REQUIRE(uac_codebook_load(ctx, codebook.c_str(), &cb) == UAC_OK);
  CHECK(uac_codebook_k(cb) == 16);
  CHECK(uac_codebook_dim(cb) == 6);

  uac_unit_decoder* dec = nullptr;
  REQUIRE(uac_unit_decoder_load(ctx, decoder.c_str(), &dec) == UAC_OK);

  std::vector<int32_t> seq = {3, 7, 1, 7, 0};
  uac_features* synth = nullptr;
  REQUIRE(uac_synthesize(ctx, dec, seq.data(), static_cast<int>(seq.size()), nullptr, &synth) ==
          UAC_OK);
  CHECK(uac_features_dim(synth) == 6);
  uac_units* round = nullptr;
  REQUIRE(uac_quantize(ctx, cb, synth, 1, &round) == UAC_OK);
  REQUIRE(uac_units_length(round) == static_cast<int>(seq.size()));
  std::vector<int32_t> got(seq.size());
  REQUIRE(uac_units_copy(ctx, round, got.data()) == UAC_OK);
  CHECK(got == seq);

  // Speaker embedding of a zero-embedding synthesis is near zero; the fitted
  // unit means sit within the k-means tolerance of their centroids.
  std::vector<double> embedding(6, 1.0);
  REQUIRE(uac_speaker_embed(ctx, cb, synth, embedding.data()) == UAC_OK);
  for (double v : embedding) CHECK(std::fabs(v) < 1e-2);

  // Feature save/load through handles.
  std::string feat_path = dir / "synth.feat";
  REQUIRE(uac_features_save(ctx, synth, feat_path.c_str()) == UAC_OK);
  uac_features* loaded = nullptr;
  REQUIRE(uac_features_load(ctx, feat_path.c_str(), &loaded) == UAC_OK);
  CHECK(uac_features_frames(loaded) == uac_features_frames(synth));

  // Error mapping: malformed model file -> data error.
  uac_model* model = nullptr;
  CHECK(uac_model_load(ctx, codebook.c_str(), &model) == UAC_ERR_DATA);
  CHECK(std::strlen(uac_last_error(ctx)) > 0);

  uac_features_free(loaded);
  uac_features_free(synth);
  uac_units_free(round);
  uac_unit_decoder_free(dec);
  uac_codebook_free(cb);
  uac_context_destroy(ctx);
}

TEST_CASE("augment, train, decode and convert through the C API") {
  TempDir dir("unitac_capi_train");
  uac_context* ctx = uac_context_create();
  uac_context_set_threads(ctx, 2);
  uac_context_set_option(ctx, "world.inventory_size", "10");
  uac_context_set_option(ctx, "world.feature_dim", "6");
  uac_context_set_option(ctx, "world.k", "12");
  uac_context_set_option(ctx, "world.num_accents", "2");
  uac_context_set_option(ctx, "world.len_min", "3");
  uac_context_set_option(ctx, "world.len_max", "6");
  uac_context_set_option(ctx, "experiment.model.model_dim", "16");
  uac_context_set_option(ctx, "experiment.model.heads", "2");
  uac_context_set_option(ctx, "experiment.model.enc_layers", "1");
  uac_context_set_option(ctx, "experiment.model.dec_layers", "1");
  uac_context_set_option(ctx, "experiment.train.total_updates", "30");
  uac_context_set_option(ctx, "experiment.train.micro_batch", "4");
  uac_context_set_option(ctx, "experiment.train.grad_accum", "1");
  uac_context_set_option(ctx, "experiment.pretrain.total_updates", "10");

  std::string manifest = dir / "m.txt";
  REQUIRE(uac_corpus_sample(ctx, 40, 3, 6, 2, manifest.c_str()) == UAC_OK);
  std::string native_dir = dir / "native";
  REQUIRE(uac_synth_native(ctx, manifest.c_str(), native_dir.c_str()) == UAC_OK);
  std::string codebook = dir / "cb.bin";
  REQUIRE(uac_s2u_fit(ctx, native_dir.c_str(), 12, 30, 1e-4, 5, codebook.c_str()) == UAC_OK);
  std::string decoder = dir / "dec.bin";
  REQUIRE(uac_u2s_fit(ctx, native_dir.c_str(), codebook.c_str(), decoder.c_str()) == UAC_OK);

  std::string corpus_dir = dir / "corpus";
  REQUIRE(uac_augment_build(ctx, manifest.c_str(), "non-overlapped", 40, codebook.c_str(), 3,
                            corpus_dir.c_str()) == UAC_OK);
  CHECK(fs::exists(fs::path(corpus_dir) / "index.txt"));
  CHECK(uac_augment_build(ctx, manifest.c_str(), "bogus", 40, codebook.c_str(), 3,
                          corpus_dir.c_str()) == UAC_ERR_CONFIG);

  // Decoder LM pretraining from the native unit file.
  std::string units = dir / "units.txt";
  REQUIRE(uac_s2u_quantize(ctx, codebook.c_str(), native_dir.c_str(), 1, units.c_str()) == UAC_OK);
  std::string pre_ckpt = dir / "pre.ckpt";
  REQUIRE(uac_pc_pretrain_dec(ctx, units.c_str(), pre_ckpt.c_str()) == UAC_OK);

  std::string model_ckpt = dir / "model.ckpt";
  std::string log_path = dir / "train.jsonl";
  REQUIRE(uac_pc_train(ctx, corpus_dir.c_str(), nullptr, pre_ckpt.c_str(), model_ckpt.c_str(),
                       log_path.c_str()) == UAC_OK);
  CHECK(fs::exists(model_ckpt));
  CHECK(fs::exists(log_path));

  uac_model* model = nullptr;
  REQUIRE(uac_model_load(ctx, model_ckpt.c_str(), &model) == UAC_OK);
  uac_features* input = nullptr;
  std::string one_feat;
  for (const auto& e : fs::directory_iterator(native_dir)) {
    one_feat = e.path().string();
    break;
  }
  REQUIRE(uac_features_load(ctx, one_feat.c_str(), &input) == UAC_OK);

  uac_units* decoded = nullptr;
  double score = 0;
  REQUIRE(uac_decode(ctx, model, input, 2, 0, 0, 0.0, &decoded, &score) == UAC_OK);
  CHECK(score <= 0.0);

  uac_codebook* cb = nullptr;
  uac_unit_decoder* dec = nullptr;
  REQUIRE(uac_codebook_load(ctx, codebook.c_str(), &cb) == UAC_OK);
  REQUIRE(uac_unit_decoder_load(ctx, decoder.c_str(), &dec) == UAC_OK);
  uac_units* conv_units = nullptr;
  uac_features* conv_feats = nullptr;
  REQUIRE(uac_convert(ctx, model, cb, dec, input, &conv_units, &conv_feats) == UAC_OK);
  CHECK(uac_features_frames(conv_feats) >= 0);

  // File-level conversion used by the CLI.
  REQUIRE(uac_convert_files(ctx, model_ckpt.c_str(), codebook.c_str(), decoder.c_str(),
                            one_feat.c_str(), (dir / "out.feat").c_str(),
                            (dir / "out.units").c_str()) == UAC_OK);
  CHECK(fs::exists(dir / "out.feat"));

  uac_features_free(conv_feats);
  uac_units_free(conv_units);
  uac_unit_decoder_free(dec);
  uac_codebook_free(cb);
  uac_units_free(decoded);
  uac_features_free(input);
  uac_model_free(model);
  uac_context_destroy(ctx);
}
