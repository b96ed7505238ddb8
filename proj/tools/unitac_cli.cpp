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

// Command-line front end. All pipeline work goes through the C API in
// unitac/unitac.h; this file only parses arguments and reports errors.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
// failure.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unitac/unitac.h"

namespace {

struct ContextDeleter {
  void operator()(uac_context* ctx) const { uac_context_destroy(ctx); }
};
using ContextPtr = std::unique_ptr<uac_context, ContextDeleter>;

int finish(uac_context* ctx, uac_status status) {
  if (status != UAC_OK) {
    std::fprintf(stderr, "error: %s\n", uac_last_error(ctx));
  }
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unitac: many-to-one accent conversion over discrete speech units"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> options;
  uint64_t global_seed = 0;
  bool have_seed = false;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config file (world/experiment settings)");
  app.add_option("--set", options, "config override as dotted key=value (repeatable)");
  app.add_option("--seed", global_seed, "override world.seed")->each([&](const std::string&) {
    have_seed = true;
  });
  app.add_option("--threads", threads, "worker threads (default: hardware)");

  // corpus
  auto* corpus = app.add_subcommand("corpus", "sentence sampling and splits");
  corpus->require_subcommand(1);
  auto* corpus_sample = corpus->add_subcommand("sample", "sample phoneme sentences");
  int cs_n = 1000, cs_len_min = 5, cs_len_max = 30;
  uint64_t cs_seed = 1;
  std::string cs_out;
  corpus_sample->add_option("--n", cs_n, "sentence count");
  corpus_sample->add_option("--len-min", cs_len_min, "minimum length");
  corpus_sample->add_option("--len-max", cs_len_max, "maximum length");
  corpus_sample->add_option("--seed", cs_seed, "sampling seed");
  corpus_sample->add_option("--out", cs_out, "output manifest")->required();

  auto* corpus_split = corpus->add_subcommand("split", "split a manifest train/val");
  std::string csp_in, csp_ratio = "1000:1", csp_out_train, csp_out_val;
  uint64_t csp_seed = 1;
  corpus_split->add_option("--in", csp_in, "input manifest")->required();
  corpus_split->add_option("--ratio", csp_ratio, "train:val ratio (default 1000:1)");
  corpus_split->add_option("--seed", csp_seed, "shuffle seed");
  corpus_split->add_option("--out-train", csp_out_train, "train manifest")->required();
  corpus_split->add_option("--out-val", csp_out_val, "val manifest")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "parametric rendering");
  synth->require_subcommand(1);
  auto* synth_render = synth->add_subcommand("render", "render a manifest with accent/speaker");
  std::string sr_manifest, sr_out;
  int sr_accent = 0, sr_speaker = 0;
  uint64_t sr_seed = 1;
  synth_render->add_option("--manifest", sr_manifest, "input manifest")->required();
  synth_render->add_option("--accent", sr_accent, "accent id (0 = identity)");
  synth_render->add_option("--speaker", sr_speaker, "speaker id (0 = native)");
  synth_render->add_option("--seed", sr_seed, "render seed");
  synth_render->add_option("--out-dir", sr_out, "output directory")->required();

  auto* synth_native = synth->add_subcommand("native", "canonical native rendering");
  std::string sn_manifest, sn_out;
  synth_native->add_option("--manifest", sn_manifest, "input manifest")->required();
  synth_native->add_option("--out-dir", sn_out, "output directory")->required();

  // s2u
  auto* s2u = app.add_subcommand("s2u", "speech-to-unit (K-means) stage");
  s2u->require_subcommand(1);
  auto* s2u_fit = s2u->add_subcommand("fit", "fit a K-means codebook");
  std::string sf_features, sf_out;
  int sf_k = 100, sf_iters = 50;
  double sf_tol = 1e-4;
  uint64_t sf_seed = 1;
  s2u_fit->add_option("--features", sf_features, "feature directory")->required();
  s2u_fit->add_option("--k", sf_k, "cluster count");
  s2u_fit->add_option("--max-iters", sf_iters, "maximum Lloyd iterations");
  s2u_fit->add_option("--tol", sf_tol, "centroid movement tolerance");
  s2u_fit->add_option("--seed", sf_seed, "init seed");
  s2u_fit->add_option("--out", sf_out, "output codebook")->required();

  auto* s2u_quant = s2u->add_subcommand("quantize", "quantize features to units");
  std::string sq_codebook, sq_features, sq_out;
  bool sq_no_reduce = false;
  s2u_quant->add_option("--codebook", sq_codebook, "codebook file")->required();
  s2u_quant->add_option("--features", sq_features, "feature file or directory")->required();
  s2u_quant->add_flag("--no-reduce", sq_no_reduce, "keep consecutive duplicates");
  s2u_quant->add_option("--out", sq_out, "output unit file")->required();

  // u2s
  auto* u2s = app.add_subcommand("u2s", "unit-to-speech stage");
  u2s->require_subcommand(1);
  auto* u2s_fit = u2s->add_subcommand("fit", "fit the statistical unit decoder");
  std::string uf_features, uf_codebook, uf_out;
  u2s_fit->add_option("--features", uf_features, "native feature directory")->required();
  u2s_fit->add_option("--codebook", uf_codebook, "codebook file")->required();
  u2s_fit->add_option("--out", uf_out, "output decoder")->required();

  auto* u2s_synth = u2s->add_subcommand("synth", "synthesize features from units");
  std::string us_decoder, us_units, us_speaker_from, us_codebook, us_out;
  int us_line = 0;
  u2s_synth->add_option("--decoder", us_decoder, "unit decoder file")->required();
  u2s_synth->add_option("--units", us_units, "unit file")->required();
  u2s_synth->add_option("--line", us_line, "utterance line in the unit file");
  u2s_synth->add_option("--speaker-from", us_speaker_from, "feature file to take the voice from");
  u2s_synth->add_option("--codebook", us_codebook, "codebook (needed with --speaker-from)");
  u2s_synth->add_option("--out", us_out, "output feature file")->required();

  // augment
  auto* augment = app.add_subcommand("augment", "parallel corpus construction");
  augment->require_subcommand(1);
  auto* augment_build = augment->add_subcommand("build", "build a parallel corpus");
  std::string ab_manifest, ab_strategy = "overlapped", ab_codebook, ab_out;
  int ab_budget = 6000;
  uint64_t ab_seed = 1;
  augment_build->add_option("--manifest", ab_manifest, "sentence manifest")->required();
  augment_build->add_option("--strategy", ab_strategy, "overlapped | non-overlapped");
  augment_build->add_option("--budget", ab_budget, "total pair count");
  augment_build->add_option("--codebook", ab_codebook, "codebook file")->required();
  augment_build->add_option("--seed", ab_seed, "corpus seed");
  augment_build->add_option("--out-dir", ab_out, "output corpus directory")->required();

  // pc
  auto* pc = app.add_subcommand("pc", "pronunciation corrector");
  pc->require_subcommand(1);
  auto* pc_pre_dec = pc->add_subcommand("pretrain-dec", "causal unit LM pretraining");
  std::string ppd_units, ppd_out;
  pc_pre_dec->add_option("--units", ppd_units, "native unit file")->required();
  pc_pre_dec->add_option("--out", ppd_out, "output checkpoint")->required();

  auto* pc_pre_enc = pc->add_subcommand("pretrain-enc", "masked-frame encoder pretraining");
  std::string ppe_features, ppe_codebook, ppe_out;
  pc_pre_enc->add_option("--features", ppe_features, "native feature directory")->required();
  pc_pre_enc->add_option("--codebook", ppe_codebook, "codebook file")->required();
  pc_pre_enc->add_option("--out", ppe_out, "output checkpoint")->required();

  auto* pc_train = pc->add_subcommand("train", "teacher-forced training");
  std::string pt_corpus, pt_val, pt_init, pt_out, pt_log;
  pc_train->add_option("--corpus", pt_corpus, "training corpus directory")->required();
  pc_train->add_option("--val", pt_val, "validation corpus directory");
  pc_train->add_option("--init-from", pt_init, "checkpoint to initialize from");
  pc_train->add_option("--out", pt_out, "output checkpoint")->required();
  pc_train->add_option("--log", pt_log, "training log (JSONL)");

  auto* pc_decode = pc->add_subcommand("decode", "decode features to units");
  std::string pd_model, pd_features, pd_out;
  int pd_beam = 8;
  bool pd_length_norm = false;
  double pd_max_len_mult = 4.0;
  pc_decode->add_option("--model", pd_model, "model checkpoint")->required();
  pc_decode->add_option("--features", pd_features, "input feature file")->required();
  pc_decode->add_option("--beam", pd_beam, "beam size");
  pc_decode->add_flag("--length-norm", pd_length_norm, "rank by length-normalized score");
  pc_decode->add_option("--max-len-mult", pd_max_len_mult, "length cap multiplier");
  pc_decode->add_option("--out", pd_out, "output unit file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "objective evaluation");
  eval_cmd->require_subcommand(1);
  auto* eval_run = eval_cmd->add_subcommand("run", "evaluate a model on a test corpus");
  std::string er_model, er_codebook, er_decoder, er_test, er_report;
  int er_beam = 8;
  eval_run->add_option("--model", er_model, "model checkpoint")->required();
  eval_run->add_option("--codebook", er_codebook, "codebook file")->required();
  eval_run->add_option("--decoder", er_decoder, "unit decoder file")->required();
  eval_run->add_option("--test-manifest", er_test, "test corpus directory")->required();
  eval_run->add_option("--beam", er_beam, "beam size");
  eval_run->add_option("--report", er_report, "report output path")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "strategy x init grid run");
  std::string ex_out = "experiment-out";
  bool ex_quiet = false;
  experiment->add_option("--out-dir", ex_out, "output directory");
  experiment->add_flag("--quiet", ex_quiet, "suppress progress lines");

  // convert
  auto* convert = app.add_subcommand("convert", "accent-convert one utterance");
  std::string cv_in, cv_model, cv_codebook, cv_decoder, cv_out_features, cv_out_units;
  convert->add_option("--in", cv_in, "input feature file")->required();
  convert->add_option("--model", cv_model, "model checkpoint")->required();
  convert->add_option("--codebook", cv_codebook, "codebook file")->required();
  convert->add_option("--decoder", cv_decoder, "unit decoder file")->required();
  convert->add_option("--out-features", cv_out_features, "converted feature file")->required();
  convert->add_option("--out-units", cv_out_units, "decoded unit file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11's own exit codes are remapped onto the documented ones.
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  ContextPtr ctx(uac_context_create());
  if (!config_path.empty()) {
    uac_status st = uac_context_load_config(ctx.get(), config_path.c_str());
    if (st != UAC_OK) return finish(ctx.get(), st);
  }
  for (const std::string& opt : options) {
    size_t eq = opt.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", opt.c_str());
      return 1;
    }
    uac_status st = uac_context_set_option(ctx.get(), opt.substr(0, eq).c_str(),
                                           opt.substr(eq + 1).c_str());
    if (st != UAC_OK) return finish(ctx.get(), st);
  }
  if (have_seed) {
    uac_status st =
        uac_context_set_option(ctx.get(), "world.seed", std::to_string(global_seed).c_str());
    if (st != UAC_OK) return finish(ctx.get(), st);
  }
  if (threads > 0) {
    uac_status st = uac_context_set_threads(ctx.get(), threads);
    if (st != UAC_OK) return finish(ctx.get(), st);
  }

  if (corpus_sample->parsed()) {
    return finish(ctx.get(), uac_corpus_sample(ctx.get(), cs_n, cs_len_min, cs_len_max, cs_seed,
                                               cs_out.c_str()));
  }
  if (corpus_split->parsed()) {
    size_t colon = csp_ratio.find(':');
    if (colon == std::string::npos) {
      std::fprintf(stderr, "error: --ratio expects train:val, got '%s'\n", csp_ratio.c_str());
      return 1;
    }
    int train_parts = 0, val_parts = 0;
    try {
      train_parts = std::stoi(csp_ratio.substr(0, colon));
      val_parts = std::stoi(csp_ratio.substr(colon + 1));
    } catch (const std::exception&) {
      std::fprintf(stderr, "error: --ratio parts must be integers\n");
      return 1;
    }
    return finish(ctx.get(), uac_corpus_split(ctx.get(), csp_in.c_str(), train_parts, val_parts,
                                              csp_seed, csp_out_train.c_str(),
                                              csp_out_val.c_str()));
  }
  if (synth_render->parsed()) {
    return finish(ctx.get(), uac_synth_render(ctx.get(), sr_manifest.c_str(), sr_accent,
                                              sr_speaker, sr_seed, sr_out.c_str()));
  }
  if (synth_native->parsed()) {
    return finish(ctx.get(), uac_synth_native(ctx.get(), sn_manifest.c_str(), sn_out.c_str()));
  }
  if (s2u_fit->parsed()) {
    return finish(ctx.get(), uac_s2u_fit(ctx.get(), sf_features.c_str(), sf_k, sf_iters, sf_tol,
                                         sf_seed, sf_out.c_str()));
  }
  if (s2u_quant->parsed()) {
    return finish(ctx.get(), uac_s2u_quantize(ctx.get(), sq_codebook.c_str(), sq_features.c_str(),
                                              sq_no_reduce ? 0 : 1, sq_out.c_str()));
  }
  if (u2s_fit->parsed()) {
    return finish(ctx.get(), uac_u2s_fit(ctx.get(), uf_features.c_str(), uf_codebook.c_str(),
                                         uf_out.c_str()));
  }
  if (u2s_synth->parsed()) {
    return finish(ctx.get(),
                  uac_u2s_synth(ctx.get(), us_decoder.c_str(), us_units.c_str(), us_line,
                                us_speaker_from.empty() ? nullptr : us_speaker_from.c_str(),
                                us_codebook.empty() ? nullptr : us_codebook.c_str(),
                                us_out.c_str()));
  }
  if (augment_build->parsed()) {
    return finish(ctx.get(),
                  uac_augment_build(ctx.get(), ab_manifest.c_str(), ab_strategy.c_str(),
                                    ab_budget, ab_codebook.c_str(), ab_seed, ab_out.c_str()));
  }
  if (pc_pre_dec->parsed()) {
    return finish(ctx.get(),
                  uac_pc_pretrain_dec(ctx.get(), ppd_units.c_str(), ppd_out.c_str()));
  }
  if (pc_pre_enc->parsed()) {
    return finish(ctx.get(), uac_pc_pretrain_enc(ctx.get(), ppe_features.c_str(),
                                                 ppe_codebook.c_str(), ppe_out.c_str()));
  }
  if (pc_train->parsed()) {
    return finish(ctx.get(),
                  uac_pc_train(ctx.get(), pt_corpus.c_str(),
                               pt_val.empty() ? nullptr : pt_val.c_str(),
                               pt_init.empty() ? nullptr : pt_init.c_str(), pt_out.c_str(),
                               pt_log.empty() ? nullptr : pt_log.c_str()));
  }
  if (pc_decode->parsed()) {
    uac_model* model = nullptr;
    uac_features* feats = nullptr;
    uac_units* units = nullptr;
    uac_status st = uac_model_load(ctx.get(), pd_model.c_str(), &model);
    if (st == UAC_OK) st = uac_features_load(ctx.get(), pd_features.c_str(), &feats);
    double score = 0;
    if (st == UAC_OK) {
      st = uac_decode(ctx.get(), model, feats, pd_beam, pd_length_norm ? 1 : 0, 0,
                      pd_max_len_mult, &units, &score);
    }
    if (st == UAC_OK) {
      std::vector<int32_t> ids(static_cast<size_t>(uac_units_length(units)));
      uac_units_copy(ctx.get(), units, ids.data());
      FILE* out = std::fopen(pd_out.c_str(), "wb");
      if (!out) {
        std::fprintf(stderr, "error: cannot open %s\n", pd_out.c_str());
        st = UAC_ERR_DATA;
      } else {
        for (size_t i = 0; i < ids.size(); ++i) {
          std::fprintf(out, "%s%d", i ? " " : "", ids[i]);
        }
        std::fprintf(out, "\n");
        std::fclose(out);
        std::fprintf(stderr, "decoded %zu units, score %.6f\n", ids.size(), score);
      }
    }
    uac_units_free(units);
    uac_features_free(feats);
    uac_model_free(model);
    return finish(ctx.get(), st);
  }
  if (eval_run->parsed()) {
    return finish(ctx.get(),
                  uac_eval_run(ctx.get(), er_model.c_str(), er_codebook.c_str(),
                               er_decoder.c_str(), er_test.c_str(), er_beam, er_report.c_str()));
  }
  if (experiment->parsed()) {
    return finish(ctx.get(), uac_experiment_run(ctx.get(), ex_out.c_str(), ex_quiet ? 0 : 1));
  }
  if (convert->parsed()) {
    return finish(ctx.get(),
                  uac_convert_files(ctx.get(), cv_model.c_str(), cv_codebook.c_str(),
                                    cv_decoder.c_str(), cv_in.c_str(), cv_out_features.c_str(),
                                    cv_out_units.c_str()));
  }
  std::fprintf(stderr, "error: no subcommand\n");
  return 1;
}
