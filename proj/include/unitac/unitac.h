/* Copyright 2026 The unitac Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the unitac accent-conversion pipeline.
 *
 * All functions return uac_status; UAC_OK is zero. On failure the message is
 * retrievable via uac_last_error() on the context that made the call. Opaque
 * handles are created by uac_*_load / pipeline functions and released with
 * their matching _free(); handles are independent of the context that created
 * them and may outlive it.
 *
 * Heavyweight pipeline stages (corpus building, training, the experiment
 * grid) operate on artifact files, mirroring the CLI's file-based handoff.
 */

#ifndef UNITAC_UNITAC_H_
#define UNITAC_UNITAC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UNITAC_API __declspec(dllexport)
#else
#define UNITAC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uac_status {
  UAC_OK = 0,
  UAC_ERR_CONFIG = 1, /* invalid configuration, arguments or usage */
  UAC_ERR_DATA = 2,   /* bad or missing data, parse and I/O failures */
  UAC_ERR_NUMERIC = 3 /* numeric failure (divergence, non-finite values) */
} uac_status;

typedef struct uac_context uac_context;
typedef struct uac_codebook uac_codebook;
typedef struct uac_features uac_features;
typedef struct uac_units uac_units;
typedef struct uac_unit_decoder uac_unit_decoder;
typedef struct uac_model uac_model;

UNITAC_API const char* uac_version(void);

/* ------------------------------------------------------------------ */
/* Context: configuration, thread budget, last-error storage.          */
/* ------------------------------------------------------------------ */

UNITAC_API uac_context* uac_context_create(void);
UNITAC_API void uac_context_destroy(uac_context* ctx);
UNITAC_API const char* uac_last_error(const uac_context* ctx);

/* Loads a JSON config file ({"world": {...}, "experiment": {...}}). */
UNITAC_API uac_status uac_context_load_config(uac_context* ctx, const char* path);
/* Dotted-key override applied on top of the loaded config, e.g.
 * ("world.seed", "7") or ("experiment.train.total_updates", "2000"). */
UNITAC_API uac_status uac_context_set_option(uac_context* ctx, const char* key,
                                             const char* value);
UNITAC_API uac_status uac_context_set_threads(uac_context* ctx, int threads);

/* ------------------------------------------------------------------ */
/* Corpus stage.                                                       */
/* ------------------------------------------------------------------ */

UNITAC_API uac_status uac_corpus_sample(uac_context* ctx, int n, int len_min, int len_max,
                                        uint64_t seed, const char* out_manifest);
UNITAC_API uac_status uac_corpus_split(uac_context* ctx, const char* manifest, int train_parts,
                                       int val_parts, uint64_t seed, const char* out_train,
                                       const char* out_val);

/* ------------------------------------------------------------------ */
/* Synthetic rendering stage.                                          */
/* ------------------------------------------------------------------ */

/* Renders every manifest sentence with one accent/speaker (ids from the
 * context's world; accent 0 = identity, speaker 0 = native). Writes
 * <out_dir>/<sentence_id>.feat. */
UNITAC_API uac_status uac_synth_render(uac_context* ctx, const char* manifest, int accent_id,
                                       int speaker_id, uint64_t seed, const char* out_dir);
/* Canonical native rendering (fixed noise scales, content-derived seeds). */
UNITAC_API uac_status uac_synth_native(uac_context* ctx, const char* manifest,
                                       const char* out_dir);

/* ------------------------------------------------------------------ */
/* Speech2Unit stage.                                                  */
/* ------------------------------------------------------------------ */

/* Fits K-means over all .feat files under features_dir (sorted order). */
UNITAC_API uac_status uac_s2u_fit(uac_context* ctx, const char* features_dir, int k,
                                  int max_iters, double tol, uint64_t seed,
                                  const char* out_codebook);
/* Quantizes every .feat under features_path (file or directory) into a unit
 * file, one utterance per line; reduce=1 collapses adjacent duplicates. */
UNITAC_API uac_status uac_s2u_quantize(uac_context* ctx, const char* codebook,
                                       const char* features_path, int reduce,
                                       const char* out_units);

/* ------------------------------------------------------------------ */
/* Unit2Speech stage.                                                  */
/* ------------------------------------------------------------------ */

UNITAC_API uac_status uac_u2s_fit(uac_context* ctx, const char* features_dir,
                                  const char* codebook, const char* out_decoder);
/* Synthesizes features from one line of a unit file, taking the speaker
 * embedding from speaker_from (a feature file); speaker_from may be NULL for
 * a zero embedding. */
UNITAC_API uac_status uac_u2s_synth(uac_context* ctx, const char* decoder, const char* units_file,
                                    int line, const char* speaker_from, const char* codebook,
                                    const char* out_features);

/* ------------------------------------------------------------------ */
/* Parallel-corpus augmentation stage.                                 */
/* ------------------------------------------------------------------ */

/* strategy: "overlapped" | "non-overlapped". Builds budget pairs from the
 * manifest sentences into out_dir (features/, targets.units, index.txt). */
UNITAC_API uac_status uac_augment_build(uac_context* ctx, const char* manifest,
                                        const char* strategy, int budget, const char* codebook,
                                        uint64_t seed, const char* out_dir);

/* ------------------------------------------------------------------ */
/* Pronunciation-corrector stage.                                      */
/* ------------------------------------------------------------------ */

UNITAC_API uac_status uac_pc_pretrain_dec(uac_context* ctx, const char* units_file,
                                          const char* out_checkpoint);
UNITAC_API uac_status uac_pc_pretrain_enc(uac_context* ctx, const char* features_dir,
                                          const char* codebook, const char* out_checkpoint);
/* corpus_dir/val_dir are augment-built directories; val_dir and init_from may
 * be NULL. Writes the best-validation checkpoint and a JSONL training log. */
UNITAC_API uac_status uac_pc_train(uac_context* ctx, const char* corpus_dir, const char* val_dir,
                                   const char* init_from, const char* out_checkpoint,
                                   const char* out_log);

/* ------------------------------------------------------------------ */
/* Handles and in-memory operations.                                   */
/* ------------------------------------------------------------------ */

UNITAC_API uac_status uac_codebook_load(uac_context* ctx, const char* path, uac_codebook** out);
UNITAC_API void uac_codebook_free(uac_codebook* cb);
UNITAC_API int uac_codebook_k(const uac_codebook* cb);
UNITAC_API int uac_codebook_dim(const uac_codebook* cb);

UNITAC_API uac_status uac_features_load(uac_context* ctx, const char* path, uac_features** out);
UNITAC_API uac_status uac_features_save(uac_context* ctx, const uac_features* f,
                                        const char* path);
UNITAC_API void uac_features_free(uac_features* f);
UNITAC_API int uac_features_frames(const uac_features* f);
UNITAC_API int uac_features_dim(const uac_features* f);
/* Copies frames*dim doubles, row-major. */
UNITAC_API uac_status uac_features_copy(uac_context* ctx, const uac_features* f, double* out);

UNITAC_API void uac_units_free(uac_units* u);
UNITAC_API int uac_units_length(const uac_units* u);
UNITAC_API uac_status uac_units_copy(uac_context* ctx, const uac_units* u, int32_t* out);

UNITAC_API uac_status uac_unit_decoder_load(uac_context* ctx, const char* path,
                                            uac_unit_decoder** out);
UNITAC_API void uac_unit_decoder_free(uac_unit_decoder* d);

UNITAC_API uac_status uac_model_load(uac_context* ctx, const char* path, uac_model** out);
UNITAC_API void uac_model_free(uac_model* m);

/* Nearest-centroid quantization; reduce=1 collapses adjacent duplicates. */
UNITAC_API uac_status uac_quantize(uac_context* ctx, const uac_codebook* cb,
                                   const uac_features* f, int reduce, uac_units** out);
/* Mean quantization residual; out must hold dim doubles. */
UNITAC_API uac_status uac_speaker_embed(uac_context* ctx, const uac_codebook* cb,
                                        const uac_features* f, double* out);
/* embedding may be NULL (zero embedding); length = decoder dim. */
UNITAC_API uac_status uac_synthesize(uac_context* ctx, const uac_unit_decoder* d,
                                     const int32_t* units, int n_units, const double* embedding,
                                     uac_features** out);
/* Beam decoding. max_len > 0 is an explicit cap; otherwise the cap is
 * max_len_mult (<= 0 -> 4.0) times the model's median target length.
 * score may be NULL. */
UNITAC_API uac_status uac_decode(uac_context* ctx, const uac_model* m, const uac_features* f,
                                 int beam, int length_norm, int max_len, double max_len_mult,
                                 uac_units** out, double* score);
/* Full conversion: speaker embedding from input, beam decode, synthesis. */
UNITAC_API uac_status uac_convert(uac_context* ctx, const uac_model* m, const uac_codebook* cb,
                                  const uac_unit_decoder* d, const uac_features* input,
                                  uac_units** out_units, uac_features** out_features);

/* ------------------------------------------------------------------ */
/* Evaluation and the experiment grid.                                 */
/* ------------------------------------------------------------------ */

/* test_dir is an augment-built corpus of held-out sentences. Writes the
 * metric table to report_path and a JSONL variant to report_path + ".jsonl". */
UNITAC_API uac_status uac_eval_run(uac_context* ctx, const char* model, const char* codebook,
                                   const char* decoder, const char* test_dir, int beam,
                                   const char* report_path);
/* Runs the strategy x initialization grid described by the context config. */
UNITAC_API uac_status uac_experiment_run(uac_context* ctx, const char* out_dir, int verbose);
/* File-based conversion convenience used by the CLI. */
UNITAC_API uac_status uac_convert_files(uac_context* ctx, const char* model,
                                        const char* codebook, const char* decoder,
                                        const char* input_features, const char* out_features,
                                        const char* out_units);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* UNITAC_UNITAC_H_ */
