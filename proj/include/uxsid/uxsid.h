/*
 * Copyright 2026 The UxSID Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef UXSID_UXSID_H_
#define UXSID_UXSID_H_

/* C interface to the UxSID library. Objects are opaque handles owned by the
 * caller and released with the matching *_free function. Every call returns
 * a status; on failure uxsid_last_error() describes it for the calling
 * thread. Strings returned through char** out-parameters are allocated by
 * the library and released with uxsid_string_free. A `threads` value of 0
 * means UXSID_THREADS if set, else the hardware concurrency. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UXSID_API __declspec(dllexport)
#else
#define UXSID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uxsid_status {
  UXSID_OK = 0,
  UXSID_INVALID_ARGUMENT = 1,
  UXSID_IO = 2,
  UXSID_FORMAT = 3,
  UXSID_DIMENSION = 4,
  UXSID_NOT_FOUND = 5,
  UXSID_STATE = 6,
  UXSID_DIVERGED = 7,
  UXSID_INTERNAL = 8
} uxsid_status;

typedef struct uxsid_dataset uxsid_dataset;
typedef struct uxsid_codebook uxsid_codebook;
typedef struct uxsid_model uxsid_model;
typedef struct uxsid_store uxsid_store;

typedef void (*uxsid_log_fn)(const char* message, void* user_data);

UXSID_API const char* uxsid_version(void);
UXSID_API const char* uxsid_status_name(uxsid_status status);
/* Message of the last failed call on this thread; "" after a success. */
UXSID_API const char* uxsid_last_error(void);
UXSID_API void uxsid_string_free(char* s);
/* Progress messages go to `fn`; pass NULL to silence them. */
UXSID_API void uxsid_set_log_callback(uxsid_log_fn fn, void* user_data);
/* FNV-1a 64 of a file's bytes. */
UXSID_API uxsid_status uxsid_file_checksum(const char* path, uint64_t* out);

/* Datasets. config_json may be NULL for defaults; when has_seed is nonzero
 * `seed` replaces the config's seed. */
UXSID_API uxsid_status uxsid_dataset_generate(const char* config_json, int has_seed, uint64_t seed,
                                              size_t threads, uxsid_dataset** out);
UXSID_API uxsid_status uxsid_dataset_load(const char* dir, uxsid_dataset** out);
UXSID_API uxsid_status uxsid_dataset_save(const uxsid_dataset* ds, const char* dir);
UXSID_API uxsid_status uxsid_dataset_summary_json(const uxsid_dataset* ds, char** out);
UXSID_API void uxsid_dataset_free(uxsid_dataset* ds);

/* Residual codebooks over the dataset's item content vectors. options_json
 * may hold levels, codewords, max_iter and tol. */
UXSID_API uxsid_status uxsid_codebook_train(const uxsid_dataset* ds, const char* options_json, uint64_t seed,
                                            size_t threads, uxsid_codebook** out);
UXSID_API uxsid_status uxsid_codebook_load(const char* path, uxsid_codebook** out);
UXSID_API uxsid_status uxsid_codebook_save(const uxsid_codebook* cb, const char* path);
UXSID_API uxsid_status uxsid_codebook_info_json(const uxsid_codebook* cb, char** out);
/* One JSON line per item of an items.jsonl file: item_id, sid tuple and the
 * residual norm. */
UXSID_API uxsid_status uxsid_codebook_encode_file(const uxsid_codebook* cb, const char* items_path, char** out);
UXSID_API void uxsid_codebook_free(uxsid_codebook* cb);

/* Models. The codebook fixes the SID vocabulary; config_json may be NULL.
 * log_csv (nullable) receives the per-epoch training log. On UXSID_DIVERGED
 * *out still receives the last good parameters. */
UXSID_API uxsid_status uxsid_model_train(const uxsid_dataset* ds, const uxsid_codebook* cb,
                                         const char* config_json, int has_seed, uint64_t seed, size_t threads,
                                         char** log_csv, uxsid_model** out);
/* Freshly initialized (untrained) parameters; enough for latency work. */
UXSID_API uxsid_status uxsid_model_create(const uxsid_dataset* ds, const uxsid_codebook* cb,
                                          const char* config_json, int has_seed, uint64_t seed,
                                          uxsid_model** out);
UXSID_API uxsid_status uxsid_model_load(const char* path, uxsid_model** out);
UXSID_API uxsid_status uxsid_model_save(const uxsid_model* m, const char* path);
UXSID_API uxsid_status uxsid_model_config_json(const uxsid_model* m, char** out);
/* split is "train", "val" or "test". Writes auc, uauc, wuauc, int_r_at_k and
 * friends as JSON. */
UXSID_API uxsid_status uxsid_model_evaluate(const uxsid_model* m, const uxsid_dataset* ds, const char* split,
                                            size_t threads, char** out_json);
UXSID_API void uxsid_model_free(uxsid_model* m);

/* Serving. */
UXSID_API uxsid_status uxsid_store_precompute(const uxsid_model* m, const uxsid_dataset* ds, size_t threads,
                                              uxsid_store** out);
UXSID_API uxsid_status uxsid_store_load(const char* path, uxsid_store** out);
UXSID_API uxsid_status uxsid_store_save(const uxsid_store* s, const char* path);
UXSID_API uxsid_status uxsid_store_info_json(const uxsid_store* s, char** out);
/* Copies the 2*d floats of (uid, sid) into out (capacity floats). Sets
 * *hit to 0 and leaves zeros on a miss. */
UXSID_API uxsid_status uxsid_store_lookup(const uxsid_store* s, uint64_t uid, uint32_t sid, float* out,
                                          size_t capacity, int* hit);
UXSID_API uxsid_status uxsid_store_parity(const uxsid_store* s, const uxsid_model* m, const uxsid_dataset* ds,
                                          size_t sample, uint64_t seed, size_t threads, char** out_json);
/* Rebuilds the store for (m, ds) and atomically replaces the file at path. */
UXSID_API uxsid_status uxsid_store_refresh(const uxsid_model* m, const uxsid_dataset* ds, const char* path,
                                           size_t threads, char** out_json);
UXSID_API void uxsid_store_free(uxsid_store* s);
UXSID_API uint64_t uxsid_make_key(uint64_t uid, uint32_t sid);

/* Benchmarks and comparisons, returned as CSV text. */
UXSID_API uxsid_status uxsid_bench_latency(const uxsid_model* m, const size_t* lengths, size_t n_lengths,
                                           const size_t* store_sizes, size_t n_sizes, size_t calls,
                                           size_t repeats, uint64_t seed, char** out_csv);
/* cb may be NULL, in which case a codebook is trained from the config's
 * sid_levels and sid_codewords. */
UXSID_API uxsid_status uxsid_compare_baselines(const uxsid_dataset* ds, const uxsid_codebook* cb,
                                               const char* config_json, int has_seed, uint64_t seed,
                                               const size_t* lengths, size_t n_lengths, size_t threads,
                                               char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* UXSID_UXSID_H_ */
