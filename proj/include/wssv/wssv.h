// Copyright 2026 The WSSV Surveillance Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WSSV_WSSV_H_
#define WSSV_WSSV_H_

/* C interface to the WSSV surveillance core.
 *
 * Every function returns a wssv_status. On failure, wssv_last_error() and
 * wssv_last_error_field() describe the error for the calling thread until
 * its next call into the library.
 *
 * Strings returned through char** are NUL-terminated, heap-allocated and
 * released with wssv_free_string(); byte buffers with wssv_free_buffer().
 * Structured values travel as UTF-8 JSON text. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WSSV_API __declspec(dllexport)
#else
#define WSSV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wssv_status {
  WSSV_OK = 0,
  WSSV_ERR_INVALID_ARGUMENT = 1,
  WSSV_ERR_DECODE = 2,
  WSSV_ERR_BOUNDS = 3,
  WSSV_ERR_INPUT = 4,
  WSSV_ERR_VALIDATION = 5,
  WSSV_ERR_LEAKAGE = 6,
  WSSV_ERR_INTEGRITY = 7,
  WSSV_ERR_CONFIGURATION = 8,
  WSSV_ERR_CAPABILITY = 9,
  WSSV_ERR_NUMERIC = 10,
  WSSV_ERR_MODEL_CONTRACT = 11,
  WSSV_ERR_STRATIFICATION = 12,
  WSSV_ERR_UNDEFINED_METRIC = 13,
  WSSV_ERR_NOT_FOUND = 14,
  WSSV_ERR_CONFLICT = 15,
  WSSV_ERR_REFERENCE = 16,
  WSSV_ERR_BUSY = 17,
  WSSV_ERR_IO = 18,
  WSSV_ERR_BENCHMARK = 19,
  WSSV_ERR_INTERNAL = 20
} wssv_status;

typedef struct wssv_image wssv_image;
typedef struct wssv_model wssv_model;
typedef struct wssv_store wssv_store;
typedef struct wssv_server wssv_server;

WSSV_API const char* wssv_version(void);
/* Stable snake_case name, e.g. "decode_error". Never NULL. */
WSSV_API const char* wssv_status_name(int status);
WSSV_API const char* wssv_last_error(void);
/* Offending input field, or "" when not attributable. */
WSSV_API const char* wssv_last_error_field(void);
WSSV_API void wssv_free_string(char* s);
WSSV_API void wssv_free_buffer(uint8_t* buf);

/* ---- imaging ---- */

WSSV_API int wssv_image_decode(const uint8_t* data, size_t len, wssv_image** out);
WSSV_API int wssv_image_read_file(const char* path, wssv_image** out);
WSSV_API int wssv_image_size(const wssv_image* img, int* width, int* height);
WSSV_API int wssv_image_encode_png(const wssv_image* img, uint8_t** out, size_t* out_len);
/* spec_json: {"rotation_degrees", "flip_horizontal", "flip_vertical",
 * "brightness_delta", "blur_sigma"}. */
WSSV_API int wssv_image_augment(const wssv_image* img, const char* spec_json, uint64_t seed, wssv_image** out);
/* Draws a spec from ranges_json (NULL for defaults). */
WSSV_API int wssv_augment_sample_spec(const char* ranges_json, uint64_t seed, char** spec_json);
WSSV_API void wssv_image_free(wssv_image* img);

/* ---- inference ---- */

/* Bundle directory: model.onnx, metadata.json, model.sha256. */
WSSV_API int wssv_model_load_dir(const char* dir, double default_threshold, wssv_model** out);
WSSV_API int wssv_model_info(const wssv_model* model, char** info_json);
/* Preprocesses per the model metadata, then predicts. */
WSSV_API int wssv_model_predict(const wssv_model* model, const wssv_image* img, char** prediction_json);
/* JSON array of predictions in input order. */
WSSV_API int wssv_model_predict_batch(const wssv_model* model, const wssv_image* const* imgs, size_t count,
                                      char** predictions_json);
/* occlusion_json may be NULL. overlay_png may be NULL when not wanted. */
WSSV_API int wssv_model_saliency(const wssv_model* model, const wssv_image* img, const char* occlusion_json,
                                 char** map_json, uint8_t** overlay_png, size_t* overlay_len);
/* Wall-clock latency benchmark; runs >= 1. */
WSSV_API int wssv_model_benchmark(const wssv_model* model, const wssv_image* img, size_t runs, size_t warmup,
                                  const char* device_label, char** stats_json);
WSSV_API void wssv_model_free(wssv_model* model);

/* ---- evaluation ---- */

/* labels_json: {"samples": [{"id", "label"}, ...]} or {"<id>": "<class>"}. */
WSSV_API int wssv_eval_kfold(const char* labels_json, int k, int64_t seed, char** plan_json);
WSSV_API int wssv_eval_holdout(const char* labels_json, double fraction, int64_t seed, char** split_json);
/* One CSV text of (sample_id, truth, score) per fold, in fold order.
 * plan_json (nullable) must then have k == count. */
WSSV_API int wssv_eval_run_csv(const char* const* fold_csvs, size_t count, const char* plan_json, double threshold,
                               char** summary_json);
WSSV_API int wssv_eval_format_table(const char* summary_json, char** table_text);

/* ---- model QA ---- */

/* CSVs of (input_id, score) joined by id. *passed receives the gate verdict. */
WSSV_API int wssv_parity_csv(const char* reference_csv, const char* candidate_csv, double max_tolerance,
                             double mean_tolerance, int* passed, char** report_json);

/* ---- dataset store ---- */

WSSV_API int wssv_store_open(const char* root, wssv_store** out);
/* meta_json (nullable): {"source", "captured_at", "device_label", "label", "who"}. */
WSSV_API int wssv_store_add(wssv_store* store, const uint8_t* data, size_t len, const char* meta_json,
                            char** sample_json);
WSSV_API int wssv_store_get(wssv_store* store, const char* id, char** sample_json);
WSSV_API int wssv_store_set_label(wssv_store* store, const char* id, const char* label, const char* who,
                                  char** sample_json);
WSSV_API int wssv_store_audit(wssv_store* store, const char* id, char** audit_json);
/* label / split may be NULL for no filter. */
WSSV_API int wssv_store_list(wssv_store* store, const char* label, const char* split, char** samples_json);
/* A split assignment (train_ids/test_ids) or a fold plan (k/assignments).
 * validation_fold < 0 means none. */
WSSV_API int wssv_store_assign_splits(wssv_store* store, const char* plan_json, int validation_fold,
                                      size_t* updated);
/* specs_json: array of augment specs. Returns the created samples. */
WSSV_API int wssv_store_expand(wssv_store* store, const char* specs_json, uint64_t seed, char** created_json);
/* created_at (RFC 3339) may be NULL for now. */
WSSV_API int wssv_store_export(wssv_store* store, const char* label, const char* split, const char* created_at,
                               char** manifest_json, uint8_t** archive, size_t* archive_len);
WSSV_API int wssv_store_import(wssv_store* store, const char* manifest_json, const uint8_t* archive,
                               size_t archive_len, size_t* created);
WSSV_API void wssv_store_close(wssv_store* store);

/* ---- surveillance service ---- */

/* config_path may be NULL. Precedence: file, then WSSV_LISTEN /
 * WSSV_DATA_DIR / WSSV_THRESHOLD, then overrides_json (nullable, same keys
 * as the file). */
WSSV_API int wssv_server_create(const char* config_path, const char* overrides_json, wssv_server** out);
/* Binds the configured address; *port receives the bound port. */
WSSV_API int wssv_server_bind(wssv_server* server, int* port);
/* Blocks until wssv_server_stop() is called from another thread. */
WSSV_API int wssv_server_run(wssv_server* server);
WSSV_API int wssv_server_stop(wssv_server* server);
WSSV_API void wssv_server_free(wssv_server* server);

#ifdef __cplusplus
}
#endif

#endif /* WSSV_WSSV_H_ */
