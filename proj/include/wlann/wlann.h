// Copyright 2026 The WLANN Authors
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

/* C interface to the respiratory sound classifier. All handles are opaque;
 * every fallible call returns a wlann_status and leaves a message for
 * wlann_last_error() on the calling thread. Strings returned through char**
 * are owned by the caller and released with wlann_string_free(). */

#ifndef WLANN_WLANN_H_
#define WLANN_WLANN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(WLANN_BUILDING_LIBRARY)
#define WLANN_API __attribute__((visibility("default")))
#else
#define WLANN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wlann_status {
  WLANN_OK = 0,
  WLANN_ERR_PRECONDITION,
  WLANN_ERR_VALIDATION,
  WLANN_ERR_CONFIG,
  WLANN_ERR_SHAPE,
  WLANN_ERR_RANGE,
  WLANN_ERR_FORMAT,
  WLANN_ERR_EMPTY_INPUT,
  WLANN_ERR_DEGENERATE_INPUT,
  WLANN_ERR_IO,
  WLANN_ERR_NUMERIC,
  WLANN_ERR_MAGIC_MISMATCH,
  WLANN_ERR_TRUNCATED_PAYLOAD,
  WLANN_ERR_SHAPE_MISMATCH,
  WLANN_ERR_INTERNAL
} wlann_status;

typedef enum wlann_log_level { WLANN_LOG_INFO = 0, WLANN_LOG_WARNING = 1 } wlann_log_level;

typedef void (*wlann_log_fn)(wlann_log_level level, const char* message, void* user);

typedef struct wlann_config wlann_config;
typedef struct wlann_model wlann_model;
typedef struct wlann_gradcheck wlann_gradcheck;

WLANN_API const char* wlann_version(void);
WLANN_API const char* wlann_last_error(void);
WLANN_API const char* wlann_status_name(wlann_status status);
/* 0 success, 1 validation, 2 I/O, 3 numeric. */
WLANN_API int wlann_exit_code(wlann_status status);
WLANN_API void wlann_string_free(char* s);
/* NULL restores the default sink (warnings to stderr). */
WLANN_API void wlann_set_log_callback(wlann_log_fn fn, void* user);

WLANN_API int wlann_num_labels(void);
WLANN_API const char* wlann_label_name(int index);

/* preset: "default" or "micro". */
WLANN_API wlann_status wlann_config_create(const char* preset, wlann_config** out);
/* Overlays the keys of a JSON file or JSON text onto the config. */
WLANN_API wlann_status wlann_config_load_file(wlann_config* cfg, const char* path);
WLANN_API wlann_status wlann_config_merge_json(wlann_config* cfg, const char* json);
WLANN_API wlann_status wlann_config_to_json(const wlann_config* cfg, char** out);
/* Derived tensor geometry (frames, patch grid, conv lengths, fused width). */
WLANN_API wlann_status wlann_config_shapes_json(const wlann_config* cfg, char** out);
WLANN_API void wlann_config_free(wlann_config* cfg);

/* Writes <out_dir>/<rec>.wav, <rec>.json and splits.txt. */
WLANN_API wlann_status wlann_synth(const char* out_dir, int per_class, uint64_t seed,
                                   char** summary);

/* Writes the prepared waveform and log-mel spectrogram as a tensor archive. */
WLANN_API wlann_status wlann_features(const wlann_config* cfg, const char* wav_path,
                                      const char* out_path, int augment, uint64_t seed,
                                      char** summary);

typedef struct wlann_train_options {
  int epochs;
  int jobs;
  int augment;
  const char* resume_path; /* NULL or checkpoint to continue from */
} wlann_train_options;

/* Trains on the train split of a corpus directory; the checkpoint at
 * out_path is rewritten after every epoch. summary receives JSON. */
WLANN_API wlann_status wlann_train(const wlann_config* cfg, const char* data_dir,
                                   const char* out_path, const wlann_train_options* options,
                                   char** summary);

/* split: train, intra, inter or heldout (intra and inter together). The
 * report is JSON; summary receives a human-readable digest. */
WLANN_API wlann_status wlann_eval(const char* data_dir, const char* model_path,
                                  const char* split, const char* report_path, int jobs,
                                  char** summary);

WLANN_API wlann_status wlann_model_load(const char* path, wlann_model** out);
WLANN_API int wlann_model_num_classes(const wlann_model* model);
/* scores must hold wlann_model_num_classes() entries. */
WLANN_API wlann_status wlann_model_predict_wav(const wlann_model* model, const char* wav_path,
                                               int* label, double* scores);
WLANN_API void wlann_model_free(wlann_model* model);

WLANN_API wlann_status wlann_gradcheck_run(double tolerance, int end_to_end, uint64_t seed,
                                           wlann_gradcheck** out);
WLANN_API size_t wlann_gradcheck_count(const wlann_gradcheck* suite);
WLANN_API wlann_status wlann_gradcheck_entry(const wlann_gradcheck* suite, size_t index,
                                             const char** op, double* max_rel_error,
                                             size_t* checked, int* passed);
WLANN_API void wlann_gradcheck_free(wlann_gradcheck* suite);

#ifdef __cplusplus
}
#endif

#endif /* WLANN_WLANN_H_ */
