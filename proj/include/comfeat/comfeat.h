// Copyright 2026 The ComFeAT Authors
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

/* C interface to the comfeat library. Objects are opaque handles created and
 * destroyed through this API. Every fallible call returns a comfeat_status;
 * on failure comfeat_last_error() describes the problem for the calling
 * thread. Strings and byte buffers returned through out-parameters are owned
 * by the caller and released with comfeat_string_free / comfeat_bytes_free. */

#ifndef COMFEAT_COMFEAT_H_
#define COMFEAT_COMFEAT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(COMFEAT_BUILDING_LIBRARY)
#    define COMFEAT_API __declspec(dllexport)
#  else
#    define COMFEAT_API __declspec(dllimport)
#  endif
#else
#  define COMFEAT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct comfeat_model comfeat_model;
typedef struct comfeat_server comfeat_server;

/* Values match comfeat::ErrorCode. */
typedef enum comfeat_status {
  COMFEAT_OK = 0,
  COMFEAT_ERR_INVALID_ARGUMENT = 1,
  COMFEAT_ERR_IO,
  COMFEAT_ERR_MALFORMED_FILE,
  COMFEAT_ERR_UNSUPPORTED_FORMAT,
  COMFEAT_ERR_TOO_LONG,
  COMFEAT_ERR_NOT_MONO,
  COMFEAT_ERR_TOO_SHORT,
  COMFEAT_ERR_EMPTY_MATRIX,
  COMFEAT_ERR_BAD_MAGIC,
  COMFEAT_ERR_BAD_VERSION,
  COMFEAT_ERR_DIMENSION_MISMATCH,
  COMFEAT_ERR_TRUNCATED,
  COMFEAT_ERR_INPUT_TOO_SHORT,
  COMFEAT_ERR_BRANCH_MISMATCH,
  COMFEAT_ERR_BAD_PROBABILITY,
  COMFEAT_ERR_EMPTY_BATCH,
  COMFEAT_ERR_SHAPE_MISMATCH,
  COMFEAT_ERR_BAD_CONFIG,
  COMFEAT_ERR_CONFIG_MISMATCH,
  COMFEAT_ERR_BAD_HEADER,
  COMFEAT_ERR_DUPLICATE_ID,
  COMFEAT_ERR_SCORE_OUT_OF_RANGE,
  COMFEAT_ERR_BAD_ROW,
  COMFEAT_ERR_EMPTY,
  COMFEAT_ERR_MISSING_ARTIFACT,
  COMFEAT_ERR_NO_TRAIN_DATA,
  COMFEAT_ERR_NON_FINITE,
  COMFEAT_ERR_INTERNAL = 100
} comfeat_status;

typedef struct comfeat_buffer {
  const uint8_t* data;
  size_t size;
} comfeat_buffer;

/* Called once per finished epoch with one JSON log line (no newline). */
typedef void (*comfeat_epoch_callback)(const char* json_line, void* user_data);

COMFEAT_API const char* comfeat_version(void);
COMFEAT_API const char* comfeat_status_name(comfeat_status status);
COMFEAT_API const char* comfeat_last_error(void);

COMFEAT_API void comfeat_string_free(char* s);
COMFEAT_API void comfeat_bytes_free(uint8_t* bytes);

/* Models. */
COMFEAT_API comfeat_status comfeat_model_load(const char* path, comfeat_model** out);
COMFEAT_API comfeat_status comfeat_model_load_bytes(const uint8_t* data, size_t size,
                                                    comfeat_model** out);
/* config_json is the canonical model config (see ModelConfig::to_json). */
COMFEAT_API comfeat_status comfeat_model_init(const char* config_json, comfeat_model** out);
COMFEAT_API comfeat_status comfeat_model_save(const comfeat_model* model, const char* path);
COMFEAT_API comfeat_status comfeat_model_info(const comfeat_model* model, char** out_json);
COMFEAT_API void comfeat_model_free(comfeat_model* model);

/* Pipeline. spectral_config is key=value text and may be NULL for defaults.
 * train_config_json keys: feature_set (array of source names), epochs,
 * batch_size, lr, dropout_p, seed, train_ratio, dev_ratio,
 * early_stop_patience, conv_filters, kernel_size, fcn_dims. */
COMFEAT_API comfeat_status comfeat_train(const char* manifest_path,
                                         const char* train_config_json,
                                         const char* spectral_config,
                                         comfeat_epoch_callback on_epoch, void* user_data,
                                         comfeat_model** out_model);
COMFEAT_API comfeat_status comfeat_evaluate(const comfeat_model* model,
                                            const char* manifest_path,
                                            const char* spectral_config, char** out_json);
COMFEAT_API comfeat_status comfeat_predict(const comfeat_model* model, const uint8_t* wav,
                                           size_t wav_size, const comfeat_buffer* embeddings,
                                           size_t n_embeddings, const char* spectral_config,
                                           char** out_json);

/* Feature extraction from a WAV file. feature is "mfcc" or "lfcc". The result
 * is a CFEM file (source "other") holding the per-frame cepstra, or their
 * time mean when pooled is non-zero. */
COMFEAT_API comfeat_status comfeat_extract(const char* wav_path, const char* feature,
                                           const char* spectral_config, int pooled,
                                           uint8_t** out_bytes, size_t* out_size);

/* HTTP service. service_config is key=value text (see ServiceConfig). The
 * model named by model_path (or COMFEAT_MODEL) is loaded in the background
 * once the server runs; until then health reports model_loaded=false and
 * predict answers 503. */
COMFEAT_API comfeat_status comfeat_server_create(const char* service_config,
                                                 comfeat_server** out);
/* Binds and returns the actual port through out_port (may be NULL). */
COMFEAT_API comfeat_status comfeat_server_bind(comfeat_server* server, int* out_port);
/* Blocks serving until comfeat_server_stop is called from another thread. */
COMFEAT_API comfeat_status comfeat_server_run(comfeat_server* server);
COMFEAT_API void comfeat_server_stop(comfeat_server* server);
COMFEAT_API void comfeat_server_free(comfeat_server* server);

#ifdef __cplusplus
}
#endif

#endif /* COMFEAT_COMFEAT_H_ */
