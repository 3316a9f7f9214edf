/* Copyright 2026 The SCFC Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the SCFC captioning library. Every function returns an
 * scfc_status; on failure scfc_last_error() describes the problem for the
 * calling thread. Strings handed out by the library are released with
 * scfc_free_string.
 */

#ifndef SCFC_SCFC_H_
#define SCFC_SCFC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SCFC_BUILDING_LIBRARY)
#define SCFC_API __attribute__((visibility("default")))
#else
#define SCFC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scfc_status {
  SCFC_OK = 0,
  SCFC_INVALID_ARGUMENT = 1, /* bad option, value or call sequence */
  SCFC_IO = 2,               /* file or directory missing or unwritable */
  SCFC_FORMAT = 3,           /* malformed or corrupt file */
  SCFC_FINGERPRINT = 4,      /* checkpoint belongs to a different model */
  SCFC_NUMERIC = 5,          /* NaN or Inf during computation */
  SCFC_PRECONDITION = 6,     /* e.g. RL round without an initial checkpoint */
  SCFC_ID_MISMATCH = 7,      /* hypothesis and reference ids differ */
  SCFC_INTERNAL = 8
} scfc_status;

typedef struct scfc_config scfc_config;

typedef struct scfc_metric_report {
  double bleu[4];
  double rouge_l;
  double cider_d;
  size_t images;
} scfc_metric_report;

SCFC_API const char* scfc_version(void);
SCFC_API const char* scfc_last_error(void);
SCFC_API const char* scfc_status_name(scfc_status status);

SCFC_API scfc_status scfc_config_create(scfc_config** out);
SCFC_API void scfc_config_destroy(scfc_config* config);
SCFC_API scfc_status scfc_config_load_file(scfc_config* config, const char* path);
/* Applies SCFC_<KEY> variables from the process environment. */
SCFC_API scfc_status scfc_config_apply_env(scfc_config* config);
SCFC_API scfc_status scfc_config_set(scfc_config* config, const char* key, const char* value);
/* The returned string is owned by the caller. */
SCFC_API scfc_status scfc_config_get(const scfc_config* config, const char* key, char** value);

/* Commands. `output`, when non-null, receives a caller-owned string: the
 * epoch log (train), the captions document (caption) or the sweep report. */
SCFC_API scfc_status scfc_train(const scfc_config* config, char** output);
SCFC_API scfc_status scfc_caption(const scfc_config* config, char** output);
SCFC_API scfc_status scfc_sweep(const scfc_config* config, char** output);
SCFC_API scfc_status scfc_eval(const scfc_config* config, scfc_metric_report* report, char** output);

SCFC_API void scfc_free_string(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SCFC_SCFC_H_ */
