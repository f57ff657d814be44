/*
 * Copyright 2026 The flexsig Authors
 *
 * This software is licensed under the terms of the Apache License Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#ifndef FLEXSIG_FLEXSIG_H_
#define FLEXSIG_FLEXSIG_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FLEXSIG_BUILDING)
#define FXS_API __declspec(dllexport)
#else
#define FXS_API __declspec(dllimport)
#endif
#else
#define FXS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum fxs_status {
  FXS_OK = 0,
  FXS_ERR_ARGUMENT = 1, /* null handle, bad buffer, unknown name */
  FXS_ERR_CONFIG = 2,   /* configuration or input file problem */
  FXS_ERR_RUNTIME = 3,  /* solver failure, infeasible household, I/O */
  FXS_ERR_VERIFY = 4    /* recomputed metrics disagree with emitted ones */
} fxs_status;

typedef struct fxs_config fxs_config;
typedef struct fxs_run fxs_run;

typedef void (*fxs_log_fn)(const char* message, void* user);

/* Message of the last failed call on this thread; "" after success. */
FXS_API const char* fxs_last_error(void);
FXS_API const char* fxs_version(void);

/* Routes progress messages of long calls; pass NULL to silence. */
FXS_API void fxs_set_log(fxs_log_fn fn, void* user);

/* Configuration. A default config is valid as is. */
FXS_API fxs_status fxs_config_default(fxs_config** out);
FXS_API fxs_status fxs_config_load(const char* path, fxs_config** out);
FXS_API fxs_status fxs_config_parse(const char* json_text, fxs_config** out);
FXS_API void fxs_config_free(fxs_config* config);

FXS_API fxs_status fxs_config_set_output_dir(fxs_config* config, const char* dir);
FXS_API fxs_status fxs_config_set_mode(fxs_config* config, const char* mode);
/* "name=value", e.g. "weather=42". */
FXS_API fxs_status fxs_config_override_seed(fxs_config* config, const char* assignment);

/* Resolved configuration as JSON. Copies up to len-1 bytes plus a NUL;
 * *needed (optional) receives the full length including the NUL. */
FXS_API fxs_status fxs_config_to_json(const fxs_config* config, char* buf, size_t len, size_t* needed);
FXS_API fxs_status fxs_config_fingerprint(const fxs_config* config, char* buf, size_t len);

/* Commands; files land in the config's output directory. */
FXS_API fxs_status fxs_generate(const fxs_config* config, int* n_households, int* n_pv_battery,
                                int* n_participating);
FXS_API fxs_status fxs_train(const fxs_config* config, double* final_loss);
FXS_API fxs_status fxs_simulate(const fxs_config* config, fxs_run** out);
/* values may be NULL (n_values 0) for the axis defaults. Writes sweep_<axis>.csv. */
FXS_API fxs_status fxs_sweep(const fxs_config* config, const char* axis, const double* values, size_t n_values);
FXS_API fxs_status fxs_verify(const char* run_dir, double* max_discrepancy);

/* Results of fxs_simulate. */
FXS_API void fxs_run_free(fxs_run* run);
FXS_API size_t fxs_run_days(const fxs_run* run);
FXS_API size_t fxs_run_slots(const fxs_run* run);
/* Copies `slots` values of day `day` (0-based); `benchmark` selects the baseline profile. */
FXS_API fxs_status fxs_run_demand(const fxs_run* run, size_t day, int benchmark, double* out, size_t len);
/* Named window summary field, e.g. "mean_pds_pct", "variation_reduction_pct". */
FXS_API fxs_status fxs_run_summary(const fxs_run* run, const char* field, double* value);

#ifdef __cplusplus
}
#endif

#endif /* FLEXSIG_FLEXSIG_H_ */
