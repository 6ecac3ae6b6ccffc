/*
 * echobeam public C interface.
 *
 * Opaque handles own all engine state; every call that can fail returns an
 * eb_status and leaves a human-readable message in eb_last_error() (stored
 * per thread). Handles are not thread-safe individually, but distinct
 * handles may be used from distinct threads concurrently.
 */
#ifndef ECHOBEAM_ECHOBEAM_H_
#define ECHOBEAM_ECHOBEAM_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EB_API __declspec(dllexport)
#else
#define EB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eb_status {
  EB_OK = 0,
  EB_ERROR_INVALID_ARGUMENT = 1, /* bad parameters, sizes, provider specs */
  EB_ERROR_IO = 2,               /* filesystem failures */
  EB_ERROR_FORMAT = 3,           /* malformed scenario/mask/WAV files */
  EB_ERROR_NUMERIC = 4,          /* non-finite values reached a state update */
  EB_ERROR_INTERNAL = 5
} eb_status;

/* A sampled acoustic scenario together with its rendered signals. */
typedef struct eb_scenario eb_scenario;

/* One finished processing run: tap signals, metrics, timing. */
typedef struct eb_result eb_result;

typedef struct eb_run_params {
  /* "oracle" | "oracle-direct" | "constant[:mu=..,aec=..,bf=..,pf=..]" |
   * "file:<path>". NULL means "oracle". */
  const char* provider;
  /* 0 means the default of 1024 samples. */
  uint32_t frame_shift;
  /* <= 0 means the default of 1.0. */
  double loss_alpha;
  double loss_beta;
  /* Nonzero freezes the canceller at the true leading echo-path taps even
   * for non-oracle providers (replaying exported oracle masks). */
  int oracle_aec;
} eb_run_params;

EB_API const char* eb_version(void);

/* Message for the most recent failure on this thread. */
EB_API const char* eb_last_error(void);

EB_API void eb_run_params_init(eb_run_params* params);

/* Samples the scenario distribution for `seed` and renders `duration`
 * seconds of built-in source material through it. */
EB_API eb_status eb_scenario_generate(uint64_t seed, uint32_t channels, double duration_seconds,
                                      eb_scenario** out_scenario);

/* Same, with user WAV corpora as source material. Any NULL/empty path falls
 * back to the built-in source for that role. Files must match the scenario
 * sample rate; the first channel is used, cut or zero-padded to duration. */
EB_API eb_status eb_scenario_generate_from_wavs(uint64_t seed, uint32_t channels,
                                                double duration_seconds,
                                                const char* far_end_wav,
                                                const char* near_end_wav, const char* noise_wav,
                                                eb_scenario** out_scenario);

/* Writes scenario.spec plus the signal WAVs into a directory / reads them
 * back. */
EB_API eb_status eb_scenario_save(const eb_scenario* scenario, const char* directory);
EB_API eb_status eb_scenario_load(const char* directory, eb_scenario** out_scenario);
EB_API void eb_scenario_free(eb_scenario* scenario);

EB_API uint64_t eb_scenario_seed(const eb_scenario* scenario);
EB_API uint32_t eb_scenario_channels(const eb_scenario* scenario);
EB_API double eb_scenario_duration_seconds(const eb_scenario* scenario);

/* Processes the scenario through the cascade with the chosen mask provider.
 * `params` may be NULL for defaults. */
EB_API eb_status eb_run(const eb_scenario* scenario, const eb_run_params* params,
                        eb_result** out_result);
EB_API void eb_result_free(eb_result* result);

/* Writes e1/u_bf/u_pf plus per-component tap WAVs. `taps` is a comma list
 * drawn from "aec,bf,pf"; NULL exports all three. */
EB_API eb_status eb_result_write_wavs(const eb_result* result, const char* directory,
                                      const char* taps);

/* Per-tap suppression-curve CSVs (erle_aec.csv, erle_bf.csv, erle_pf.csv). */
EB_API eb_status eb_result_write_erle_csv(const eb_result* result, const char* directory);

/* CSV rows for this run (no header); free with eb_string_free. */
EB_API eb_status eb_result_metrics_csv(const eb_result* result, const char* scenario_id,
                                       char** out_rows);
EB_API const char* eb_metrics_csv_header(void);

/* tap: "aec" | "bf" | "pf"; phase: "single_talk" | "double_talk";
 * metric: "erle" | "noise_supp" | "sdr" | "loss". */
EB_API eb_status eb_result_metric(const eb_result* result, const char* tap, const char* phase,
                                  const char* metric, double* out_value);

EB_API eb_status eb_result_timing(const eb_result* result, double* out_mean_block_ms,
                                  double* out_max_block_ms);
EB_API eb_status eb_result_block_count(const eb_result* result, uint64_t* out_blocks);

/* Runs the provider over the scenario and serializes the per-block mask
 * stream to `path` (binary EFMK format). */
EB_API eb_status eb_masks_export(const eb_scenario* scenario, const char* provider,
                                 uint32_t frame_shift, const char* path);

EB_API void eb_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* ECHOBEAM_ECHOBEAM_H_ */
