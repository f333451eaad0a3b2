#ifndef SIGDRIFT_H
#define SIGDRIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SdMeasure {
  SD_MEASURE_EUCLIDEAN = 0,
  SD_MEASURE_PEARSON = 1,
  SD_MEASURE_COSINE = 2,
} SdMeasure;

typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  // Malformed input: bad UTF-8, unparsable text, unknown key.
  SD_STATUS_INVALID_INPUT = 2,
  // Well-formed input rejected by the pipeline.
  SD_STATUS_DOMAIN_ERROR = 3,
  SD_STATUS_BUFFER_TOO_SMALL = 4,
  // A Rust panic was caught at the boundary.
  SD_STATUS_INTERNAL = 5,
} SdStatus;

// Simulation configuration.
typedef struct SdConfig SdConfig;

// Stateful event-condition-action loop over successive trial windows.
typedef struct SdDetector SdDetector;

// Segmented signature.
typedef struct SdSignature SdSignature;

// Outcome of feeding one trial window to a detector.
typedef struct SdWindowResult {
  uint32_t anomaly_count;
  bool event;
  bool changed;
  // Anomaly threshold after feedback adjustment.
  uint32_t f_thresh;
} SdWindowResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Error message from the most recent call on this thread, or null if that
// call succeeded. Valid until the next call into this library on the same
// thread.
const char *sd_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sd_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void sd_string_free(char *s);

// Generates a signature over `[start_day, start_day + trial_len)` from a
// row-major matrix of `num_trials` trials.
//
// # Safety
// `values` must point to `num_trials * trial_len` doubles; `out` must be
// writable.
enum SdStatus sd_signature_generate(const double *values,
                                    size_t num_trials,
                                    size_t trial_len,
                                    uint32_t start_day,
                                    struct SdSignature **out);

// Parses a signature from JSON: one segment object or an array of segments.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum SdStatus sd_signature_from_json(const char *json, struct SdSignature **out);

// Serializes a signature as a JSON array of segments.
//
// # Safety
// `sig` must be a live handle; `out` must be writable.
enum SdStatus sd_signature_to_json(const struct SdSignature *sig, char **out);

// Number of days the signature covers, or 0 for a null handle.
//
// # Safety
// `sig` must be null or a live handle.
size_t sd_signature_len(const struct SdSignature *sig);

// First day the signature covers, or 0 for a null handle.
//
// # Safety
// `sig` must be null or a live handle.
uint32_t sd_signature_start_day(const struct SdSignature *sig);

// Copies the normalized values into `buf`. Fails with `BufferTooSmall` when
// `cap` is under [`sd_signature_len`].
//
// # Safety
// `sig` must be a live handle; `buf` must hold `cap` doubles.
enum SdStatus sd_signature_values(const struct SdSignature *sig, double *buf, size_t cap);

// # Safety
// `sig` must be null or a handle not yet freed.
void sd_signature_free(struct SdSignature *sig);

// Scores one trial starting at `start_day` against the signature.
//
// # Safety
// `values` must hold `len` doubles; `sig` must be live; `out` writable.
enum SdStatus sd_similarity(const double *values,
                            size_t len,
                            uint32_t start_day,
                            const struct SdSignature *sig,
                            enum SdMeasure measure,
                            double *out);

// Runs the CUSUM chart over `x`. `ul` and `ll` receive `n` sums each and may
// be null. `first_violation` receives the 1-based index of the first
// violation, or 0 when there is none.
//
// # Safety
// `x` must hold `n` doubles; non-null `ul`/`ll` must hold `n` doubles.
enum SdStatus sd_cusum_chart(const double *x,
                             size_t n,
                             double target_mean,
                             double target_std,
                             double shift_n,
                             double control_c,
                             double *ul,
                             double *ll,
                             size_t *first_violation);

// Default simulation configuration.
struct SdConfig *sd_config_new(void);

// Applies `key=value` lines (file syntax) on top of the current values.
//
// # Safety
// `cfg` must be live; `text` NUL-terminated.
enum SdStatus sd_config_apply_text(struct SdConfig *cfg, const char *text);

// Sets one key. The config is unchanged on failure.
//
// # Safety
// `cfg` must be live; `key` and `value` NUL-terminated.
enum SdStatus sd_config_set(struct SdConfig *cfg, const char *key, const char *value);

// Effective configuration as `key=value` lines.
//
// # Safety
// `cfg` must be live; `out` writable.
enum SdStatus sd_config_to_text(const struct SdConfig *cfg, char **out);

// # Safety
// `cfg` must be null or a handle not yet freed.
void sd_config_free(struct SdConfig *cfg);

// Runs one simulation run and returns its log line as JSON.
//
// # Safety
// `cfg` must be live; `out` writable.
enum SdStatus sd_run_once(const struct SdConfig *cfg, uint32_t run_id, char **out);

// Sweeps `axis` ("similarity" or "anomaly") and returns the sweep CSV.
//
// # Safety
// `cfg` must be live; `axis` NUL-terminated; `out` writable.
enum SdStatus sd_sweep_csv(const struct SdConfig *cfg, const char *axis, char **out);

// Creates a detector over a copy of `sig` with default CUSUM and feedback
// settings. Window `w` covers days `[w * trial_days, (w + 1) * trial_days)`.
//
// # Safety
// `sig` must be live; `out` writable.
enum SdStatus sd_detector_new(const struct SdSignature *sig,
                              uint32_t trial_days,
                              double t_s,
                              uint32_t f_thresh,
                              enum SdMeasure measure,
                              struct SdDetector **out);

// Feeds one window of trials (row-major, `num_trials x trial_days`) through
// event detection, the condition check and the action.
//
// # Safety
// `det` must be live; `values` must hold `num_trials * trial_days` doubles;
// `out` writable.
enum SdStatus sd_detector_process_window(struct SdDetector *det,
                                         uint32_t window_id,
                                         const double *values,
                                         size_t num_trials,
                                         struct SdWindowResult *out);

// The detector's current signature as a new handle.
//
// # Safety
// `det` must be live; `out` writable.
enum SdStatus sd_detector_signature(const struct SdDetector *det, struct SdSignature **out);

// # Safety
// `det` must be null or a handle not yet freed.
void sd_detector_free(struct SdDetector *det);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGDRIFT_H */
