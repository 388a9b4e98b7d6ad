#ifndef SIASIM_H
#define SIASIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SiasimConvention {
  SIASIM_CONVENTION_PAPER_REAL = 0,
  SIASIM_CONVENTION_COMPLEX_EXACT = 1,
} SiasimConvention;

typedef enum SiasimMode {
  SIASIM_MODE_ANALYTIC = 0,
  SIASIM_MODE_EMPIRICAL = 1,
  SIASIM_MODE_BOTH = 2,
} SiasimMode;

/*
 Result codes. `SIASIM_STATUS_OK` is zero; everything else is a failure
 with a message available from `siasim_last_error_message`.
 */
typedef enum SiasimStatus {
  SIASIM_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  SIASIM_STATUS_NULL_POINTER = 1,
  /*
   A string argument was not valid UTF-8.
   */
  SIASIM_STATUS_INVALID_UTF8 = 2,
  /*
   Unreadable or malformed input: config document, file, CSV.
   */
  SIASIM_STATUS_INPUT = 3,
  /*
   Well-formed input outside the model: bad parameter, singular channel,
   non-converged SVD.
   */
  SIASIM_STATUS_DOMAIN = 4,
  /*
   The performance target cannot be met even at zero distortion.
   */
  SIASIM_STATUS_UNREACHABLE = 5,
  /*
   Index past the end, or a query the handle cannot answer.
   */
  SIASIM_STATUS_OUT_OF_RANGE = 6,
  /*
   A Rust panic was caught at the boundary. The handle involved should be
   treated as unusable.
   */
  SIASIM_STATUS_PANIC = 7,
} SiasimStatus;

/*
 A validated scenario configuration.
 */
typedef struct SiasimConfig SiasimConfig;

/*
 Output of `siasim_run`.
 */
typedef struct SiasimResults SiasimResults;

/*
 One row of a run, matching the columns of the CSV output. Fields the run
 did not compute are NaN.
 */
typedef struct SiasimPoint {
  /*
   Index into the config's `powers`, 0 for the strongest user.
   */
  size_t user;
  size_t snr_index;
  double snr_db;
  double sid_noise;
  double sid_interf;
  double sid_cbr;
  double sid_sic;
  double sid_total;
  double perf_pred;
  double sid_th;
  double sop_analytic;
  double sid_mean_emp;
  double sid_stderr;
  double sop_emp;
  double gap_abs;
} SiasimPoint;

/*
 Distortion terms of one prediction.
 */
typedef struct SiasimBreakdown {
  double noise;
  double interference;
  double cbr;
  double sic;
  double total;
} SiasimBreakdown;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *siasim_version(void);

/*
 Copies the calling thread's last error message into `buf` (truncated and
 always NUL-terminated when `len > 0`). Returns the full message length in
 bytes, not counting the terminator, so a caller can size a buffer with a
 first call passing `len = 0`. Successful calls clear the message.

 # Safety
 `buf` must be null or point to at least `len` writable bytes.
 */
size_t siasim_last_error_message(char *buf, size_t len);

/*
 Parses and validates a JSON scenario document. A relative
 `profile_path` is resolved against the working directory.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum SiasimStatus siasim_config_from_json(const char *json, struct SiasimConfig **out);

/*
 Loads a scenario from a JSON file; a relative `profile_path` inside it
 is resolved against the file's directory.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SiasimStatus siasim_config_load(const char *path, struct SiasimConfig **out);

/*
 Releases a config. Null is ignored.

 # Safety
 `config` must be null or a handle from this library not yet freed.
 */
void siasim_config_free(struct SiasimConfig *config);

/*
 # Safety
 `config` must be a live handle.
 */
enum SiasimStatus siasim_config_set_seed(struct SiasimConfig *config, uint64_t seed);

/*
 # Safety
 `config` must be a live handle.
 */
enum SiasimStatus siasim_config_set_trials(struct SiasimConfig *config, size_t trials);

/*
 SID threshold implied by the config's performance model and target.

 # Safety
 `config` must be a live handle; `out` must be writable.
 */
enum SiasimStatus siasim_config_sid_threshold(const struct SiasimConfig *config, double *out);

/*
 Runs the sweep described by `config`. `threads = 0` uses the shared
 global pool; otherwise a dedicated pool of that size is built. Results do
 not depend on the thread count. `tolerance` is used only in
 `SIASIM_MODE_BOTH`, where it sets the pass/fail bound on the outage gap.

 # Safety
 `config` must be a live handle; `out` must be writable.
 */
enum SiasimStatus siasim_run(const struct SiasimConfig *config,
                             enum SiasimMode mode,
                             size_t threads,
                             double tolerance,
                             struct SiasimResults **out);

/*
 Releases results. Null is ignored.

 # Safety
 `results` must be null or a handle from this library not yet freed.
 */
void siasim_results_free(struct SiasimResults *results);

/*
 Number of rows (SNR points times users); 0 for a null handle.

 # Safety
 `results` must be null or a live handle.
 */
size_t siasim_results_len(const struct SiasimResults *results);

/*
 Row `index`, SNR-major with users inner.

 # Safety
 `results` must be a live handle; `out` must be writable.
 */
enum SiasimStatus siasim_results_point(const struct SiasimResults *results,
                                       size_t index,
                                       struct SiasimPoint *out);

/*
 Largest outage gap and whether it is within tolerance. Only results from
 `SIASIM_MODE_BOTH` carry a comparison; others give
 `SIASIM_STATUS_OUT_OF_RANGE`.

 # Safety
 `results` must be a live handle; `max_gap` and `passed` must be writable.
 */
enum SiasimStatus siasim_results_comparison(const struct SiasimResults *results,
                                            double *max_gap,
                                            bool *passed);

/*
 Writes the results CSV, the same format the command-line tool emits.

 # Safety
 `results` must be a live handle; `path` a NUL-terminated string.
 */
enum SiasimStatus siasim_results_write_csv(const struct SiasimResults *results, const char *path);

/*
 Smallest SID at which the affine performance model still meets `target`.

 # Safety
 `out` must be writable.
 */
enum SiasimStatus siasim_sid_threshold(double target, double a1, double a2, double *out);

/*
 Predicted task performance at a given SID, clamped to [0, 1].

 # Safety
 `out` must be writable.
 */
enum SiasimStatus siasim_perf_from_sid(double sid, double a1, double a2, double *out);

/*
 Residual weighted distortion after semantic SIC, `b1*sid + b2` floored
 at zero.

 # Safety
 `out` must be writable.
 */
enum SiasimStatus siasim_te_eval(double sid, double b1, double b2, double *out);

/*
 Gaussian outage probability `P(det + noise > threshold)` where the noise
 term has per-cell variance `noise_variance` and weight sums
 `weight_sum`, `weight_sq_sum`.

 # Safety
 `out` must be writable.
 */
enum SiasimStatus siasim_sop(double deterministic,
                             double noise_variance,
                             double weight_sum,
                             double weight_sq_sum,
                             double threshold,
                             enum SiasimConvention convention,
                             double *out);

/*
 Single-user AWGN SID for a frame of `n` cells with the `k` most
 important kept.

 # Safety
 `weights` and `energies` must each point to `n` readable doubles; `out`
 must be writable.
 */
enum SiasimStatus siasim_sid_su_siso(const double *weights,
                                     const double *energies,
                                     size_t n,
                                     size_t k,
                                     double noise_variance,
                                     struct SiasimBreakdown *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIASIM_H */
