#ifndef UNILIFT_H
#define UNILIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UniliftStatus {
  UNILIFT_STATUS_OK = 0,
  UNILIFT_STATUS_NULL_POINTER = 1,
  UNILIFT_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed or inconsistent marginal or process specification.
   */
  UNILIFT_STATUS_INVALID_SPEC = 3,
  UNILIFT_STATUS_INVALID_ARGUMENT = 4,
  /**
   * A value outside the support of its marginal.
   */
  UNILIFT_STATUS_NOT_SUPPORTED = 5,
  UNILIFT_STATUS_SIZE_CAP = 6,
  /**
   * Series without decay or an indefinite covariance.
   */
  UNILIFT_STATUS_NUMERICAL = 7,
  UNILIFT_STATUS_PANIC = 8,
} UniliftStatus;

/**
 * Marginal laws, one per coordinate.
 */
typedef struct UniliftMarginals UniliftMarginals;

typedef struct UniliftProcess UniliftProcess;

typedef struct UniliftCoefficients {
  double alpha;
  double beta;
  double phi;
} UniliftCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *unilift_version(void);

/**
 * Message of the last failed call on this thread, or an empty string after
 * a successful one. Valid until the next call from the same thread.
 */
const char *unilift_last_error(void);

/**
 * Parses one marginal object or an array of them.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum UniliftStatus unilift_marginals_from_json(const char *json, struct UniliftMarginals **out);

/**
 * # Safety
 * `m` must be null or a handle from this library not yet freed.
 */
void unilift_marginals_free(struct UniliftMarginals *m);

/**
 * Number of coordinates, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t unilift_marginals_dim(const struct UniliftMarginals *m);

/**
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum UniliftStatus unilift_marginal_cdf(const struct UniliftMarginals *m,
                                        size_t coord,
                                        double t,
                                        double *out);

/**
 * Generalized inverse at a level in `(0, 1)`.
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum UniliftStatus unilift_marginal_quantile(const struct UniliftMarginals *m,
                                             size_t coord,
                                             double s,
                                             double *out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum UniliftStatus unilift_process_from_json(const char *json, struct UniliftProcess **out);

/**
 * # Safety
 * `p` must be null or a handle from this library not yet freed.
 */
void unilift_process_free(struct UniliftProcess *p);

/**
 * # Safety
 * `p` must be null or a live handle.
 */
size_t unilift_process_dim(const struct UniliftProcess *p);

/**
 * # Safety
 * `p` must be null or a live handle.
 */
size_t unilift_process_states(const struct UniliftProcess *p);

/**
 * Marginal law of each observed coordinate under the stationary law.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum UniliftStatus unilift_process_observed_marginals(const struct UniliftProcess *p,
                                                      struct UniliftMarginals **out);

/**
 * Samples `rows` observations into `x_out` (`rows * dim` doubles).
 *
 * # Safety
 * `p` must be a live handle; `x_out` must hold `rows * dim` doubles.
 */
enum UniliftStatus unilift_process_simulate(const struct UniliftProcess *p,
                                            uint64_t seed,
                                            size_t rows,
                                            double *x_out);

/**
 * Lifts `rows` observed points into `u_out`.
 *
 * # Safety
 * `m` must be a live handle; `x` and `u_out` must hold `rows * dim`
 * doubles each.
 */
enum UniliftStatus unilift_lift_path(const struct UniliftMarginals *m,
                                     const double *x,
                                     size_t rows,
                                     uint64_t seed,
                                     double *u_out);

/**
 * Coordinatewise quantile map of `rows` levels into `x_out`.
 *
 * # Safety
 * `m` must be a live handle; `u` and `x_out` must hold `rows * dim`
 * doubles each.
 */
enum UniliftStatus unilift_project_path(const struct UniliftMarginals *m,
                                        const double *u,
                                        size_t rows,
                                        double *x_out);

/**
 * Exact coefficients over observed blocks of length `block_len` at lag `n`.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum UniliftStatus unilift_mixing_exact(const struct UniliftProcess *p,
                                        size_t n,
                                        size_t block_len,
                                        struct UniliftCoefficients *out);

/**
 * Exact coefficients of the lifted process over atom intervals split `r`
 * ways.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum UniliftStatus unilift_mixing_lifted(const struct UniliftProcess *p,
                                         size_t n,
                                         size_t block_len,
                                         size_t r,
                                         struct UniliftCoefficients *out);

/**
 * Long-run covariance of the indicators at `s` and `s2` (each `dim`
 * doubles), with the truncation chosen automatically.
 *
 * # Safety
 * `p` must be a live handle; `s` and `s2` must hold `dim` doubles;
 * `value_out` must be writable; `tail_bound_out` may be null.
 */
enum UniliftStatus unilift_gamma(const struct UniliftProcess *p,
                                 const double *s,
                                 const double *s2,
                                 double *value_out,
                                 double *tail_bound_out);

/**
 * Runs the verification suite. `process_json` may be null for the default
 * chain. The JSON report is returned in `report_out` and must be released
 * with [`unilift_string_free`].
 *
 * # Safety
 * `process_json` must be null or NUL-terminated; `passed_out` and
 * `report_out` must be writable.
 */
enum UniliftStatus unilift_verify(uint64_t seed,
                                  const char *process_json,
                                  bool *passed_out,
                                  char **report_out);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void unilift_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UNILIFT_H */
