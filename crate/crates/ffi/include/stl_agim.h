#ifndef STL_AGIM_H
#define STL_AGIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes of every fallible call.
 */
typedef enum StlStatus {
  STL_STATUS_OK = 0,
  STL_STATUS_NULL_POINTER = 1,
  STL_STATUS_INVALID_UTF8 = 2,
  STL_STATUS_SYNTAX = 3,
  STL_STATUS_INVALID_INTERVAL = 4,
  STL_STATUS_INVALID_TRACE = 5,
  STL_STATUS_OUT_OF_DOMAIN = 6,
  STL_STATUS_OUT_OF_BOUNDS = 7,
  STL_STATUS_NOT_NORMALIZED = 8,
  STL_STATUS_UNKNOWN_VARIABLE = 9,
  STL_STATUS_UNSUPPORTED = 10,
  STL_STATUS_IO = 11,
  STL_STATUS_INTERNAL = 12,
  STL_STATUS_PANIC = 13,
} StlStatus;

/**
 * Parsed formula.
 */
typedef struct StlFormula StlFormula;

/**
 * Sampled, piecewise-linear multi-component signal.
 */
typedef struct StlTrace StlTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *stl_last_error(void);

/**
 * Parses `text` into a new formula stored in `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum StlStatus stl_formula_parse(const char *text, struct StlFormula **out);

/**
 * Releases a formula; null is ignored.
 *
 * # Safety
 * `formula` must come from this library and not be used afterwards.
 */
void stl_formula_free(struct StlFormula *formula);

/**
 * Trace duration the formula needs beyond the evaluation time.
 *
 * # Safety
 * `formula` must be a live handle and `out` writable.
 */
enum StlStatus stl_formula_horizon(const struct StlFormula *formula, double *out);

/**
 * Canonical text of the formula; release it with [`stl_string_free`].
 * Returns null if `formula` is null.
 *
 * # Safety
 * `formula` must be a live handle or null.
 */
char *stl_formula_to_string(const struct StlFormula *formula);

/**
 * New formula with thresholds mapped through the same normalization as
 * [`stl_trace_normalize`] with identical bounds.
 *
 * # Safety
 * `formula` must be a live handle, the three arrays must hold `count`
 * elements, and `out` must be writable.
 */
enum StlStatus stl_formula_normalize(const struct StlFormula *formula,
                                     const char *const *names,
                                     const double *lower,
                                     const double *upper,
                                     size_t count,
                                     struct StlFormula **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void stl_string_free(char *s);

/**
 * Builds a trace from `n_times` strictly increasing `times` and a row-major
 * `values` matrix of `n_times * n_vars` samples.
 *
 * # Safety
 * `names` must hold `n_vars` strings, `times` `n_times` values, `values`
 * `n_times * n_vars` values, and `out` must be writable.
 */
enum StlStatus stl_trace_new(const char *const *names,
                             size_t n_vars,
                             const double *times,
                             size_t n_times,
                             const double *values,
                             struct StlTrace **out);

/**
 * Reads a `time,name1,...` CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum StlStatus stl_trace_from_csv(const char *path, struct StlTrace **out);

/**
 * Releases a trace; null is ignored.
 *
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void stl_trace_free(struct StlTrace *trace);

/**
 * Number of samples in the trace.
 *
 * # Safety
 * `trace` must be a live handle and `out` writable.
 */
enum StlStatus stl_trace_len(const struct StlTrace *trace, size_t *out);

/**
 * New trace with the listed components mapped to `[-1, 1]`. With
 * `count == 0` the trace is only checked to already lie in `[-1, 1]`.
 *
 * # Safety
 * `trace` must be a live handle, the three arrays must hold `count`
 * elements, and `out` must be writable.
 */
enum StlStatus stl_trace_normalize(const struct StlTrace *trace,
                                   const char *const *names,
                                   const double *lower,
                                   const double *upper,
                                   size_t count,
                                   struct StlTrace **out);

/**
 * AGIM robustness at time `t` on a normalized trace. `grid_step <= 0`
 * selects the default quadrature step.
 *
 * # Safety
 * `formula` and `trace` must be live handles and `out` writable.
 */
enum StlStatus stl_eta(const struct StlFormula *formula,
                       const struct StlTrace *trace,
                       double t,
                       double grid_step,
                       double *out);

/**
 * Traditional (min/max) robustness at time `t`. `+inf` for `true`.
 *
 * # Safety
 * `formula` and `trace` must be live handles and `out` writable.
 */
enum StlStatus stl_rho(const struct StlFormula *formula,
                       const struct StlTrace *trace,
                       double t,
                       double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STL_AGIM_H */
