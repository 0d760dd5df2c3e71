/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef TSCALE_H
#define TSCALE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_UTF8 = 2,
  TS_STATUS_PARSE = 3,
  TS_STATUS_INVALID_SCALE = 4,
  TS_STATUS_NOT_IN_SCALE = 5,
  TS_STATUS_DOMAIN = 6,
  TS_STATUS_NOT_REGRESSIVE = 7,
  TS_STATUS_INVALID_ARGUMENT = 8,
  TS_STATUS_BUFFER_TOO_SMALL = 9,
  TS_STATUS_PANIC = 10,
} TsStatus;

// Opaque test function with its partial derivatives.
typedef struct TsFunction TsFunction;

// Opaque time scale.
typedef struct TsScale TsScale;

// A gap `(s_minus, s_plus)` of a scale.
typedef struct TsGap {
  double s_minus;
  double s_plus;
} TsGap;

// `f`, `f_t`, `f_x` and `f_xx` at one point.
typedef struct TsPartials {
  double f;
  double f_t;
  double f_x;
  double f_xx;
} TsPartials;

// Path sampling parameters shared by the per-path checks.
typedef struct TsPathConfig {
  // Refinement level n.
  uint32_t level;
  uint64_t seed;
  uint64_t path_id;
} TsPathConfig;

// Both sides of the Ito formula on one sampled path.
typedef struct TsItoResult {
  double lhs;
  double rhs;
  double residual;
  double correction_sum;
} TsItoResult;

// Closed-form stochastic exponential and the Euler recursion on one path.
typedef struct TsExpResult {
  double u;
  double d;
  double v;
  double closed_form;
  double recursive;
  double rel_error;
} TsExpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread (empty after a success).
// The pointer stays valid until the next call on the same thread.
const char *ts_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *ts_version(void);

// Builds a scale from its JSON spec, e.g. `{"pieces":[{"interval":[0,1]},{"point":1.5}]}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum TsStatus ts_scale_from_json(const char *json, struct TsScale **out);

// The closed interval `[a, b]`.
//
// # Safety
// `out` must be a writable pointer.
enum TsStatus ts_scale_interval(double a, double b, struct TsScale **out);

// `{q^k : kmin <= k <= kmax}`, plus 0 when `include_zero` is true.
//
// # Safety
// `out` must be a writable pointer.
enum TsStatus ts_scale_qscale(double q,
                              int32_t kmin,
                              int32_t kmax,
                              bool include_zero,
                              struct TsScale **out);

// Releases a scale. Null is ignored.
//
// # Safety
// `scale` must come from a `ts_scale_*` constructor and not be used afterwards.
void ts_scale_free(struct TsScale *scale);

// Forward jump `sigma(t)`; `t` must belong to the scale.
//
// # Safety
// `scale` must be a live handle and `out` a writable pointer.
enum TsStatus ts_scale_sigma(const struct TsScale *scale, double t, double *out);

// Backward jump `rho(t)`.
//
// # Safety
// `scale` must be a live handle and `out` a writable pointer.
enum TsStatus ts_scale_rho(const struct TsScale *scale, double t, double *out);

// Graininess `mu(t) = sigma(t) - t`.
//
// # Safety
// `scale` must be a live handle and `out` a writable pointer.
enum TsStatus ts_scale_mu(const struct TsScale *scale, double t, double *out);

// Last scale point at or before `t` (any `t >= min`).
//
// # Safety
// `scale` must be a live handle and `out` a writable pointer.
enum TsStatus ts_scale_sup_le(const struct TsScale *scale, double t, double *out);

// Smallest and largest scale points.
//
// # Safety
// `scale` must be a live handle; `min` and `max` writable pointers.
enum TsStatus ts_scale_bounds(const struct TsScale *scale, double *min, double *max);

// Copies the gaps into `buf` (capacity `cap`) and stores their count in
// `len`. Returns `BufferTooSmall` with `len` set when `cap` is too small;
// pass `buf = NULL, cap = 0` to query the count.
//
// # Safety
// `buf` must hold `cap` writable entries (or be null with `cap = 0`);
// `len` must be writable.
enum TsStatus ts_scale_gaps(const struct TsScale *scale,
                            struct TsGap *buf,
                            size_t cap,
                            size_t *len);

// Parses `f(t, x)` and derives `f_t`, `f_x`, `f_xx`.
//
// # Safety
// `source` must be a NUL-terminated string and `out` a writable pointer.
enum TsStatus ts_function_parse(const char *source, struct TsFunction **out);

// Releases a function. Null is ignored.
//
// # Safety
// `function` must come from [`ts_function_parse`] and not be used afterwards.
void ts_function_free(struct TsFunction *function);

// Evaluates the function and its partials at `(t, x)`.
//
// # Safety
// `function` must be a live handle and `out` a writable pointer.
enum TsStatus ts_function_eval(const struct TsFunction *function,
                               double t,
                               double x,
                               struct TsPartials *out);

// Samples one Brownian path on `[t1, t2]` and evaluates both sides of the
// Ito formula for `f(t, W_t)`.
//
// # Safety
// `scale`, `function` and `cfg` must be live pointers; `out` writable.
enum TsStatus ts_ito_check(const struct TsScale *scale,
                           const struct TsFunction *function,
                           double t1,
                           double t2,
                           const struct TsPathConfig *cfg,
                           struct TsItoResult *out);

// Closed-form stochastic exponential `E_A(t, t0)` with coefficient `A`
// given by `coefficient` (its `f`), next to the Euler recursion, on one path.
//
// # Safety
// `scale`, `coefficient` and `cfg` must be live pointers; `out` writable.
enum TsStatus ts_stoch_exp(const struct TsScale *scale,
                           const struct TsFunction *coefficient,
                           double t0,
                           double t,
                           const struct TsPathConfig *cfg,
                           struct TsExpResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSCALE_H */
