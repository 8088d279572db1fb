#ifndef TRIZERO_H
#define TRIZERO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every entry point.
typedef enum TrzStatus {
  TRZ_STATUS_OK = 0,
  TRZ_STATUS_NULL_POINTER = 1,
  TRZ_STATUS_INVALID_UTF8 = 2,
  TRZ_STATUS_PARSE = 3,
  TRZ_STATUS_VALIDATION = 4,
  // Parameters outside the supported domain or degenerate.
  TRZ_STATUS_DOMAIN = 5,
  // A tolerance-checked residual was exceeded.
  TRZ_STATUS_RESIDUAL = 6,
  // Any other numerical failure.
  TRZ_STATUS_NUMERICAL = 7,
  TRZ_STATUS_PANIC = 8,
} TrzStatus;

// Normal form coefficients.
typedef struct TrzNormalForm TrzNormalForm;

// Locus parameters.
typedef struct TrzParams TrzParams;

// Nonlinearities `F`, `G`.
typedef struct TrzSeries TrzSeries;

// Plain values of a [`TrzParams`] handle.
typedef struct TrzParamsValues {
  double a;
  double beta;
  double tau0;
  double b;
  double alpha;
  double kappa1;
  double kappa2;
} TrzParamsValues;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next `trz_*` call on the same thread.
const char *trz_last_error(void);

// Locus parameters for `a > 0` and `beta`.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum TrzStatus trz_locus(double a, double beta, struct TrzParams **out);

// # Safety
// `params` must come from [`trz_locus`]; `out` must be valid for writes.
enum TrzStatus trz_params_get(const struct TrzParams *params, struct TrzParamsValues *out);

// # Safety
// `params` must come from [`trz_locus`] and not be used afterwards. Null is ignored.
void trz_params_free(struct TrzParams *params);

// Parses labeled coefficients (`A[2,0] = 1.0` lines after the format
// header). `order` 0 takes the highest degree present.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be valid for writes.
enum TrzStatus trz_normal_form_parse(const char *text, size_t order, struct TrzNormalForm **out);

// Coefficient of `label` (e.g. `"B[3,1]"`); 0 for degrees above the series order.
//
// # Safety
// `nf` must be a live handle, `label` NUL-terminated, `out` valid for writes.
enum TrzStatus trz_normal_form_coefficient(const struct TrzNormalForm *nf,
                                           const char *label,
                                           double *out);

// Largest coefficient difference between two normal forms.
//
// # Safety
// Both handles must be live; `out` valid for writes.
enum TrzStatus trz_normal_form_max_diff(const struct TrzNormalForm *lhs,
                                        const struct TrzNormalForm *rhs,
                                        double *out);

// # Safety
// `nf` must be a live handle; `out` valid for writes. Free the result with [`trz_string_free`].
enum TrzStatus trz_normal_form_to_string(const struct TrzNormalForm *nf, char **out);

// # Safety
// `nf` must be a handle from this library, not used afterwards. Null is ignored.
void trz_normal_form_free(struct TrzNormalForm *nf);

// Parses `F = ...` / `G = ...` lines after the format header.
//
// # Safety
// `text` must be NUL-terminated; `out` valid for writes.
enum TrzStatus trz_series_parse(const char *text, struct TrzSeries **out);

// # Safety
// `series` must be a live handle; `out` valid for writes. Free the result with [`trz_string_free`].
enum TrzStatus trz_series_to_string(const struct TrzSeries *series, char **out);

// # Safety
// `series` must be a handle from this library, not used afterwards. Null is ignored.
void trz_series_free(struct TrzSeries *series);

// Nonlinearities whose normal form up to the target's order is `target`.
//
// # Safety
// Handles must be live; `out` valid for writes.
enum TrzStatus trz_realize(const struct TrzParams *params,
                           const struct TrzNormalForm *target,
                           struct TrzSeries **out);

// Normal form of `series` up to `order` (2..=6).
//
// # Safety
// Handles must be live; `out` valid for writes.
enum TrzStatus trz_reduce(const struct TrzParams *params,
                          const struct TrzSeries *series,
                          size_t order,
                          struct TrzNormalForm **out);

// # Safety
// `s` must be a string returned by this library, not used afterwards. Null is ignored.
void trz_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRIZERO_H */
