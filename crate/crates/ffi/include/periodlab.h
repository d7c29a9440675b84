#ifndef PERIODLAB_H
#define PERIODLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PeriodlabMode {
  PERIODLAB_MODE_WEAK = 0,
  PERIODLAB_MODE_NORMALIZED = 1,
  PERIODLAB_MODE_UNIT_SCALED = 2,
  PERIODLAB_MODE_CENTRALLY_RESCALED = 3,
} PeriodlabMode;

typedef enum PeriodlabStatus {
  PERIODLAB_STATUS_OK = 0,
  PERIODLAB_STATUS_NULL_POINTER = 1,
  PERIODLAB_STATUS_INVALID_ARGUMENT = 2,
  PERIODLAB_STATUS_PARSE = 3,
  PERIODLAB_STATUS_NUMERICAL = 4,
  PERIODLAB_STATUS_BUFFER_TOO_SMALL = 5,
  PERIODLAB_STATUS_PANIC = 6,
} PeriodlabStatus;

// Opaque polynomial handle.
typedef struct PeriodlabPolynomial PeriodlabPolynomial;

typedef struct PeriodlabVerdict {
  bool pass;
  double max_rel_err;
  double fit_residual;
  double loop_rel_change;
} PeriodlabVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a `periodlab/1` polynomial document.
//
// # Safety
// `json` must be a valid NUL-terminated string and `out` a valid pointer.
enum PeriodlabStatus periodlab_polynomial_from_json(const char *json,
                                                    struct PeriodlabPolynomial **out);

// Builds a polynomial from `len` terms `re[k] + i im[k]` times `x^xi[k] y^yj[k]`.
//
// # Safety
// The four arrays must each hold `len` elements; `out` must be valid.
enum PeriodlabStatus periodlab_polynomial_from_terms(size_t len,
                                                     const uint32_t *xi,
                                                     const uint32_t *yj,
                                                     const double *re,
                                                     const double *im,
                                                     struct PeriodlabPolynomial **out);

// Releases a handle; null is ignored.
//
// # Safety
// `p` must come from this library and not be used afterwards.
void periodlab_polynomial_free(struct PeriodlabPolynomial *p);

// Total degree, or -1 for the zero polynomial.
//
// # Safety
// `p` must be a valid handle.
enum PeriodlabStatus periodlab_polynomial_degree(const struct PeriodlabPolynomial *p, int32_t *out);

// # Safety
// `p` must be a valid handle; `out_re`, `out_im` valid pointers.
enum PeriodlabStatus periodlab_polynomial_eval(const struct PeriodlabPolynomial *p,
                                               double x_re,
                                               double x_im,
                                               double y_re,
                                               double y_im,
                                               double *out_re,
                                               double *out_im);

// Normal form of `p` as a new handle.
//
// # Safety
// `p` must be a valid handle and `out` a valid pointer.
enum PeriodlabStatus periodlab_polynomial_normalize(const struct PeriodlabPolynomial *p,
                                                    enum PeriodlabMode mode,
                                                    struct PeriodlabPolynomial **out);

// Writes the critical values sorted by `(re, im)`. `len` receives the count; with a
// capacity below it nothing is written and `BUFFER_TOO_SMALL` is returned.
//
// # Safety
// `re` and `im` must hold `cap` elements (may be null when `cap` is 0).
enum PeriodlabStatus periodlab_critical_values(const struct PeriodlabPolynomial *p,
                                               double *re,
                                               double *im,
                                               size_t cap,
                                               size_t *len);

// Numerical period determinant against the closed form at `samples` circle points,
// with the automatically chosen form tuple.
//
// # Safety
// `p` must be a valid handle and `out` a valid pointer.
enum PeriodlabStatus periodlab_verify_formula(const struct PeriodlabPolynomial *p,
                                              size_t samples,
                                              uint64_t seed,
                                              struct PeriodlabVerdict *out);

// log10 of the named bound entry (for example `"r0"` or `"delta0"`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum PeriodlabStatus periodlab_bound_log10(size_t n,
                                           double c_prime,
                                           double c_doubleprime,
                                           const char *name,
                                           double *out);

// Copies the last error message of this thread, NUL-terminated and truncated to
// `cap`. Returns the full message length excluding the terminator.
//
// # Safety
// `buf` must hold `cap` bytes (may be null when `cap` is 0).
size_t periodlab_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *periodlab_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERIODLAB_H */
