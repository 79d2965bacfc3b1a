#ifndef NLEP_H
#define NLEP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NlepStatus {
  NLEP_STATUS_OK = 0,
  NLEP_STATUS_NULL_POINTER = 1,
  NLEP_STATUS_INVALID_UTF8 = 2,
  NLEP_STATUS_PARSE = 3,
  NLEP_STATUS_INVALID_ARGUMENT = 4,
  NLEP_STATUS_DOMAIN = 5,
  NLEP_STATUS_SINGULAR_ON_CONTOUR = 6,
  NLEP_STATUS_NO_CONVERGENCE = 7,
  NLEP_STATUS_BUFFER_TOO_SMALL = 8,
  NLEP_STATUS_NUMERICAL = 9,
  NLEP_STATUS_PANIC = 10,
} NlepStatus;

/**
 * Opaque handle to a parsed matrix function.
 */
typedef struct NlepMatFun NlepMatFun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to fit). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t nlep_last_error_message(char *buf, size_t len);

/**
 * Parses a problem document (JSON, NUL-terminated) into a new handle.
 *
 * # Safety
 * `json` must be a valid C string; `out` must be writable.
 */
enum NlepStatus nlep_matfun_from_json(const char *json, struct NlepMatFun **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `h` must come from [`nlep_matfun_from_json`] and not be freed twice.
 */
void nlep_matfun_free(struct NlepMatFun *h);

/**
 * Matrix dimension, or 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t nlep_matfun_dim(const struct NlepMatFun *h);

/**
 * Writes `T(re + i im)` into `out` as `2 n^2` doubles, row-major, each entry
 * as (re, im).
 *
 * # Safety
 * `h` must be a live handle; `out` must point to `len` writable doubles.
 */
enum NlepStatus nlep_matfun_eval(const struct NlepMatFun *h,
                                 double re,
                                 double im,
                                 double *out,
                                 size_t len);

/**
 * Smallest singular value of `T(re + i im)`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum NlepStatus nlep_sigma_min(const struct NlepMatFun *h, double re, double im, double *out);

/**
 * Number of eigenvalues (with multiplicity) inside the circle of radius `r`
 * about `cre + i cim`, sampled as a polygon with `vertices` corners.
 *
 * # Safety
 * `h` must be a live handle; `count` must be writable.
 */
enum NlepStatus nlep_count_circle(const struct NlepMatFun *h,
                                  double cre,
                                  double cim,
                                  double r,
                                  size_t vertices,
                                  int64_t *count);

/**
 * Branch `k` of the Lambert W function at `re + i im`.
 *
 * # Safety
 * `out_re` and `out_im` must be writable.
 */
enum NlepStatus nlep_lambert_w(int64_t k, double re, double im, double *out_re, double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLEP_H */
