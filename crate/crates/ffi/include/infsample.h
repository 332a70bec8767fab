#ifndef INFSAMPLE_H
#define INFSAMPLE_H

/* Generated by cbindgen from the infsample-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum InfsStatus {
  INFS_STATUS_OK = 0,
  INFS_STATUS_NULL_POINTER = 1,
  INFS_STATUS_INVALID_ARGUMENT = 2,
  INFS_STATUS_IO = 3,
  INFS_STATUS_PARSE = 4,
  INFS_STATUS_DIMENSION_MISMATCH = 5,
  INFS_STATUS_INVALID_RESPONSE = 6,
  INFS_STATUS_INCOMPATIBLE_SCHEME = 7,
  INFS_STATUS_INFEASIBLE_BUDGET = 8,
  INFS_STATUS_EMPTY_SAMPLE = 9,
  INFS_STATUS_BUFFER_TOO_SMALL = 10,
  INFS_STATUS_PANIC = 11,
} InfsStatus;

/**
 * Model family selector; `tau` arguments are read only for `INFS_FAMILY_QUANTILE`.
 */
typedef enum InfsFamily {
  INFS_FAMILY_OLS = 0,
  INFS_FAMILY_LOGISTIC = 1,
  INFS_FAMILY_POISSON = 2,
  INFS_FAMILY_QUANTILE = 3,
} InfsFamily;

/**
 * Opaque dataset handle.
 */
typedef struct InfsDataset InfsDataset;

/**
 * Opaque Poisson draw handle.
 */
typedef struct InfsDraw InfsDraw;

/**
 * Opaque fit handle.
 */
typedef struct InfsFit InfsFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *infs_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *infs_version(void);

/**
 * Build a dataset from row-major `x` (`n * d` values) and `y` (`n` values).
 *
 * # Safety
 * `x` and `y` must point to at least `n * d` and `n` readable doubles; `out`
 * must be writable.
 */
enum InfsStatus infs_dataset_new(const double *x,
                                 const double *y,
                                 size_t n,
                                 size_t d,
                                 struct InfsDataset **out);

/**
 * Load a numeric CSV. `response` names the y column; with `add_intercept` a
 * leading column of ones is added.
 *
 * # Safety
 * `path` and `response` must be NUL-terminated strings; `out` must be writable.
 */
enum InfsStatus infs_dataset_load_csv(const char *path,
                                      const char *response,
                                      bool add_intercept,
                                      struct InfsDataset **out);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle from this library.
 */
size_t infs_dataset_rows(const struct InfsDataset *ds);

/**
 * Number of predictor columns, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle from this library.
 */
size_t infs_dataset_cols(const struct InfsDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle from this library that has not been freed.
 */
void infs_dataset_free(struct InfsDataset *ds);

/**
 * Weighted fit. `weights` may be null for unit weights, otherwise it holds one
 * value per row.
 *
 * # Safety
 * `ds` must be a live handle, `weights` null or `rows` readable doubles, `out` writable.
 */
enum InfsStatus infs_fit(const struct InfsDataset *ds,
                         const double *weights,
                         enum InfsFamily kind,
                         double tau,
                         struct InfsFit **out);

/**
 * Number of coefficients, or 0 for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t infs_fit_dim(const struct InfsFit *fit);

/**
 * Copy the coefficients into `out` (capacity `len`).
 *
 * # Safety
 * `fit` must be a live handle and `out` writable for `len` doubles.
 */
enum InfsStatus infs_fit_theta(const struct InfsFit *fit, double *out, size_t len);

/**
 * Whether the solver met its convergence criterion; false for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
bool infs_fit_converged(const struct InfsFit *fit);

/**
 * Final weighted objective, NaN for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double infs_fit_objective(const struct InfsFit *fit);

/**
 * # Safety
 * `fit` must be null or a handle that has not been freed.
 */
void infs_fit_free(struct InfsFit *fit);

/**
 * Importance sizes for every row of `ds`. `scheme` is a scheme name such as
 * `"influence-coef"`; `theta` holds the pilot coefficients (`cols` values);
 * `pilot` may be null, otherwise curvature is estimated on its rows. Writes
 * `rows` values to `out`.
 *
 * # Safety
 * Handles must be live or null where allowed; `theta` readable for `theta_len`
 * doubles and `out` writable for `out_len` doubles.
 */
enum InfsStatus infs_importance_scores(const struct InfsDataset *ds,
                                       const struct InfsDataset *pilot,
                                       const char *scheme,
                                       enum InfsFamily kind,
                                       double tau,
                                       const double *theta,
                                       size_t theta_len,
                                       double *out,
                                       size_t out_len);

/**
 * Inclusion probabilities `min(1, max(alpha, c * size))` summing to `m`.
 * Writes `n` probabilities to `pi_out` and, if non-null, `c` to `scale_out`.
 *
 * # Safety
 * `sizes` readable and `pi_out` writable for `n` doubles; `scale_out` null or writable.
 */
enum InfsStatus infs_allocate(const double *sizes,
                              size_t n,
                              double m,
                              double alpha,
                              double *pi_out,
                              double *scale_out);

/**
 * Poisson sample from the probabilities `pi` (`n` values) with the given seed.
 *
 * # Safety
 * `pi` readable for `n` doubles; `out` writable.
 */
enum InfsStatus infs_poisson_draw(const double *pi, size_t n, uint64_t seed, struct InfsDraw **out);

/**
 * Number of sampled rows, or 0 for a null handle.
 *
 * # Safety
 * `draw` must be null or a live handle.
 */
size_t infs_draw_size(const struct InfsDraw *draw);

/**
 * Copy the sampled row indices (ascending) into `out` (capacity `len`).
 *
 * # Safety
 * `draw` must be a live handle and `out` writable for `len` values.
 */
enum InfsStatus infs_draw_indices(const struct InfsDraw *draw, size_t *out, size_t len);

/**
 * Copy the inverse-probability weights `1 / pi_i` of the sampled rows into `out`.
 *
 * # Safety
 * `draw` must be a live handle and `out` writable for `len` doubles.
 */
enum InfsStatus infs_draw_weights(const struct InfsDraw *draw, double *out, size_t len);

/**
 * # Safety
 * `draw` must be null or a handle that has not been freed.
 */
void infs_draw_free(struct InfsDraw *draw);

/**
 * `n^-2 sum size_i^2 (1 - pi_i) / pi_i` into `out`.
 *
 * # Safety
 * `sizes` and `pi` readable for `n` doubles; `out` writable.
 */
enum InfsStatus infs_design_variance(const double *sizes, const double *pi, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFSAMPLE_H */
