#ifndef ROBUST_DESIGN_H
#define ROBUST_DESIGN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RdStatus {
  RD_STATUS_OK = 0,
  RD_STATUS_NULL_POINTER = 1,
  RD_STATUS_INVALID_ARGUMENT = 2,
  RD_STATUS_INFEASIBLE = 3,
  RD_STATUS_NUMERICAL = 4,
  RD_STATUS_BUFFER_SIZE = 5,
  RD_STATUS_PANIC = 6,
} RdStatus;

// Opaque model: a design space with its orthonormalized regressors.
typedef struct RdModel RdModel;

// Optimizer settings. Zero `max_iter` means the library default (`200 N`).
typedef struct RdOptions {
  double tol;
  size_t max_iter;
  double prune_below;
} RdOptions;

// Summary of a solved design.
typedef struct RdFrontierPoint {
  double nu;
  double var;
  double maxbias;
  double cmb;
  double loss;
  size_t iterations;
  bool converged;
  // Set by the bounded searches when the bound is met on a flat stretch.
  bool plateau;
} RdFrontierPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a polynomial model on a Cartesian grid. `lower`, `upper` and
// `counts` have `dim` entries each.
//
// # Safety
// The array arguments must point to `dim` readable elements and `out` to a
// writable handle slot.
enum RdStatus rd_model_new_grid(const double *lower,
                                const double *upper,
                                const size_t *counts,
                                size_t dim,
                                size_t degree,
                                bool intercept,
                                struct RdModel **out);

// Builds a polynomial model on explicit points given row-major as an
// `n_points x dim` array.
//
// # Safety
// `points` must point to `n_points * dim` readable values and `out` to a
// writable handle slot.
enum RdStatus rd_model_new_points(const double *points,
                                  size_t n_points,
                                  size_t dim,
                                  size_t degree,
                                  bool intercept,
                                  struct RdModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a handle from `rd_model_new_*` not yet freed.
void rd_model_free(struct RdModel *model);

// Number of design points N, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t rd_model_n_points(const struct RdModel *model);

// Number of regression parameters p, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
size_t rd_model_n_params(const struct RdModel *model);

// Variance and maximum squared bias of the design `weights`.
//
// # Safety
// `weights` must hold `len` values; `var_out` and `maxbias_out` must be
// writable.
enum RdStatus rd_evaluate(const struct RdModel *model,
                          const double *weights,
                          size_t len,
                          double *var_out,
                          double *maxbias_out);

// Minimizes `(1 - nu) VAR + nu MAXBIAS`. `opts` may be null for defaults and
// `point_out` may be null if the summary is not wanted.
//
// # Safety
// `weights_out` must hold `len` writable values; non-null pointers must be
// valid.
enum RdStatus rd_minimize(const struct RdModel *model,
                          double nu,
                          const struct RdOptions *opts,
                          double *weights_out,
                          size_t len,
                          struct RdFrontierPoint *point_out);

// Minimum-variance design subject to `MAXBIAS <= b2`.
//
// # Safety
// As for [`rd_minimize`].
enum RdStatus rd_solve_rbb(const struct RdModel *model,
                           double b2,
                           const struct RdOptions *opts,
                           double *weights_out,
                           size_t len,
                           struct RdFrontierPoint *point_out);

// Minimum-bias design subject to `VAR <= s2`.
//
// # Safety
// As for [`rd_minimize`].
enum RdStatus rd_solve_rbv(const struct RdModel *model,
                           double s2,
                           const struct RdOptions *opts,
                           double *weights_out,
                           size_t len,
                           struct RdFrontierPoint *point_out);

// Frontier design whose coefficient of maximum bias matches `target`.
//
// # Safety
// As for [`rd_minimize`].
enum RdStatus rd_find_nu_for_cmb(const struct RdModel *model,
                                 double target,
                                 const struct RdOptions *opts,
                                 double *weights_out,
                                 size_t len,
                                 struct RdFrontierPoint *point_out);

// Rounds `weights` to `n` runs by ceiling then greedy removal.
//
// # Safety
// `weights` must hold `len` values and `alloc_out` `len` writable slots.
enum RdStatus rd_ceil_then_remove(const struct RdModel *model,
                                  const double *weights,
                                  size_t len,
                                  size_t n,
                                  double nu,
                                  size_t *alloc_out);

// Rounds `weights` to `n` runs by efficient apportionment on their support.
//
// # Safety
// `weights` must hold `len` values and `alloc_out` `len` writable slots.
enum RdStatus rd_efficient_apportionment(const double *weights,
                                         size_t len,
                                         size_t n,
                                         size_t *alloc_out);

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next library call on the same thread.
const char *rd_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *rd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUST_DESIGN_H */
