#ifndef DDCTRL_H
#define DDCTRL_H

/* Generated by cbindgen from ddctrl-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an FFI call.
 */
typedef enum DdctrlStatus {
  /**
   * Success; output buffers are filled.
   */
  DDCTRL_STATUS_OK = 0,
  /**
   * The requested bound is certified unreachable for the data.
   */
  DDCTRL_STATUS_INFEASIBLE = 1,
  /**
   * Invalid arguments (null pointers, bad dimensions, malformed data).
   */
  DDCTRL_STATUS_INVALID = 2,
  /**
   * Numerical failure or an inconclusive solve.
   */
  DDCTRL_STATUS_INCONCLUSIVE = 3,
} DdctrlStatus;

/**
 * Opaque measured-data handle.
 */
typedef struct DdctrlData DdctrlData;

/**
 * Solver options; get defaults from [`ddctrl_default_options`].
 */
typedef struct DdctrlOptions {
  /**
   * Strictness margin for the LMI blocks; <= 0 selects the per-block
   * default policy 1e-8 * (1 + |constant|).
   */
  double eps;
  /**
   * Relative duality-measure stopping tolerance.
   */
  double tol;
  /**
   * Newton iteration budget.
   */
  uintptr_t max_iter;
} DdctrlOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ddctrl_last_error_message(void);

struct DdctrlOptions ddctrl_default_options(void);

/**
 * Builds a data handle from trajectory buffers: `x` holds t+1 rows of n
 * state entries, `u` holds t rows of m inputs; pass `w` (t rows of d
 * entries) when disturbances were measured, else null with d = 0.
 *
 * # Safety
 * Buffers must match the stated dimensions; the returned handle must be
 * released with [`ddctrl_data_free`].
 */
enum DdctrlStatus ddctrl_data_create(uintptr_t n,
                                     uintptr_t m,
                                     uintptr_t d,
                                     uintptr_t t,
                                     const double *x,
                                     const double *u,
                                     const double *w,
                                     struct DdctrlData **out);

/**
 * Releases a data handle.
 *
 * # Safety
 * `data` must come from [`ddctrl_data_create`] and not be used afterwards.
 */
void ddctrl_data_free(struct DdctrlData *data);

/**
 * Synthesizes a fixed-γ suboptimal LQR gain from the data. `out_k` receives
 * the m×n gain row-major; `out_gamma` the exact data-consistent cost.
 *
 * # Safety
 * `q` is n×n, `r` is m×m, `x0` has n entries, `out_k` has m·n slots.
 */
enum DdctrlStatus ddctrl_synth_lqr(const struct DdctrlData *data,
                                   const double *q,
                                   const double *r,
                                   const double *x0,
                                   double gamma,
                                   const struct DdctrlOptions *opts,
                                   double *out_k,
                                   double *out_gamma);

/**
 * Minimizes γ subject to the informativity LMIs; outputs as in
 * [`ddctrl_synth_lqr`].
 *
 * # Safety
 * As for [`ddctrl_synth_lqr`].
 */
enum DdctrlStatus ddctrl_min_gamma_lqr(const struct DdctrlData *data,
                                       const double *q,
                                       const double *r,
                                       const double *x0,
                                       const struct DdctrlOptions *opts,
                                       double *out_k,
                                       double *out_gamma);

/**
 * Synthesizes an H2 suboptimal gain from data with measured disturbances.
 * `c` is p×n and `d_mat` p×m row-major. On success `out_condition` is 1 or
 * 2 for the zero-output / identified-E condition, `out_trace_bound` holds
 * the certified bound, and `out_e` (n×d row-major, may be null) receives
 * the identified disturbance matrix under condition 2.
 *
 * # Safety
 * Buffer sizes must match the stated dimensions.
 */
enum DdctrlStatus ddctrl_synth_h2(const struct DdctrlData *data,
                                  const double *c,
                                  const double *d_mat,
                                  uintptr_t p,
                                  double gamma,
                                  const struct DdctrlOptions *opts,
                                  double *out_k,
                                  double *out_trace_bound,
                                  int *out_condition,
                                  double *out_e);

/**
 * Exact LQR cost of a gain on a known system (model-based oracle);
 * fails with `DDCTRL_INFEASIBLE` when the closed loop is unstable.
 *
 * # Safety
 * `a` is n×n, `b` n×m, `k` m×n, `q` n×n, `r` m×m, `x0` n entries.
 */
enum DdctrlStatus ddctrl_lqr_cost(uintptr_t n,
                                  uintptr_t m,
                                  const double *a,
                                  const double *b,
                                  const double *k,
                                  const double *q,
                                  const double *r,
                                  const double *x0,
                                  double *out_cost);

/**
 * Largest eigenvalue modulus of a square matrix.
 *
 * # Safety
 * `a` must hold n·n entries.
 */
enum DdctrlStatus ddctrl_spectral_radius(uintptr_t n, const double *a, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDCTRL_H */
