#ifndef SSNC_H
#define SSNC_H

#pragma once

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum {
  SSNC_STATUS_OK = 0,
  SSNC_STATUS_NULL_POINTER = 1,
  SSNC_STATUS_INVALID_ARGUMENT = 2,
  SSNC_STATUS_INVALID_DIMENSION = 3,
  SSNC_STATUS_NON_FINITE = 4,
  SSNC_STATUS_NO_NEGATIVE_CURVATURE = 5,
  SSNC_STATUS_DOMAIN = 6,
  SSNC_STATUS_INFEASIBLE = 7,
  SSNC_STATUS_CONFIG = 8,
  SSNC_STATUS_DIVERGED = 9,
  SSNC_STATUS_NOT_FOUND = 10,
  SSNC_STATUS_IO = 11,
  SSNC_STATUS_TRACE = 12,
  SSNC_STATUS_OUT_OF_RANGE = 13,
  SSNC_STATUS_PANIC = 14,
} SsncStatus;

typedef enum {
  SSNC_METHOD_SS2_NC_G = 0,
  SSNC_METHOD_SS_G = 1,
  SSNC_METHOD_SS_NC_CG = 2,
} SsncMethod;

typedef enum {
  SSNC_RUN_STATUS_HIT_STOPPING_TIME = 0,
  SSNC_RUN_STATUS_BUDGET_EXHAUSTED = 1,
  SSNC_RUN_STATUS_DIVERGED = 2,
} SsncRunStatus;

/**
 * Opaque handle to a finished (or diverged) run.
 */
typedef struct SsncRun SsncRun;

/**
 * Programmatic run settings: bounded noise with the coupled radii
 * `eps_g = eps_f^(1/2)`, `eps_H = eps_lambda = eps_f^(1/3)` and
 * `e_f = e_f_ratio * eps_f`; other solver parameters take their defaults.
 */
typedef struct {
  SsncMethod method;
  double eps_f;
  double e_f_ratio;
  uint64_t max_iters;
  /**
   * 0 means unlimited.
   */
  uint64_t max_fevals;
  uint64_t seed;
  /**
   * Gradient-norm floor of the stationarity test.
   */
  double epsbar_g;
  /**
   * Curvature floor of the stationarity test.
   */
  double epsbar_lambda;
  /**
   * Stop after the first stationary iterate instead of running out the budget.
   */
  bool halt_at_stopping_time;
} SsncRunSpec;

/**
 * Scalar fields of one iteration. NaN marks quantities not drawn.
 */
typedef struct {
  uint64_t k;
  uint64_t fevals;
  uint64_t gevals;
  uint64_t hevals;
  double f_true;
  double f_next_true;
  double grad_true_norm;
  double lambda_true;
  double g_est_norm;
  double lambda_est;
  double alpha_k;
  double beta_k;
  double alpha_next;
  double beta_next;
  bool omega_g;
  bool omega_h;
  bool theta_g;
  bool theta_h;
  bool i_f;
  bool i_g;
  bool ihat_f;
  bool i_h;
  int8_t sign_choice;
} SsncRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next `ssnc_*` call on the same thread.
 */
const char *ssnc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ssnc_version(void);

/**
 * Minimum eigenpair of the symmetric row-major `n x n` matrix `h`.
 * `eigvec` must hold `n` values.
 *
 * # Safety
 * `h` must point to `n * n` readable doubles and `eigvec` to `n` writable ones.
 */
SsncStatus ssnc_min_eigenpair(const double *h, size_t n, double *lambda_min, double *eigvec);

/**
 * Scaled negative-curvature direction `q = delta |lambda_min| v` of `h`,
 * written to `q` (length `n`), with `q^T h q` in `curvature`.
 *
 * # Safety
 * `h` must point to `n * n` readable doubles and `q` to `n` writable ones.
 */
SsncStatus ssnc_nc_direction(const double *h,
                             size_t n,
                             double gamma,
                             double delta,
                             double *q,
                             double *curvature);

/**
 * Runs a method on a named problem (`rosenbrock2`, `rosenbrockN`,
 * `saddle_quartic`, `quadratic`). `x0` may be NULL for the problem's default
 * start. A diverged run still yields a handle (status `SSNC_DIVERGED`).
 *
 * # Safety
 * `problem` must be a NUL-terminated string, `x0` NULL or `x0_len` readable
 * doubles, `spec` a valid pointer and `out` writable.
 */
SsncStatus ssnc_run_problem(const char *problem,
                            size_t dim,
                            const double *x0,
                            size_t x0_len,
                            const SsncRunSpec *spec,
                            SsncRun **out);

/**
 * Runs the experiment described by a TOML config file. `method` may be NULL
 * to use the config's method.
 *
 * # Safety
 * `config_path` must be NUL-terminated, `method` NULL or NUL-terminated and
 * `out` writable.
 */
SsncStatus ssnc_run_config(const char *config_path,
                           const char *method,
                           uint64_t seed,
                           SsncRun **out);

/**
 * Releases a run handle. NULL is ignored.
 *
 * # Safety
 * `run` must be NULL or a handle from this library not freed before.
 */
void ssnc_run_free(SsncRun *run);

/**
 * Number of recorded iterations; 0 for NULL.
 *
 * # Safety
 * `run` must be NULL or a live handle.
 */
size_t ssnc_run_len(const SsncRun *run);

/**
 * Dimension of the iterates; 0 for NULL or an empty run.
 *
 * # Safety
 * `run` must be NULL or a live handle.
 */
size_t ssnc_run_dim(const SsncRun *run);

/**
 * Terminal status of the run.
 *
 * # Safety
 * `run` must be a live handle and `status` writable.
 */
SsncStatus ssnc_run_status(const SsncRun *run, SsncRunStatus *status);

/**
 * First stationary iteration, or -1 when the run never reached one.
 *
 * # Safety
 * `run` must be a live handle and `k` writable.
 */
SsncStatus ssnc_run_stopping_time(const SsncRun *run, int64_t *k);

/**
 * Total function, gradient and Hessian oracle calls.
 *
 * # Safety
 * `run` must be a live handle; output pointers must be writable.
 */
SsncStatus ssnc_run_eval_counts(const SsncRun *run,
                                uint64_t *fevals,
                                uint64_t *gevals,
                                uint64_t *hevals);

/**
 * Scalar fields of iteration `k`.
 *
 * # Safety
 * `run` must be a live handle and `out` writable.
 */
SsncStatus ssnc_run_record(const SsncRun *run, size_t k, SsncRecord *out);

/**
 * Copies the iterate produced by iteration `k` (`x_{k+1}`) into `x`, which
 * must hold `cap >= ssnc_run_dim(run)` values.
 *
 * # Safety
 * `run` must be a live handle and `x` must have `cap` writable doubles.
 */
SsncStatus ssnc_run_iterate(const SsncRun *run, size_t k, double *x, size_t cap);

/**
 * Writes the run's trace CSV to `path`.
 *
 * # Safety
 * `run` must be a live handle and `path` NUL-terminated.
 */
SsncStatus ssnc_run_write_trace(const SsncRun *run, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SSNC_H */
