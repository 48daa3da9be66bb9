/* C interface for the parareal-dae solver library. Generated by cbindgen; do not edit. */

#ifndef PARAREAL_DAE_H
#define PARAREAL_DAE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Differentiation index of a DAE, as measured by the matrix chain.
 */
typedef enum PrdaeIndex {
  PRDAE_INDEX_INDEX0 = 0,
  PRDAE_INDEX_INDEX1 = 1,
  PRDAE_INDEX_INDEX2 = 2,
} PrdaeIndex;

/**
 * Result code returned by every fallible function in this interface.
 */
typedef enum PrdaeStatus {
  /**
   * The call succeeded.
   */
  PRDAE_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PRDAE_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument violated the function contract (bad dimension, reversed
   * interval, out-of-range index, undersized buffer, ...).
   */
  PRDAE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A string argument was not valid UTF-8.
   */
  PRDAE_STATUS_INVALID_UTF8 = 3,
  /**
   * A model evaluation produced non-finite values.
   */
  PRDAE_STATUS_EVALUATION = 4,
  /**
   * The problem is not index ≤ 2 at some evaluation point.
   */
  PRDAE_STATUS_INDEX_MISMATCH = 5,
  /**
   * Index classification saw different indices at different samples.
   */
  PRDAE_STATUS_NON_UNIFORM_INDEX = 6,
  /**
   * The Newton corrector did not converge.
   */
  PRDAE_STATUS_NEWTON_NONCONVERGENCE = 7,
  /**
   * A linear system could not be solved.
   */
  PRDAE_STATUS_LINEAR_SOLVE = 8,
  /**
   * An integration step failed; see the message for the inner cause.
   */
  PRDAE_STATUS_STEP_FAILURE = 9,
  /**
   * A window solve inside a parallel-in-time run failed.
   */
  PRDAE_STATUS_WINDOW_FAILURE = 10,
  /**
   * Netlist text could not be parsed.
   */
  PRDAE_STATUS_PARSE_ERROR = 11,
  /**
   * The netlist fails a structural solvability check.
   */
  PRDAE_STATUS_STRUCTURAL = 12,
  /**
   * The model lacks a capability the operation requires.
   */
  PRDAE_STATUS_UNSUPPORTED = 13,
  /**
   * Configuration values were rejected.
   */
  PRDAE_STATUS_CONFIG = 14,
  /**
   * An I/O operation failed.
   */
  PRDAE_STATUS_IO = 15,
  /**
   * An internal panic was caught at the boundary.
   */
  PRDAE_STATUS_PANIC = 16,
} PrdaeStatus;

/**
 * Update rule used by the parallel-in-time driver.
 */
typedef enum PrdaeVariant {
  /**
   * Correction applied to all state components.
   */
  PRDAE_VARIANT_CLASSIC = 0,
  /**
   * Correction restricted to differential components, with a projection
   * onto the constraint set at each window start.
   */
  PRDAE_VARIANT_INIT = 1,
} PrdaeVariant;

/**
 * Opaque handle to a DAE model.
 */
typedef struct PrdaeModel PrdaeModel;

/**
 * Opaque handle to the result of a parallel-in-time run.
 */
typedef struct PrdaeRunResult PrdaeRunResult;

/**
 * Opaque handle to a fixed-step trajectory.
 */
typedef struct PrdaeTrajectory PrdaeTrajectory;

/**
 * Settings for [`prdae_parareal_run`]. Obtain defaults from
 * [`prdae_run_config_default`] and adjust fields as needed.
 */
typedef struct PrdaeRunConfig {
  /**
   * Update rule.
   */
  enum PrdaeVariant variant;
  /**
   * Fine propagator step size (> 0).
   */
  double fine_step;
  /**
   * Implicit Euler steps the coarse propagator takes per window (≥ 1).
   */
  size_t coarse_steps_per_window;
  /**
   * Relative weight in the jump norm denominators (> 0).
   */
  double rel_tol;
  /**
   * Absolute weight in the jump norm denominators (> 0).
   */
  double abs_tol;
  /**
   * Maximum number of update sweeps before giving up (≥ 1).
   */
  size_t max_iterations;
  /**
   * Fine-sweep thread count; 0 selects `min(windows, available cores)`.
   */
  size_t workers;
} PrdaeRunConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the message of the most recent failure on the calling thread, or
 * null when no failure has been recorded yet. The pointer stays valid until
 * the next failing call on the same thread; copy the string if it must
 * outlive that.
 */
const char *prdae_last_error_message(void);

/**
 * Creates the built-in three-component index-2 test model.
 *
 * On success writes a handle to `*out`; release it with
 * [`prdae_model_free`].
 */
enum PrdaeStatus prdae_model_toy(struct PrdaeModel **out);

/**
 * Creates the bundled two-inductor benchmark circuit (current source, two
 * saturable inductors, resistor pair).
 *
 * On success writes a handle to `*out`; release it with
 * [`prdae_model_free`].
 */
enum PrdaeStatus prdae_model_two_inductor(struct PrdaeModel **out);

/**
 * Builds a flux/charge modified-nodal-analysis circuit model from netlist
 * text (NUL-terminated UTF-8).
 *
 * On success writes a handle to `*out`; release it with
 * [`prdae_model_free`].
 */
enum PrdaeStatus prdae_model_from_netlist(const char *text, struct PrdaeModel **out);

/**
 * Releases a model handle. Passing null is a no-op.
 */
void prdae_model_free(struct PrdaeModel *model);

/**
 * Writes the model's state dimension to `*out`.
 */
enum PrdaeStatus prdae_model_dim(const struct PrdaeModel *model, size_t *out);

/**
 * Copies the NUL-terminated name of state component `index` into `buf`
 * (capacity `buf_len` bytes, including the terminator).
 */
enum PrdaeStatus prdae_model_component_name(const struct PrdaeModel *model,
                                            size_t index,
                                            char *buf,
                                            size_t buf_len);

/**
 * Classifies the differentiation index of `model` by evaluating the matrix
 * chain at a bundle of probe states for each of the `n_times` sample times.
 * All samples must agree; the common index is written to `*out`.
 */
enum PrdaeStatus prdae_classify_index(const struct PrdaeModel *model,
                                      const double *sample_times,
                                      size_t n_times,
                                      enum PrdaeIndex *out);

/**
 * Projects `x` (length `n`) onto the constraint set at time `t` and writes
 * the consistent state to `out_x` (length `n`). Differential components are
 * preserved in the projector's metric; algebraic components are recomputed.
 */
enum PrdaeStatus prdae_project_consistent(const struct PrdaeModel *model,
                                          const double *x,
                                          size_t n,
                                          double t,
                                          double *out_x);

/**
 * Produces a consistent state at `t0` by integrating two implicit Euler
 * steps of size `h_warm` starting from `x` at `t0 - 2·h_warm`, then writes
 * it to `out_x` (length `n`). Requires a model with a constant leading
 * matrix and linear index-2 coupling.
 */
enum PrdaeStatus prdae_warmup_consistent(const struct PrdaeModel *model,
                                         const double *x,
                                         size_t n,
                                         double t0,
                                         double h_warm,
                                         double *out_x);

/**
 * Integrates `model` from `x0` (length `n`) over `[t0, t_end]` with fixed
 * implicit Euler steps of size `h`.
 *
 * On success writes a trajectory handle to `*out`; release it with
 * [`prdae_trajectory_free`].
 */
enum PrdaeStatus prdae_integrate(const struct PrdaeModel *model,
                                 const double *x0,
                                 size_t n,
                                 double t0,
                                 double t_end,
                                 double h,
                                 struct PrdaeTrajectory **out);

/**
 * Writes the number of stored points (including the initial state) to
 * `*out`.
 */
enum PrdaeStatus prdae_trajectory_len(const struct PrdaeTrajectory *trajectory, size_t *out);

/**
 * Writes the state dimension of the stored points to `*out`.
 */
enum PrdaeStatus prdae_trajectory_dim(const struct PrdaeTrajectory *trajectory, size_t *out);

/**
 * Returns a borrowed pointer to the trajectory's time grid
 * ([`prdae_trajectory_len`] values), or null if `trajectory` is null. The
 * pointer is valid until the trajectory is freed.
 */
const double *prdae_trajectory_times(const struct PrdaeTrajectory *trajectory);

/**
 * Copies the state at point `index` into `buf` (length `buf_len`, which
 * must equal the trajectory dimension).
 */
enum PrdaeStatus prdae_trajectory_state(const struct PrdaeTrajectory *trajectory,
                                        size_t index,
                                        double *buf,
                                        size_t buf_len);

/**
 * Copies all states row-major into `buf` (length `buf_len`, which must
 * equal `len · dim`): point `i`, component `j` lands at `buf[i·dim + j]`.
 */
enum PrdaeStatus prdae_trajectory_states(const struct PrdaeTrajectory *trajectory,
                                         double *buf,
                                         size_t buf_len);

/**
 * Releases a trajectory handle. Passing null is a no-op.
 */
void prdae_trajectory_free(struct PrdaeTrajectory *trajectory);

/**
 * Returns a configuration with the given update rule, fine step, and jump
 * norm weights; the remaining fields take their defaults (one coarse step
 * per window, at most 50 sweeps, automatic worker count).
 */
struct PrdaeRunConfig prdae_run_config_default(enum PrdaeVariant variant,
                                               double fine_step,
                                               double rel_tol,
                                               double abs_tol);

/**
 * Runs the windowed parallel-in-time solver on `[t0, t_end]` split into
 * `n_windows` equal windows, starting from `x0` (length `n`).
 *
 * On success writes a result handle to `*out`; release it with
 * [`prdae_run_result_free`].
 */
enum PrdaeStatus prdae_parareal_run(const struct PrdaeModel *model,
                                    const double *x0,
                                    size_t n,
                                    double t0,
                                    double t_end,
                                    size_t n_windows,
                                    const struct PrdaeRunConfig *config,
                                    struct PrdaeRunResult **out);

/**
 * Writes the number of update sweeps the run executed to `*out`.
 */
enum PrdaeStatus prdae_run_result_iterations(const struct PrdaeRunResult *result, size_t *out);

/**
 * Writes whether the final sweep's largest jump norm fell below 1 to
 * `*out`.
 */
enum PrdaeStatus prdae_run_result_converged(const struct PrdaeRunResult *result, bool *out);

/**
 * Writes the number of windows in the run's grid to `*out`.
 */
enum PrdaeStatus prdae_run_result_n_windows(const struct PrdaeRunResult *result, size_t *out);

/**
 * Writes the largest weighted jump norm of update sweep `sweep` to `*out`.
 * Sweeps are numbered `1..=iterations`; values below 1 count as converged.
 */
enum PrdaeStatus prdae_run_result_max_jump(const struct PrdaeRunResult *result,
                                           size_t sweep,
                                           double *out);

/**
 * Copies the window start value at `boundary` (`0..=n_windows`) after
 * update sweep `sweep` into `buf` (length `buf_len`, which must equal the
 * model dimension). Sweep 0 holds the coarse seeds.
 */
enum PrdaeStatus prdae_run_result_window_value(const struct PrdaeRunResult *result,
                                               size_t sweep,
                                               size_t boundary,
                                               double *buf,
                                               size_t buf_len);

/**
 * Concatenates the final sweep's fine solves into one trajectory over the
 * whole time range. `model` must be the model the run was produced with.
 *
 * On success writes a trajectory handle to `*out`; release it with
 * [`prdae_trajectory_free`].
 */
enum PrdaeStatus prdae_run_result_trajectory(const struct PrdaeRunResult *result,
                                             const struct PrdaeModel *model,
                                             struct PrdaeTrajectory **out);

/**
 * Releases a run result handle. Passing null is a no-op.
 */
void prdae_run_result_free(struct PrdaeRunResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARAREAL_DAE_H */
