#ifndef SNSE_H
#define SNSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Time-stepping scheme selector.
 */
typedef enum SnseScheme {
  SNSE_SCHEME_IMEX_EULER = 0,
  SNSE_SCHEME_IMEX_HEUN = 1,
  SNSE_SCHEME_PICARD = 2,
} SnseScheme;

/**
 * Status codes returned by every fallible function.
 */
typedef enum SnseStatus {
  SNSE_STATUS_OK = 0,
  SNSE_STATUS_NULL_POINTER = 1,
  SNSE_STATUS_INVALID_ARGUMENT = 2,
  SNSE_STATUS_CONFIG = 3,
  SNSE_STATUS_RESOLUTION = 4,
  SNSE_STATUS_BLOW_UP = 5,
  SNSE_STATUS_CONTRACTION = 6,
  SNSE_STATUS_SUMMABILITY = 7,
  SNSE_STATUS_IO = 8,
  /**
   * The experiment ran but one of its checks failed.
   */
  SNSE_STATUS_CHECK_FAILED = 9,
  SNSE_STATUS_PANIC = 10,
} SnseStatus;

/**
 * Opaque solver handle.
 */
typedef struct SnseSolver SnseSolver;

/**
 * Parameters for [`snse_solver_new`]. Noise amplitudes are `sigma_l = l^-sigma_gamma`,
 * or zero when `sigma_gamma` is NaN.
 */
typedef struct SnseParams {
  uint32_t lmax;
  double dt;
  double t_end;
  double nu;
  double omega;
  double alpha;
  enum SnseScheme scheme;
  double beta;
  double sigma_gamma;
  double delta;
  uint32_t n_substeps;
  uint64_t seed;
} SnseParams;

/**
 * Norms of the current `v`, plus `|u|_{L4}` of `u = v + z`.
 */
typedef struct SnseNorms {
  double h;
  double v;
  double da;
  double l4_u;
} SnseNorms;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as `major * 10000 + minor * 100 + patch`.
 */
uint32_t snse_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes of writes.
 */
size_t snse_last_error_message(char *buf, size_t len);

/**
 * Defaults: `lmax = 12`, `dt = 0.01`, `t_end = 1`, `nu = 1`, no rotation,
 * no damping, IMEX Heun, Gaussian noise switched off.
 */
struct SnseParams snse_params_default(void);

/**
 * Creates a solver with zero initial data and zero forcing.
 *
 * # Safety
 * `params` must point to a valid `SnseParams`; `out` must be valid for a write.
 */
enum SnseStatus snse_solver_new(const struct SnseParams *params, struct SnseSolver **out);

/**
 * Creates a solver from a TOML configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum SnseStatus snse_solver_from_config(const char *path, struct SnseSolver **out);

/**
 * Releases a solver. Null is ignored.
 *
 * # Safety
 * `solver` must be null or a handle from this library not yet freed.
 */
void snse_solver_free(struct SnseSolver *solver);

/**
 * Advances `n_steps` steps. On error the state stays at the last good step.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum SnseStatus snse_solver_step(struct SnseSolver *solver, uint64_t n_steps);

/**
 * Current time.
 *
 * # Safety
 * `solver` must be a live handle; `t` must be valid for a write.
 */
enum SnseStatus snse_solver_time(const struct SnseSolver *solver, double *t);

/**
 * Norms of the current state.
 *
 * # Safety
 * `solver` must be a live handle; `out` must be valid for a write.
 */
enum SnseStatus snse_solver_norms(const struct SnseSolver *solver, struct SnseNorms *out);

/**
 * Number of complex stream coefficients of `v` (`(l, m)` with `1 <= l <= lmax`, `0 <= m <= l`).
 *
 * # Safety
 * `solver` must be null or a live handle. Returns 0 for null.
 */
size_t snse_solver_coeff_count(const struct SnseSolver *solver);

/**
 * Copies the coefficients of `v` as interleaved `(re, im)` pairs, l-major.
 * `len` counts doubles and must be at least twice the coefficient count.
 *
 * # Safety
 * `solver` must be a live handle; `buf` must be valid for `len` writes.
 */
enum SnseStatus snse_solver_get_v(const struct SnseSolver *solver, double *buf, size_t len);

/**
 * Replaces `v` and restarts the solver at `t = 0` with fresh noise.
 * Layout as in [`snse_solver_get_v`]; `len` must equal twice the coefficient count.
 *
 * # Safety
 * `solver` must be a live handle; `buf` must be valid for `len` reads.
 */
enum SnseStatus snse_solver_set_v(struct SnseSolver *solver, const double *buf, size_t len);

/**
 * Runs the experiment described by a configuration file, writing its
 * artifacts. Returns [`SnseStatus::CheckFailed`] when a verification check fails.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum SnseStatus snse_run_config(const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SNSE_H */
