/* C ABI of the rqhd-lab solvers. Status codes: 0 ok, 2 invalid, 3 numerical, 4 io. */

#ifndef RQHD_H
#define RQHD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call.
typedef enum RqhdStatus {
  RQHD_STATUS_OK = 0,
  // Invalid arguments or configuration.
  RQHD_STATUS_INVALID = 2,
  // Numerical failure (vacuum, instability, charge imbalance, stalled
  // iteration, ...).
  RQHD_STATUS_NUMERICAL = 3,
  // Filesystem failure.
  RQHD_STATUS_IO = 4,
} RqhdStatus;

// Periodic grid handle.
typedef struct RqhdGrid RqhdGrid;

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap`). Returns the full message length.
//
// # Safety
// `buf` must point to `cap` writable bytes, or be null (query mode).
size_t rqhd_last_error(char *buf, size_t cap);

// Semantic version of the library as a static NUL-terminated string.
const char *rqhd_version(void);

// Create a periodic grid: `points[dim]` samples per axis on a torus of side
// `extent[dim]`. Returns null on invalid input (see `rqhd_last_error`).
//
// # Safety
// `points` and `extent` must point to `dim` readable elements.
struct RqhdGrid *rqhd_grid_new(uint32_t dim, const uint32_t *points, const double *extent);

// Total number of grid points of a grid handle (0 for null).
//
// # Safety
// `grid` must be null or a pointer from `rqhd_grid_new`.
size_t rqhd_grid_len(const struct RqhdGrid *grid);

// Release a grid handle.
//
// # Safety
// `grid` must be null or a pointer from `rqhd_grid_new`, not yet freed.
void rqhd_grid_free(struct RqhdGrid *grid);

// Solve the torus Poisson problem ΔV = rhs − mean(rhs) with mean(V) = 0.
// `rhs` and `out` hold `rqhd_grid_len(grid)` row-major samples;
// `mean_defect`, when non-null, receives the projected mean. Fails with a
// numerical status when |mean(rhs)| exceeds `compat_tol · max|rhs|`
// (pass `compat_tol <= 0` for the default 1e-10).
//
// # Safety
// `grid` must come from `rqhd_grid_new`; `rhs` and `out` must point to
// `rqhd_grid_len(grid)` readable/writable f64 respectively.
enum RqhdStatus rqhd_poisson_solve(const struct RqhdGrid *grid,
                                   const double *rhs,
                                   double *out,
                                   double compat_tol,
                                   double *mean_defect);

// Sobolev norm of order `k` (0..=4) of a sampled field.
//
// # Safety
// `grid` from `rqhd_grid_new`; `f` points to `rqhd_grid_len(grid)` f64;
// `out` non-null.
enum RqhdStatus rqhd_sobolev_norm(const struct RqhdGrid *grid,
                                  const double *f,
                                  uint32_t k,
                                  double *out);

// Plane-wave frequency ω±(|k|) of the dispersion polynomial; `branch` 0 is
// plus, 1 is minus.
//
// # Safety
// `out` must be non-null.
enum RqhdStatus rqhd_dispersion_omega(double epsilon,
                                      double upsilon,
                                      double kmag,
                                      int32_t branch,
                                      double *out);

// Parse and validate a config file; status only.
//
// # Safety
// `path` must be a NUL-terminated UTF-8 string.
enum RqhdStatus rqhd_config_validate_file(const char *path);

// Run the experiment described by a config file, as the CLI `run`
// subcommand does; artifacts land in the config's output directory (or
// `out_dir` when non-null).
//
// # Safety
// `path` (and `out_dir` when non-null) must be NUL-terminated UTF-8.
enum RqhdStatus rqhd_run_experiment_file(const char *path, const char *out_dir);

#endif  /* RQHD_H */
