#ifndef SUBSPACE_INFER_H
#define SUBSPACE_INFER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result codes; `SI_OK` is zero.
typedef enum SiStatus {
  SI_OK = 0,
  SI_ERR_NULL_POINTER = 1,
  SI_ERR_INVALID_ARGUMENT = 2,
  SI_ERR_DIMENSION = 3,
  SI_ERR_DOMAIN = 4,
  SI_ERR_NON_FINITE = 5,
  SI_ERR_NUMERICAL = 6,
  SI_ERR_FORMAT = 7,
  SI_ERR_CONFIG = 8,
  SI_ERR_IO = 9,
  SI_ERR_BUFFER_TOO_SMALL = 10,
  SI_ERR_PANIC = 11,
} SiStatus;

// A dataset of `2n` samples.
typedef struct SiDataset SiDataset;

// Subspace estimate and confidence region.
typedef struct SiEstimate SiEstimate;

// A fitted nuclear-norm estimate with its solver diagnostics.
typedef struct SiFit SiFit;

// Solver settings; start from [`si_solver_options_default`].
typedef struct SiSolverOptions {
  // Penalty; when not positive it is derived from `sigma` and `lambda_c`.
  double lambda_reg;
  double sigma;
  double lambda_c;
  double rho;
  uintptr_t max_iter;
  double tol_primal;
  double tol_dual;
  double cg_tol;
  uintptr_t cg_max_iter;
  // 0 automatic, 1 conjugate gradient, 2 kernel solve.
  uint32_t a_update;
} SiSolverOptions;

typedef struct SiFitInfo {
  double lambda_reg;
  uintptr_t iterations;
  bool converged;
  double objective;
  double primal_residual;
  double dual_residual;
} SiFitInfo;

typedef struct SiSummary {
  uintptr_t m1;
  uintptr_t m2;
  uintptr_t r;
  uintptr_t n;
  double sigma2_hat;
  double b_n;
  double v_n;
  double center;
  double half_width;
  double alpha;
  bool clamp_fired;
} SiSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *si_last_error(void);

// Library version as a static NUL-terminated string.
const char *si_version(void);

// Wraps `2n` samples: `x` holds `count` row-major `m1 x m2` designs back to
// back and `y` the `count` responses.
//
// # Safety
// `x` must point to `count * m1 * m2` doubles, `y` to `count` doubles and
// `out` to writable storage for one handle.
enum SiStatus si_dataset_new(uintptr_t m1,
                             uintptr_t m2,
                             uintptr_t count,
                             const double *x,
                             const double *y,
                             struct SiDataset **out);

// Draws a model `UΛVᵀ` and `2n` samples from it. `lambdas` may be NULL for
// the default spectrum `2^r, ..., 2`. The model factors are written to
// `u_out` (`m1 x r`) and `v_out` (`m2 x r`) when those are not NULL.
//
// # Safety
// Non-NULL pointers must be valid for the stated lengths.
enum SiStatus si_dataset_generate(uintptr_t m1,
                                  uintptr_t m2,
                                  uintptr_t r,
                                  uintptr_t n,
                                  double sigma,
                                  const double *lambdas,
                                  uint64_t seed,
                                  double *u_out,
                                  double *v_out,
                                  struct SiDataset **out);

// Reads a dataset in the binary TRDS format.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SiStatus si_dataset_read(const char *path, struct SiDataset **out);

// Writes a dataset in the binary TRDS format.
//
// # Safety
// `data` must be a live handle and `path` a NUL-terminated string.
enum SiStatus si_dataset_write(const struct SiDataset *data, const char *path);

// Shape and total sample count `2n`.
//
// # Safety
// `data` must be a live handle; outputs must be writable.
enum SiStatus si_dataset_shape(const struct SiDataset *data,
                               uintptr_t *m1,
                               uintptr_t *m2,
                               uintptr_t *count);

// # Safety
// `data` must be NULL or a handle not yet freed.
void si_dataset_free(struct SiDataset *data);

// Default solver settings, with the penalty derived from `sigma`.
struct SiSolverOptions si_solver_options_default(double sigma);

// Fits the nuclear-norm estimator on the first half of `data`. A run that
// stops at `max_iter` still succeeds; check `converged` in [`si_fit_info`].
//
// # Safety
// `data` and `options` must be valid; `out` writable.
enum SiStatus si_fit(const struct SiDataset *data,
                     const struct SiSolverOptions *options,
                     struct SiFit **out);

// Wraps an existing `m1 x m2` estimate so it can be passed to
// [`si_infer`].
//
// # Safety
// `m` must point to `m1 * m2` doubles and `out` be writable.
enum SiStatus si_fit_from_matrix(uintptr_t m1, uintptr_t m2, const double *m, struct SiFit **out);

// # Safety
// `fit` must be a live handle and `info` writable.
enum SiStatus si_fit_info(const struct SiFit *fit, struct SiFitInfo *info);

// Copies the fitted matrix (row-major) into `buf` of `len` doubles.
//
// # Safety
// `fit` must be a live handle and `buf` valid for `len` doubles.
enum SiStatus si_fit_matrix(const struct SiFit *fit, double *buf, uintptr_t len);

// # Safety
// `fit` must be NULL or a handle not yet freed.
void si_fit_free(struct SiFit *fit);

// De-biases `fit` with the second half of `data`, extracts the top-`r`
// subspaces and builds the level `1 − alpha` confidence region.
//
// # Safety
// Handles must be live and `out` writable.
enum SiStatus si_infer(const struct SiDataset *data,
                       const struct SiFit *fit,
                       uintptr_t r,
                       double alpha,
                       struct SiEstimate **out);

// # Safety
// `est` must be a live handle and `summary` writable.
enum SiStatus si_estimate_summary(const struct SiEstimate *est, struct SiSummary *summary);

// Copies `Û` (`m1 x r`), `V̂` (`m2 x r`) and the `r` leading singular values
// of the de-biased estimate. Any output may be NULL with length 0.
//
// # Safety
// `est` must be a live handle; buffers valid for their lengths.
enum SiStatus si_estimate_factors(const struct SiEstimate *est,
                                  double *u,
                                  uintptr_t u_len,
                                  double *v,
                                  uintptr_t v_len,
                                  double *lambda_hat,
                                  uintptr_t lambda_len);

// Distance of a candidate pair (`u` is `m1 x r`, `v` is `m2 x r`) to the
// estimate and whether it lies in the confidence region.
//
// # Safety
// `est` must be a live handle, `u` and `v` valid for their shapes and the
// outputs writable.
enum SiStatus si_estimate_check(const struct SiEstimate *est,
                                const double *u,
                                const double *v,
                                double *dist2,
                                bool *contained);

// # Safety
// `est` must be NULL or a handle not yet freed.
void si_estimate_free(struct SiEstimate *est);

// Rank chosen by thresholding the singular values of the de-biased fit at
// `2c·σ̂·√(max(m1, m2)/n)`; `threshold` may be NULL.
//
// # Safety
// Handles must be live and `rank` writable.
enum SiStatus si_estimate_rank(const struct SiDataset *data,
                               const struct SiFit *fit,
                               double c,
                               uintptr_t *rank,
                               double *threshold);

// `‖U₁U₁ᵀ − U₂U₂ᵀ‖_F² + ‖V₁V₁ᵀ − V₂V₂ᵀ‖_F²` for `m1 x r` and `m2 x r`
// factors with orthonormal columns.
//
// # Safety
// Inputs must be valid for their shapes and `out` writable.
enum SiStatus si_projection_distance2(uintptr_t m1,
                                      uintptr_t m2,
                                      uintptr_t r,
                                      const double *u1,
                                      const double *v1,
                                      const double *u2,
                                      const double *v2,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBSPACE_INFER_H */
