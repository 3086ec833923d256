#ifndef AIRY_LAYER_H
#define AIRY_LAYER_H

#include <stdbool.h>
#include <stddef.h>

// Status codes returned by every fallible function.
typedef enum AlStatus {
  AL_STATUS_OK = 0,
  AL_STATUS_NULL_POINTER = 1,
  AL_STATUS_INVALID_ARGUMENT = 2,
  AL_STATUS_OVERFLOW = 3,
  AL_STATUS_CAPABILITY = 4,
  AL_STATUS_ACCURACY = 5,
  AL_STATUS_NUMERICAL = 6,
  AL_STATUS_ASSUMPTION = 7,
  AL_STATUS_INTERNAL = 99,
} AlStatus;

// Discretized operator.
typedef struct AlOperator AlOperator;

// Eigenvalue expansion at a boundary point.
typedef struct AlSeries AlSeries;

// Complex number with C layout.
typedef struct AlComplex {
  double re;
  double im;
} AlComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty when none. Valid until the next failing call.
const char *al_last_error(void);

// Library version as a static NUL-terminated string.
const char *al_version(void);

// Ai and Ai′ at `z`.
//
// # Safety
// `value` and `derivative` must be valid for writes.
enum AlStatus al_airy(struct AlComplex z, struct AlComplex *value, struct AlComplex *derivative);

// The `n`-th zero of Ai (n ≥ 1), a negative real number.
//
// # Safety
// `zero` must be valid for writes.
enum AlStatus al_airy_zero(size_t n, double *zero);

// `−h²d²/dx² + iV` on (0, a) with V(x) = Σ coefficients[k]·x^k, on `nodes` Chebyshev points.
//
// # Safety
// `coefficients` must point to `count` doubles; `handle` must be valid for writes.
enum AlStatus al_operator_1d_new(const double *coefficients,
                                 size_t count,
                                 double a,
                                 double h,
                                 size_t nodes,
                                 struct AlOperator **handle);

// `−d²/dτ² + iβ₀τ` on (0, length) with `nodes` Chebyshev points.
//
// # Safety
// `handle` must be valid for writes.
enum AlStatus al_operator_halfline_new(double beta0,
                                       double length,
                                       size_t nodes,
                                       struct AlOperator **handle);

// Number of unknowns; 0 for a null handle.
//
// # Safety
// `op` must be null or a live handle.
size_t al_operator_dim(const struct AlOperator *op);

// The `k` leftmost eigenvalues, written to `values[0..*found]`.
//
// # Safety
// `op` must be a live handle, `values` must hold `k` entries and `found` must be valid for writes.
enum AlStatus al_operator_leftmost(const struct AlOperator *op,
                                   size_t k,
                                   struct AlComplex *values,
                                   size_t *found);

// `‖(A − z)^{-1}‖` in the discrete L² norm; infinite at a numerical eigenvalue.
//
// # Safety
// `op` must be a live handle and `norm` valid for writes.
enum AlStatus al_operator_resolvent_norm(const struct AlOperator *op,
                                         struct AlComplex z,
                                         double *norm);

// `‖e^{−tA}‖` in the discrete L² norm.
//
// # Safety
// `op` must be a live handle and `norm` valid for writes.
enum AlStatus al_operator_semigroup_norm(const struct AlOperator *op, double t, double *norm);

// Release an operator; null is ignored.
//
// # Safety
// `op` must be null or a handle not yet freed.
void al_operator_free(struct AlOperator *op);

// Expansion λ₀ + λ₁ε + … of mode `mode` at the left endpoint of (0, a), where
// V(x) = v0 + Σ betas[j]·x^{j+1}.
//
// # Safety
// `betas` must point to `count` doubles; `handle` must be valid for writes.
enum AlStatus al_series_new(const double *betas,
                            size_t count,
                            double a,
                            double v0,
                            size_t mode,
                            size_t order,
                            struct AlSeries **handle);

// Number of coefficients λ₀ … λ_N; 0 for a null handle.
//
// # Safety
// `series` must be null or a live handle.
size_t al_series_len(const struct AlSeries *series);

// Coefficient λ_j.
//
// # Safety
// `series` must be a live handle and `value` valid for writes.
enum AlStatus al_series_coefficient(const struct AlSeries *series,
                                    size_t j,
                                    struct AlComplex *value);

// Truncated eigenvalue prediction at semiclassical parameter `h`.
//
// # Safety
// `series` must be a live handle and `value` valid for writes.
enum AlStatus al_series_physical(const struct AlSeries *series, double h, struct AlComplex *value);

// Release a series; null is ignored.
//
// # Safety
// `series` must be null or a handle not yet freed.
void al_series_free(struct AlSeries *series);

// Run a JSON experiment configuration and write its outputs to `out_dir`.
// `passed` receives whether every check in the run passed.
//
// # Safety
// `config_json` and `out_dir` must be NUL-terminated strings; `passed` must be valid for writes.
enum AlStatus al_run_experiment(const char *config_json,
                                const char *out_dir,
                                size_t jobs,
                                double tol_scale,
                                bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AIRY_LAYER_H */
