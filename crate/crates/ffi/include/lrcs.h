#ifndef LRCS_H
#define LRCS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum {
  LRCS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  LRCS_STATUS_NULL_POINTER = 1,
  /**
   * A parameter or observation is outside its domain.
   */
  LRCS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A vector length does not match the state dimension.
   */
  LRCS_STATUS_DIMENSION_MISMATCH = 3,
  /**
   * A linear system or optimization failed numerically.
   */
  LRCS_STATUS_NUMERICAL = 4,
  /**
   * The operation is not defined for this model.
   */
  LRCS_STATUS_UNSUPPORTED = 5,
  /**
   * Serialization failed.
   */
  LRCS_STATUS_SERIALIZATION = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  LRCS_STATUS_PANIC = 7,
} LrcsStatus;

/**
 * Observation families.
 */
typedef enum {
  /**
   * Gaussian noise; `param` is the standard deviation σ.
   */
  LRCS_FAMILY_GAUSSIAN = 0,
  /**
   * Poisson counts; `param` is ignored.
   */
  LRCS_FAMILY_POISSON = 1,
  /**
   * Bernoulli outcomes; `param` is ignored.
   */
  LRCS_FAMILY_BERNOULLI = 2,
  /**
   * Laplace noise; `param` is the scale b.
   */
  LRCS_FAMILY_LAPLACE = 3,
  /**
   * Weibull survival times; `param` is the shape p.
   */
  LRCS_FAMILY_WEIBULL = 4,
} LrcsFamily;

/**
 * Opaque confidence-sequence state.
 */
typedef struct LrcsState LrcsState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a state for `dim`-dimensional parameters in the ball of radius
 * `radius`, with regularization `lambda` and level `alpha`. `adaptive`
 * selects bias-based weights (nonzero) or `w ≡ 1` (zero).
 *
 * # Safety
 * `out` must be valid for writing one pointer. The handle written there
 * must be released with [`lrcs_state_free`].
 */
LrcsStatus lrcs_state_new(LrcsFamily family,
                          double param,
                          size_t dim,
                          double radius,
                          double lambda,
                          double alpha,
                          int32_t adaptive,
                          LrcsState **out);

/**
 * Releases a state. Null is ignored.
 *
 * # Safety
 * `state` must come from [`lrcs_state_new`] and not have been freed.
 */
void lrcs_state_free(LrcsState *state);

/**
 * Appends the observation `(x, y)`. Writes the round's weight to
 * `weight_out` when it is not null.
 *
 * # Safety
 * `state` must be a live handle and `x` must point to `len` doubles.
 */
LrcsStatus lrcs_state_update(LrcsState *state,
                             const double *x,
                             size_t len,
                             double y,
                             double *weight_out);

/**
 * `log R_t(θ)`.
 *
 * # Safety
 * `state` must be a live handle, `theta` must point to `len` doubles and
 * `out` must be valid for writing.
 */
LrcsStatus lrcs_state_log_ratio(const LrcsState *state,
                                const double *theta,
                                size_t len,
                                double *out);

/**
 * Writes 1 when `θ` is in the current confidence set, else 0.
 *
 * # Safety
 * As for [`lrcs_state_log_ratio`].
 */
LrcsStatus lrcs_state_contains(const LrcsState *state,
                               const double *theta,
                               size_t len,
                               int32_t *out);

/**
 * Certified upper bound on `max {xᵀθ : θ in the confidence set}`.
 *
 * # Safety
 * As for [`lrcs_state_log_ratio`], with `x` in place of `theta`.
 */
LrcsStatus lrcs_state_ucb(const LrcsState *state, const double *x, size_t len, double *out);

/**
 * Upper bound on the squared bias of the current estimator along `x`.
 *
 * # Safety
 * As for [`lrcs_state_ucb`].
 */
LrcsStatus lrcs_state_bias_bound(const LrcsState *state, const double *x, size_t len, double *out);

/**
 * Copies the current estimator into `theta_out` (`len` must equal the
 * state dimension).
 *
 * # Safety
 * `state` must be a live handle and `theta_out` valid for `len` writes.
 */
LrcsStatus lrcs_state_estimate(const LrcsState *state, double *theta_out, size_t len);

/**
 * JSON snapshot of the state. Release the string with
 * [`lrcs_string_free`].
 *
 * # Safety
 * `state` must be a live handle and `out` valid for writing one pointer.
 */
LrcsStatus lrcs_state_to_json(const LrcsState *state, char **out);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void lrcs_string_free(char *s);

/**
 * Library version, a static NUL-terminated string.
 */
const char *lrcs_version(void);

/**
 * Message for the last failed call on this thread, or null when none has
 * failed. The pointer stays valid until the next failing call on the
 * same thread.
 */
const char *lrcs_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRCS_H */
