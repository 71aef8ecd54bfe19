#ifndef LRAD_H
#define LRAD_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LradStatus {
  LRAD_STATUS_OK = 0,
  LRAD_STATUS_NULL_POINTER = 1,
  LRAD_STATUS_INVALID_ARGUMENT = 2,
  LRAD_STATUS_DIMENSION_MISMATCH = 3,
  LRAD_STATUS_EMPTY_BATCH = 4,
  LRAD_STATUS_HORIZON_NOT_REACHED = 5,
  LRAD_STATUS_LADDER_EXHAUSTED = 6,
  LRAD_STATUS_NUMERIC_FAILURE = 7,
  LRAD_STATUS_IO = 8,
  LRAD_STATUS_FORMAT = 9,
  LRAD_STATUS_PANIC = 10,
} LradStatus;

typedef enum LradActivation {
  LRAD_ACTIVATION_RELU = 0,
  LRAD_ACTIVATION_GELU = 1,
} LradActivation;

/**
 * Fully connected network together with its parameters.
 */
typedef struct LradMlp LradMlp;

/**
 * Quadratic loss `(c/2)|theta - x|^2` with data uniform on `[0, 1]^d`.
 */
typedef struct LradQuadratic LradQuadratic;

/**
 * Deterministic random stream.
 */
typedef struct LradStream LradStream;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lrad_version(void);

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on this thread.
 */
const char *lrad_last_error(void);

/**
 * # Safety
 * `out_stream` must be valid for one pointer write.
 */
enum LradStatus lrad_stream_new(uint64_t seed,
                                uint16_t tag,
                                uint64_t a,
                                uint64_t b,
                                struct LradStream **out_stream);

/**
 * Independent child stream keyed by the parent and `(tag, a, b)`.
 *
 * # Safety
 * `parent` must be a live stream handle and `out_stream` valid for writing.
 */
enum LradStatus lrad_stream_child(const struct LradStream *parent,
                                  uint16_t tag,
                                  uint64_t a,
                                  uint64_t b,
                                  struct LradStream **out_stream);

/**
 * # Safety
 * `stream` must be null or a handle from `lrad_stream_new`/`lrad_stream_child`
 * that has not been freed.
 */
void lrad_stream_free(struct LradStream *stream);

/**
 * # Safety
 * `stream` must be live and `value` valid for writing.
 */
enum LradStatus lrad_stream_next_u64(struct LradStream *stream, uint64_t *value);

/**
 * Fill `values[0..n]` with draws from `U[a, b]`.
 *
 * # Safety
 * `stream` must be live and `values` valid for `n` writes.
 */
enum LradStatus lrad_stream_uniform(struct LradStream *stream,
                                    double a,
                                    double b,
                                    double *values,
                                    size_t n);

/**
 * Fill `values[0..n]` with standard normal draws.
 *
 * # Safety
 * `stream` must be live and `values` valid for `n` writes.
 */
enum LradStatus lrad_stream_std_normal(struct LradStream *stream, double *values, size_t n);

/**
 * # Safety
 * `out_model` must be valid for one pointer write.
 */
enum LradStatus lrad_quadratic_new(size_t d, double grad_factor, struct LradQuadratic **out_model);

/**
 * # Safety
 * `model` must be null or a live handle from `lrad_quadratic_new`.
 */
void lrad_quadratic_free(struct LradQuadratic *model);

/**
 * Dimension `d`, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or live.
 */
size_t lrad_quadratic_dim(const struct LradQuadratic *model);

/**
 * One constant-rate SGD step on the `m x d` batch, updating `theta` in place.
 *
 * # Safety
 * `theta` must hold `d` values and `batch` `m * d` values.
 */
enum LradStatus lrad_quadratic_sgd_step(const struct LradQuadratic *model,
                                        double *theta,
                                        size_t d,
                                        double gamma,
                                        const double *batch,
                                        size_t m);

/**
 * State after `n` constant-rate steps from `theta0` given the `n x d`
 * per-step batch means, via the explicit geometric-weight formula.
 *
 * # Safety
 * `theta0` and `theta_out` must hold `d` values, `means` `n * d` values.
 */
enum LradStatus lrad_quadratic_closed_form(const struct LradQuadratic *model,
                                           const double *theta0,
                                           size_t d,
                                           double gamma,
                                           const double *means,
                                           size_t n,
                                           double *theta_out);

/**
 * Monte Carlo probability that one constant-rate step from the invariant
 * law strictly increases the loss on a fresh test batch.
 *
 * # Safety
 * Handles must be live and `p` valid for writing.
 */
enum LradStatus lrad_quadratic_increase_probability(const struct LradQuadratic *model,
                                                    double gamma,
                                                    size_t m,
                                                    size_t m_test,
                                                    size_t truncation,
                                                    size_t n_samples,
                                                    const struct LradStream *stream,
                                                    double *p);

/**
 * Run `steps` steps of the ladder rule with harmonic rates `nu1 / k`.
 * Writes the final parameters, the accumulated clock and the number of
 * steps whose test loss strictly increased.
 *
 * # Safety
 * `theta0` and `theta_out` must hold `d` values; the scalar outputs must be
 * valid for writing.
 */
enum LradStatus lrad_quadratic_theorem1_run(const struct LradQuadratic *model,
                                            const double *theta0,
                                            size_t d,
                                            double nu1,
                                            size_t batch,
                                            size_t test_batch,
                                            uint64_t steps,
                                            const struct LradStream *stream,
                                            double *theta_out,
                                            double *clock_out,
                                            uint64_t *events_out);

/**
 * Network with layer widths `widths[0..n_widths]` (input first), the given
 * hidden activation and fan-in scaled uniform initial parameters.
 *
 * # Safety
 * `widths` must hold `n_widths` values; `stream` must be live.
 */
enum LradStatus lrad_mlp_new(const size_t *widths,
                             size_t n_widths,
                             enum LradActivation activation,
                             struct LradStream *stream,
                             struct LradMlp **out_mlp);

/**
 * # Safety
 * `mlp` must be null or a live handle from `lrad_mlp_new`.
 */
void lrad_mlp_free(struct LradMlp *mlp);

/**
 * Number of scalar parameters, or 0 for a null handle.
 *
 * # Safety
 * `mlp` must be null or live.
 */
size_t lrad_mlp_param_count(const struct LradMlp *mlp);

/**
 * Copy the flat parameter vector (per layer: weights row-major
 * `out x in`, then biases) into `params[0..len]`.
 *
 * # Safety
 * `params` must be valid for `len` writes.
 */
enum LradStatus lrad_mlp_get_params(const struct LradMlp *mlp, double *params, size_t len);

/**
 * # Safety
 * `params` must hold `len` values.
 */
enum LradStatus lrad_mlp_set_params(struct LradMlp *mlp, const double *params, size_t len);

/**
 * Outputs for `n` row-major inputs; `outputs` receives `n x out` values.
 *
 * # Safety
 * `inputs` must hold `n * in` values and `outputs` `n * out`.
 */
enum LradStatus lrad_mlp_forward(const struct LradMlp *mlp,
                                 const double *inputs,
                                 size_t n,
                                 double *outputs);

/**
 * Mean squared error over `n` samples. When `grad` is non-null it receives
 * the gradient with respect to the flat parameters; `grad_len` must then
 * equal the parameter count.
 *
 * # Safety
 * `inputs` must hold `n * in` values, `targets` `n * out`, `grad`
 * `grad_len` values when non-null.
 */
enum LradStatus lrad_mlp_loss_and_grad(const struct LradMlp *mlp,
                                       const double *inputs,
                                       const double *targets,
                                       size_t n,
                                       double *loss,
                                       double *grad,
                                       size_t grad_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRAD_H */
