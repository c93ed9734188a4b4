/* C interface for the vtolctrl controller-synthesis toolkit. */

#ifndef VTOLCTRL_H
#define VTOLCTRL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum VtolStatus {
  VTOL_OK = 0,
  VTOL_NULL_ARGUMENT = 1,
  VTOL_INVALID_ARGUMENT = 2,
  VTOL_SINGULAR = 3,
  VTOL_NOT_STABILIZABLE = 4,
  VTOL_NO_CONVERGENCE = 5,
  VTOL_UNSTABLE = 6,
  VTOL_DIVERGED = 7,
  VTOL_IO_ERROR = 8,
  VTOL_PARSE_ERROR = 9,
  VTOL_PANIC = 10,
} VtolStatus;

/**
 * Opaque synthesized-gain handle.
 */
typedef struct VtolGain VtolGain;

/**
 * Opaque linear plant handle.
 */
typedef struct VtolModel VtolModel;

/**
 * Opaque simulation-trace handle.
 */
typedef struct VtolTrace VtolTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version string; static storage, do not free.
 */
const char *vtol_version(void);

/**
 * Copies the last error message into `buf` (truncating) and returns the
 * full message length in bytes, excluding the terminator.
 */
size_t vtol_last_error(char *buf, size_t len);

/**
 * Built-in 4-state level-flight plant.
 */
struct VtolModel *vtol_model_level(void);

/**
 * Built-in 6-state hover plant.
 */
struct VtolModel *vtol_model_hover(void);

/**
 * Loads a model from a JSON file.
 */
enum VtolStatus vtol_model_load(const char *path, struct VtolModel **out);

/**
 * Saves a model to a JSON file.
 */
enum VtolStatus vtol_model_save(const struct VtolModel *model, const char *path);

void vtol_model_free(struct VtolModel *model);

/**
 * Number of states, or 0 for a null handle.
 */
size_t vtol_model_states(const struct VtolModel *model);

/**
 * Number of control inputs, or 0 for a null handle.
 */
size_t vtol_model_inputs(const struct VtolModel *model);

/**
 * LQR synthesis with diagonal weights (`q_diag` length = states,
 * `r_diag` length = inputs). The gain carries its certificate outcome.
 */
enum VtolStatus vtol_synth_lqr(const struct VtolModel *model,
                               const double *q_diag,
                               size_t q_len,
                               const double *r_diag,
                               size_t r_len,
                               struct VtolGain **out);

/**
 * H2 synthesis. With non-null weight arrays the performance pair is built
 * from the diagonal state/input weights; with nulls the model's own
 * `(Cz, Du)` pair is used.
 */
enum VtolStatus vtol_synth_h2(const struct VtolModel *model,
                              const double *z_state_diag,
                              size_t z_state_len,
                              const double *z_input_diag,
                              size_t z_input_len,
                              struct VtolGain **out);

void vtol_gain_free(struct VtolGain *gain);

size_t vtol_gain_rows(const struct VtolGain *gain);

size_t vtol_gain_cols(const struct VtolGain *gain);

/**
 * Copies the gain matrix row-major into `buf` (length must be
 * rows * cols).
 */
enum VtolStatus vtol_gain_copy(const struct VtolGain *gain, double *buf, size_t len);

/**
 * Attained H2 norm; NaN for LQR gains.
 */
double vtol_gain_gamma(const struct VtolGain *gain);

double vtol_gain_spectral_abscissa(const struct VtolGain *gain);

/**
 * 1 when the matrix-inequality certificate accepted the gain.
 */
int vtol_gain_certified(const struct VtolGain *gain);

/**
 * Most-positive eigenvalue across the certificate blocks.
 */
double vtol_gain_certificate_worst(const struct VtolGain *gain);

/**
 * Closed-loop simulation of `u = K x` under the built-in gust model.
 * `x0` must carry one entry per state; `seed` selects the gust
 * realization; `with_disturbance = 0` runs the free response.
 */
enum VtolStatus vtol_simulate(const struct VtolModel *model,
                              const struct VtolGain *gain,
                              const double *x0,
                              size_t x0_len,
                              double dt,
                              double t_final,
                              uint64_t seed,
                              int with_disturbance,
                              struct VtolTrace **out);

void vtol_trace_free(struct VtolTrace *trace);

/**
 * Number of samples in the trace.
 */
size_t vtol_trace_len(const struct VtolTrace *trace);

/**
 * Copies the time axis into `buf`.
 */
enum VtolStatus vtol_trace_copy_times(const struct VtolTrace *trace, double *buf, size_t len);

/**
 * Copies one state channel into `buf`.
 */
enum VtolStatus vtol_trace_copy_state(const struct VtolTrace *trace,
                                      size_t state_index,
                                      double *buf,
                                      size_t len);

/**
 * RMS of one state's deviation from the regulation reference; NaN on a bad
 * handle or index.
 */
double vtol_trace_rms(const struct VtolTrace *trace, size_t state_index);

/**
 * Spectral abscissa of `A + Bu K`; NaN on failure.
 */
double vtol_closed_loop_abscissa(const struct VtolModel *model, const struct VtolGain *gain);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VTOLCTRL_H */
