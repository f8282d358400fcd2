#ifndef QTHERMO_H
#define QTHERMO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum QtStatus {
  QT_STATUS_OK = 0,
  QT_STATUS_NULL_POINTER = 1,
  QT_STATUS_INVALID_ARGUMENT = 2,
  QT_STATUS_PARSE = 3,
  QT_STATUS_INVALID_STATE = 4,
  QT_STATUS_NOT_CONVERGED = 5,
  QT_STATUS_UNSTABLE = 6,
  QT_STATUS_IO = 7,
  QT_STATUS_BUFFER_TOO_SMALL = 8,
  QT_STATUS_PANIC = 9,
} QtStatus;

// A Lindblad model with its energy eigenbasis.
typedef struct QtModel QtModel;

// A validated density matrix.
typedef struct QtState QtState;

// Current, dissipation and coherence terms of the trade-off relations.
typedef struct QtTradeoff {
  double j;
  double sigma_dot;
  // `J²/σ̇`.
  double ratio;
  double a_cl;
  double a_qm;
  // 1 when all three inequalities hold.
  int32_t holds;
  int32_t divergent;
} QtTradeoff;

// Parameters of a four-stroke cycle; `n = 0` selects the two-qubit medium,
// `n > 0` the 2N medium.
typedef struct QtCycleParams {
  uintptr_t n;
  double omega_h;
  double omega_c;
  double beta_h;
  double beta_c;
  double tau_h;
  double tau_c;
  double gamma0;
  double dt;
  uintptr_t max_cycles;
} QtCycleParams;

// Stationary-cycle figures of merit.
typedef struct QtCycleResult {
  double w;
  double q_h;
  double q_c;
  double eta;
  double eta_car;
  // NaN when the cycle is not an engine or `η` is outside `(0, η_Car)`.
  double p;
  double abar_cl;
  double abar_qm;
  uintptr_t cycles;
  int32_t converged;
} QtCycleResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`) and returns the full message length in bytes,
// excluding the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t qt_last_error_message(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *qt_version(void);

// Parses a model from the plain-text model format.
//
// # Safety
// `model_text` must be a NUL-terminated string; `out` must be writable.
enum QtStatus qt_model_from_text(const char *model_text, struct QtModel **out);

// 2N model with `N` ground and `N` excited states and a collective lowering operator.
//
// # Safety
// `out` must be writable.
enum QtStatus qt_model_two_n(uintptr_t n,
                             double omega0,
                             double gamma_down,
                             double beta,
                             struct QtModel **out);

// Two qubits with collective decay to one bath.
//
// # Safety
// `out` must be writable.
enum QtStatus qt_model_two_qubit(double omega, double beta, double gamma0, struct QtModel **out);

// Hilbert-space dimension, or 0 for a null handle.
//
// # Safety
// `model` must be null or a live handle.
uintptr_t qt_model_dim(const struct QtModel *model);

// # Safety
// `model` must be null or a handle not yet freed.
void qt_model_free(struct QtModel *model);

// Builds a state from row-major real and imaginary parts of a `dim x dim` matrix.
//
// # Safety
// `re` and `im` must each point to `dim * dim` doubles; `out` must be writable.
enum QtStatus qt_state_new(uintptr_t dim, const double *re, const double *im, struct QtState **out);

// Gibbs state `e^{-βH}/Z` of the model's Hamiltonian.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum QtStatus qt_state_gibbs(const struct QtModel *model, double beta, struct QtState **out);

// Copies the state into row-major `re` and `im` arrays of `len` doubles each.
//
// # Safety
// `state` must be a live handle; `re` and `im` must each hold `len` doubles.
enum QtStatus qt_state_copy(const struct QtState *state, double *re, double *im, uintptr_t len);

// # Safety
// `state` must be null or a handle not yet freed.
void qt_state_free(struct QtState *state);

// Integrates the master equation for `duration` with RK4 steps of `dt` and
// returns the final state.
//
// # Safety
// `model` and `state` must be live handles; `out` must be writable.
enum QtStatus qt_evolve(const struct QtModel *model,
                        const struct QtState *state,
                        double dt,
                        double duration,
                        struct QtState **out);

// Heat current into the system from bath `bath` (all baths when null).
//
// # Safety
// `model` and `state` must be live handles; `bath` null or NUL-terminated; `out` writable.
enum QtStatus qt_heat_current(const struct QtModel *model,
                              const struct QtState *state,
                              const char *bath,
                              double *out);

// Entropy production rate summed over baths; `divergent` is set to 1 when
// the state lacks support where the dynamics needs it.
//
// # Safety
// `model` and `state` must be live handles; `out` and `divergent` writable.
enum QtStatus qt_entropy_production(const struct QtModel *model,
                                    const struct QtState *state,
                                    double *out,
                                    int32_t *divergent);

// # Safety
// `model` and `state` must be live handles; `out` must be writable.
enum QtStatus qt_tradeoff(const struct QtModel *model,
                          const struct QtState *state,
                          struct QtTradeoff *out);

// Fills `params` with the default two-qubit cycle.
//
// # Safety
// `params` must be writable.
enum QtStatus qt_cycle_params_default(struct QtCycleParams *params);

// Runs the cycle to stationarity from the bright-sector initial state.
//
// # Safety
// `params` must be readable; `out` must be writable.
enum QtStatus qt_run_cycle(const struct QtCycleParams *params, struct QtCycleResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTHERMO_H */
