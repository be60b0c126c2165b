#ifndef QPT_METROLOGY_H
#define QPT_METROLOGY_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QptStatus {
  QPT_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or an out-of-range enum value.
   */
  QPT_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Parameters violate a model constraint.
   */
  QPT_STATUS_VALIDATION = 2,
  /**
   * Drift, non-convergence or a failed fit.
   */
  QPT_STATUS_NUMERICAL = 3,
  QPT_STATUS_IO = 4,
  /**
   * A bug: the library panicked.
   */
  QPT_STATUS_PANIC = 5,
} QptStatus;

typedef enum QptAxis {
  QPT_AXIS_X = 0,
  QPT_AXIS_Y = 1,
  QPT_AXIS_Z = 2,
} QptAxis;

typedef struct QptBj QptBj;

typedef struct QptIsing QptIsing;

/**
 * Bose-Josephson parameters. `omega_end = NaN` leaves the endpoint open.
 */
typedef struct QptBjConfig {
  size_t n;
  double chi;
  double omega_0;
  double omega_f;
  double beta_1;
  double beta_2;
  double omega_end;
  /**
   * A [`QptAxis`] value.
   */
  uint32_t pulse_axis;
  double pulse_angle;
} QptBjConfig;

/**
 * Ising parameters. `tau_prime = NaN` means `tau`; `coupling_range = 0`
 * couples every pair.
 */
typedef struct QptIsingConfig {
  size_t n;
  double b0;
  double j0;
  double tau;
  double tau_prime;
  double coupling_power;
  size_t coupling_range;
} QptIsingConfig;

/**
 * Readout moments of one protocol run.
 */
typedef struct QptOutcome {
  double mean;
  double second_moment;
  double variance;
  double norm_drift;
  double parity_drift;
} QptOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *qpt_version(void);

/**
 * Message of the last failure on this thread; empty when none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *qpt_last_error(void);

/**
 * Defaults for everything but `n` and `omega_f`.
 */
struct QptBjConfig qpt_bj_config_default(size_t n, double omega_f);

/**
 * Defaults for everything but `n` and `tau`.
 */
struct QptIsingConfig qpt_ising_config_default(size_t n, double tau);

/**
 * Prepares a Bose-Josephson engine (runs the splitting sweep once).
 * `dt <= 0` selects the default step.
 *
 * # Safety
 * `config` must point to a valid config and `out` to writable storage.
 */
enum QptStatus qpt_bj_new(const struct QptBjConfig *config, double dt, struct QptBj **out);

/**
 * # Safety
 * `handle` must come from [`qpt_bj_new`] and not be used afterwards; null
 * is ignored.
 */
void qpt_bj_free(struct QptBj *handle);

/**
 * Fixes the recombination endpoint; NaN clears it.
 *
 * # Safety
 * `handle` must be a live handle.
 */
enum QptStatus qpt_bj_set_omega_end(struct QptBj *handle, double omega_end);

/**
 * Minimizes `Δφ(0)` over `Ω_end` with default search settings, then fixes
 * the endpoint at the optimum. Either output may be null.
 *
 * # Safety
 * `handle` must be a live handle; non-null outputs must be writable.
 */
enum QptStatus qpt_bj_optimize_endpoint(struct QptBj *handle, double *omega_end, double *delta_phi);

/**
 * One run at phase `phi`; the endpoint must be set.
 *
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum QptStatus qpt_bj_run(const struct QptBj *handle, double phi, struct QptOutcome *out);

/**
 * Error-propagation `Δφ` at `phi` with central-difference step `delta`.
 *
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum QptStatus qpt_bj_phase_uncertainty(const struct QptBj *handle,
                                        double phi,
                                        double delta,
                                        double *out);

/**
 * Fidelity with the initial state after sweeping all the way back.
 *
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum QptStatus qpt_bj_roundtrip_fidelity(const struct QptBj *handle, double *out);

/**
 * Prepares an Ising engine. `dt <= 0` selects the default step.
 *
 * # Safety
 * `config` must point to a valid config and `out` to writable storage.
 */
enum QptStatus qpt_ising_new(const struct QptIsingConfig *config, double dt, struct QptIsing **out);

/**
 * # Safety
 * `handle` must come from [`qpt_ising_new`] and not be used afterwards;
 * null is ignored.
 */
void qpt_ising_free(struct QptIsing *handle);

/**
 * Sets `τ′`; NaN restores `τ′ = τ`.
 *
 * # Safety
 * `handle` must be a live handle.
 */
enum QptStatus qpt_ising_set_tau_prime(struct QptIsing *handle, double tau_prime);

/**
 * Minimizes `Δφ(0)` over `τ′ ∈ (τ/2, τ]` and fixes `τ′` at the optimum.
 *
 * # Safety
 * `handle` must be a live handle; non-null outputs must be writable.
 */
enum QptStatus qpt_ising_optimize_tau_prime(struct QptIsing *handle,
                                            double *tau_prime,
                                            double *delta_phi);

/**
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum QptStatus qpt_ising_run(const struct QptIsing *handle, double phi, struct QptOutcome *out);

/**
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum QptStatus qpt_ising_phase_uncertainty(const struct QptIsing *handle,
                                           double phi,
                                           double delta,
                                           double *out);

/**
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum QptStatus qpt_ising_roundtrip_fidelity(const struct QptIsing *handle, double *out);

/**
 * Parses a TOML manifest and executes it, writing artifacts to `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated strings.
 */
enum QptStatus qpt_run_manifest(const char *manifest_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPT_METROLOGY_H */
