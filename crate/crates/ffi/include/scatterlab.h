#ifndef SCATTERLAB_H
#define SCATTERLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a call.
 */
typedef enum {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_DOMAIN = 3,
  SL_STATUS_CONVERGENCE = 4,
  SL_STATUS_DIVERGENCE = 5,
  SL_STATUS_NUMERICAL = 6,
  SL_STATUS_REFLECTION = 7,
  SL_STATUS_EMPTY_WINDOW = 8,
  SL_STATUS_RESONANCE_PROXIMITY = 9,
  SL_STATUS_BUFFER_TOO_SMALL = 10,
  SL_STATUS_PANIC = 11,
} SlStatus;

/**
 * Phase shifts `delta_0..delta_lmax` at one momentum.
 */
typedef struct SlPhaseTable SlPhaseTable;

/**
 * A potential `v(r)`.
 */
typedef struct SlPotential SlPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *sl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sl_version(void);

/**
 * `v0 exp(-(r/width)^2)`
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
SlStatus sl_potential_gaussian_well(double v0, double width, SlPotential **out);

/**
 * `g exp(-mu r) / r`
 *
 * # Safety
 * As for [`sl_potential_gaussian_well`].
 */
SlStatus sl_potential_yukawa(double g, double mu, SlPotential **out);

/**
 * `-depth` inside `radius`.
 *
 * # Safety
 * As for [`sl_potential_gaussian_well`].
 */
SlStatus sl_potential_square_well(double depth, double radius, SlPotential **out);

/**
 * `v0 <x>^{-rho}`
 *
 * # Safety
 * As for [`sl_potential_gaussian_well`].
 */
SlStatus sl_potential_power_tail(double v0, double rho, SlPotential **out);

/**
 * Smooth bump supported in the ball of `radius`.
 *
 * # Safety
 * As for [`sl_potential_gaussian_well`].
 */
SlStatus sl_potential_compact_bump(double v0, double radius, SlPotential **out);

/**
 * # Safety
 * As for [`sl_potential_gaussian_well`].
 */
SlStatus sl_potential_zero(SlPotential **out);

/**
 * `v(r)`.
 *
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
SlStatus sl_potential_eval(const SlPotential *pot, double r, double *out);

/**
 * Releases a potential; NULL is ignored.
 *
 * # Safety
 * `pot` must come from an `sl_potential_*` constructor and not be freed twice.
 */
void sl_potential_free(SlPotential *pot);

/**
 * Phase shifts at momentum `k`; `l_max = -1` picks the default truncation.
 *
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
SlStatus sl_phase_table_new(const SlPotential *pot, double k, int32_t l_max, SlPhaseTable **out);

/**
 * Number of channels, `l_max + 1`.
 *
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
SlStatus sl_phase_table_len(const SlPhaseTable *table, size_t *out);

/**
 * Copies the phase shifts into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
SlStatus sl_phase_table_deltas(const SlPhaseTable *table, double *buf, size_t len);

/**
 * Scattering amplitude `f(theta)` from the table.
 *
 * # Safety
 * `table` must be a live handle; `re` and `im` writable.
 */
SlStatus sl_phase_table_amplitude(const SlPhaseTable *table, double theta, double *re, double *im);

/**
 * Releases a table; NULL is ignored.
 *
 * # Safety
 * `table` must come from [`sl_phase_table_new`] and not be freed twice.
 */
void sl_phase_table_free(SlPhaseTable *table);

/**
 * First Born amplitude at momentum `k` and angle `theta`.
 *
 * # Safety
 * `pot` must be a live handle; `re` and `im` writable.
 */
SlStatus sl_born_amplitude(const SlPotential *pot, double k, double theta, double *re, double *im);

/**
 * s-wave `exp(2i delta_0)` from a packet sent in on the half line.
 *
 * # Safety
 * `pot` must be a live handle; `re` and `im` writable.
 */
SlStatus sl_time_domain_smatrix(const SlPotential *pot,
                                double k,
                                double packet_width,
                                double *re,
                                double *im);

/**
 * Squared Hilbert-Schmidt norm of `|v|^{1/2} (H0 + c)^{-1} |v|^{1/2}`.
 *
 * # Safety
 * `pot` must be a live handle and `out` writable.
 */
SlStatus sl_hs_norm(const SlPotential *pot, double c, double *out);

/**
 * Runs a JSON scenario as `scatterlab run` would and stores its exit code.
 *
 * # Safety
 * `config_json` and `out_dir` must be NUL-terminated strings; `exit_code` writable.
 */
SlStatus sl_run_scenario(const char *config_json,
                         const char *out_dir,
                         bool strict,
                         int32_t *exit_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCATTERLAB_H */
