#ifndef GBSIM_H
#define GBSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of values in one diagnostics record.
 */
#define GB_DIAGNOSTICS_LEN 17

/**
 * Columns of a certificate report.
 */
typedef enum GbCertColumn {
  GB_CERT_COLUMN_XI = 0,
  GB_CERT_COLUMN_OMEGA = 1,
  GB_CERT_COLUMN_OMEGA_PRIME = 2,
  GB_CERT_COLUMN_BIG_OMEGA = 3,
  GB_CERT_COLUMN_PSI = 4,
  GB_CERT_COLUMN_MARGIN = 5,
  GB_CERT_COLUMN_ERROR_BOUND = 6,
} GbCertColumn;

/**
 * Result codes.
 */
typedef enum GbStatus {
  GB_STATUS_OK = 0,
  GB_STATUS_NULL_POINTER = 1,
  GB_STATUS_INVALID_ARGUMENT = 2,
  GB_STATUS_BUFFER_TOO_SMALL = 3,
  GB_STATUS_CONFIG = 4,
  GB_STATUS_NON_FINITE = 5,
  GB_STATUS_QUADRATURE = 6,
  GB_STATUS_IO = 7,
  GB_STATUS_PANIC = 8,
} GbStatus;

/**
 * Opaque certificate report.
 */
typedef struct GbCertificate GbCertificate;

/**
 * Opaque simulation handle.
 */
typedef struct GbSimulation GbSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gb_version(void);

/**
 * Comma-separated names of the diagnostics record values.
 */
const char *gb_diagnostics_columns(void);

/**
 * Message of the last failed call on this thread, empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gb_last_error(void);

/**
 * Builds a simulation from `key = value` config text. Output settings are
 * ignored; nothing is written to disk.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GbStatus gb_simulation_new(const char *config, struct GbSimulation **out);

/**
 * Releases a simulation. Null is ignored.
 *
 * # Safety
 * `sim` must come from [`gb_simulation_new`] and not be used afterwards.
 */
void gb_simulation_free(struct GbSimulation *sim);

/**
 * Takes `n_steps` steps of the configured size (or CFL step).
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum GbStatus gb_simulation_step(struct GbSimulation *sim, size_t n_steps);

/**
 * Steps until time `t_end`, shortening the last step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum GbStatus gb_simulation_advance_to(struct GbSimulation *sim, double t_end);

/**
 * Current simulation time.
 *
 * # Safety
 * `sim` must be a live handle and `t` a valid pointer.
 */
enum GbStatus gb_simulation_time(const struct GbSimulation *sim, double *t);

/**
 * Grid dimensions.
 *
 * # Safety
 * `sim` must be a live handle and the outputs valid pointers.
 */
enum GbStatus gb_simulation_grid(const struct GbSimulation *sim, size_t *n1, size_t *n2);

/**
 * Copies both state fields, row-major, into buffers of at least `n1 * n2`.
 *
 * # Safety
 * `sim` must be a live handle; `plus` and `minus` must hold `len` values.
 */
enum GbStatus gb_simulation_fields(const struct GbSimulation *sim,
                                   double *plus,
                                   double *minus,
                                   size_t len);

/**
 * Diagnostics of the current state in the order of
 * [`gb_diagnostics_columns`]. The blow-up integral accumulates over calls.
 *
 * # Safety
 * `sim` must be a live handle; `out` must hold `len >= 17` values.
 */
enum GbStatus gb_simulation_diagnostics(struct GbSimulation *sim, double *out, size_t len);

/**
 * Certifies `MOCAlpha(delta)` (or `MOC1(delta, gamma)` at `alpha = 1`) with
 * default constants and `lambda` from the two norms. A NaN `gamma` selects
 * `delta / 10`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum GbStatus gb_certify(double alpha,
                         double delta,
                         double gamma,
                         double theta_norm,
                         double grad_norm,
                         size_t n_samples,
                         struct GbCertificate **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `cert` must come from [`gb_certify`] and not be used afterwards.
 */
void gb_certificate_free(struct GbCertificate *cert);

/**
 * Overall verdict, sample count and worst `margin + error bound`.
 *
 * # Safety
 * `cert` must be a live handle and the outputs valid pointers.
 */
enum GbStatus gb_certificate_summary(const struct GbCertificate *cert,
                                     bool *pass,
                                     size_t *n_samples,
                                     double *worst);

/**
 * Copies one report column into `out`, which must hold `n_samples` values.
 *
 * # Safety
 * `cert` must be a live handle; `out` must hold `len` values.
 */
enum GbStatus gb_certificate_column(const struct GbCertificate *cert,
                                    enum GbCertColumn column,
                                    double *out,
                                    size_t len);

/**
 * Fractional heat kernel at unit time for `n` radii.
 *
 * # Safety
 * `radii` and `out` must each hold `n` values.
 */
enum GbStatus gb_kernel(double alpha, const double *radii, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GBSIM_H */
