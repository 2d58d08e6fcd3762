/* C ABI for the tensor-network gap-estimation pipeline. */

#ifndef QPDE_H
#define QPDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes mirroring the CLI exit conventions.
typedef enum {
  QPDE_STATUS_OK = 0,
  // Null pointer, bad UTF-8, or malformed argument.
  QPDE_STATUS_INVALID_ARGUMENT = 1,
  // Configuration rejected by validation.
  QPDE_STATUS_INVALID_CONFIG = 2,
  // Desk-scale resource bound exceeded.
  QPDE_STATUS_RESOURCE_LIMIT = 3,
  // Any other failure; see `qpde_last_error`.
  QPDE_STATUS_INTERNAL = 4,
} QpdeStatus;

// Opaque run configuration.
typedef struct QpdeConfig QpdeConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// New configuration with the default study parameters. Free with
// `qpde_config_free`.
QpdeConfig *qpde_config_new(void);

// # Safety
// `cfg` must come from `qpde_config_new` and not be freed twice.
void qpde_config_free(QpdeConfig *cfg);

// Set one configuration key from its textual form (same keys as the config
// file, e.g. `qpde_config_set(cfg, "dt", "0.1")`).
//
// # Safety
// `cfg` must be a live handle; `key` and `value` must be NUL-terminated.
QpdeStatus qpde_config_set(QpdeConfig *cfg, const char *key, const char *value);

// Serialize the configuration into `buf` (NUL-terminated, truncated to
// `cap`); returns the full length needed.
//
// # Safety
// `cfg` must be live; `buf` must have space for `cap` bytes when non-null.
uintptr_t qpde_config_serialize(const QpdeConfig *cfg, char *buf, uintptr_t cap);

// Run the full pipeline; outputs land in `out_dir` and the estimated gap in
// `*gap_out`.
//
// # Safety
// `cfg` must be live; `out_dir` NUL-terminated; `gap_out` writable or null.
QpdeStatus qpde_run(const QpdeConfig *cfg, const char *out_dir, double *gap_out);

// Reference gap of the configured model by exact diagonalization.
//
// # Safety
// `cfg` must be live; `gap_out` must be writable.
QpdeStatus qpde_reference_gap(const QpdeConfig *cfg, double *gap_out);

// Estimate the dominant frequency of a complex time series sampled at
// steps `1..=len` with spacing `dt`. Writes the frequency, the shared decay
// rate, and the fit residual through the out-pointers (each may be null).
//
// # Safety
// `re` and `im` must point to `len` doubles each.
QpdeStatus qpde_estimate_gap(double dt,
                             const double *re,
                             const double *im,
                             uintptr_t len,
                             double *gap_out,
                             double *alpha_out,
                             double *residual_out);

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap`); returns the full message length.
//
// # Safety
// `buf` must have space for `cap` bytes when non-null.
uintptr_t qpde_last_error(char *buf, uintptr_t cap);

// Library version as a static C string.
const char *qpde_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPDE_H */
