#ifndef EMRT_H
#define EMRT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmrtStatus {
  EMRT_STATUS_OK = 0,
  EMRT_STATUS_NULL_POINTER = 1,
  EMRT_STATUS_INVALID_ARGUMENT = 2,
  EMRT_STATUS_CONFIG_INVALID = 3,
  EMRT_STATUS_NUMERICAL = 4,
  EMRT_STATUS_IO = 5,
  EMRT_STATUS_PANIC = 6,
} EmrtStatus;

/**
 * Radial correlation shape for [`emrt_lorentz_total`].
 */
typedef enum EmrtSpectrumKind {
  EMRT_SPECTRUM_KIND_GAUSSIAN = 0,
  EMRT_SPECTRUM_KIND_EXPONENTIAL = 1,
} EmrtSpectrumKind;

/**
 * Opaque phase-space histogram handle.
 */
typedef struct EmrtHistogram EmrtHistogram;

/**
 * Opaque medium handle.
 */
typedef struct EmrtMedium EmrtMedium;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *emrt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *emrt_version(void);

/**
 * Homogeneous isotropic medium.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum EmrtStatus emrt_medium_isotropic(double permittivity,
                                      double permeability,
                                      struct EmrtMedium **out);

/**
 * Homogeneous chiral medium with `|kappa| < 1`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum EmrtStatus emrt_medium_chiral(double permittivity,
                                   double permeability,
                                   double kappa,
                                   struct EmrtMedium **out);

/**
 * # Safety
 * `medium` must be null or a handle from an `emrt_medium_*` constructor that
 * has not been freed yet.
 */
void emrt_medium_free(struct EmrtMedium *medium);

/**
 * Number of distinct dispersion branches, null branch included.
 *
 * # Safety
 * `medium` must be a live handle and `out` writable.
 */
enum EmrtStatus emrt_medium_mode_count(const struct EmrtMedium *medium, size_t *out);

/**
 * Frequency of branch `mode` at position `x` and wavevector `k`, each three
 * doubles.
 *
 * # Safety
 * `medium` must be a live handle, `x` and `k` must point to three doubles and
 * `out` must be writable.
 */
enum EmrtStatus emrt_medium_frequency(const struct EmrtMedium *medium,
                                      size_t mode,
                                      const double *x,
                                      const double *k,
                                      double *out);

/**
 * Total scattering cross-section of an isotropic medium whose permittivity,
 * permeability and cross fluctuations share one radial shape with the given
 * amplitudes.
 *
 * # Safety
 * `out` must be writable.
 */
enum EmrtStatus emrt_lorentz_total(double c0,
                                   double wavenumber,
                                   enum EmrtSpectrumKind kind,
                                   double length,
                                   double amp_eps,
                                   double amp_mu,
                                   double amp_cross,
                                   size_t order,
                                   double *out);

/**
 * Runs the Monte Carlo transport solver on a scenario file. A nonzero
 * `workers` overrides the worker count of the file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum EmrtStatus emrt_rte_run(const char *path, size_t workers, struct EmrtHistogram **out);

/**
 * # Safety
 * `hist` must be null or a live handle from [`emrt_rte_run`].
 */
void emrt_histogram_free(struct EmrtHistogram *hist);

/**
 * Surviving weighted energy and its batch standard error.
 *
 * # Safety
 * `hist` must be a live handle; `total` and `stderr` writable.
 */
enum EmrtStatus emrt_histogram_total(const struct EmrtHistogram *hist,
                                     double *total,
                                     double *stderr);

/**
 * Number of bins in the histogram.
 *
 * # Safety
 * `hist` must be a live handle and `out` writable.
 */
enum EmrtStatus emrt_histogram_len(const struct EmrtHistogram *hist, size_t *out);

/**
 * Copies the per-bin energy into `buf`, which must hold exactly
 * [`emrt_histogram_len`] doubles.
 *
 * # Safety
 * `hist` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum EmrtStatus emrt_histogram_copy_trace(const struct EmrtHistogram *hist,
                                          double *buf,
                                          size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMRT_H */
