#ifndef SONORITY_H
#define SONORITY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of values in one feature row (f1..f7).
 */
#define SON_FEATURE_DIMS 7

typedef enum SonStatus {
  SON_STATUS_OK = 0,
  SON_STATUS_NULL_POINTER = 1,
  SON_STATUS_INVALID_ARGUMENT = 2,
  SON_STATUS_IO = 3,
  SON_STATUS_UNSUPPORTED_FORMAT = 4,
  SON_STATUS_TOO_SHORT = 5,
  SON_STATUS_OUT_OF_BOUNDS = 6,
  SON_STATUS_BUFFER_TOO_SMALL = 7,
  SON_STATUS_NUMERICAL = 8,
  SON_STATUS_PANIC = 9,
} SonStatus;

/**
 * Strictly increasing epoch sample indices.
 */
typedef struct SonEpochs SonEpochs;

/**
 * Per-epoch raw features of one utterance.
 */
typedef struct SonFeatures SonFeatures;

/**
 * Audio at a known sampling rate.
 */
typedef struct SonUtterance SonUtterance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *son_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *son_version(void);

/**
 * Copy `len` samples at rate `fs` into a new utterance.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out` must be writable.
 */
enum SonStatus son_utterance_from_samples(const double *samples,
                                          size_t len,
                                          uint32_t fs,
                                          struct SonUtterance **out);

/**
 * Read a WAV or SPHERE file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SonStatus son_utterance_load(const char *path, struct SonUtterance **out);

/**
 * # Safety
 * `u` must be null or a handle from this library not yet freed.
 */
void son_utterance_free(struct SonUtterance *u);

/**
 * Sample count, or 0 for a null handle.
 *
 * # Safety
 * `u` must be null or a live handle.
 */
size_t son_utterance_len(const struct SonUtterance *u);

/**
 * Sampling rate, or 0 for a null handle.
 *
 * # Safety
 * `u` must be null or a live handle.
 */
uint32_t son_utterance_fs(const struct SonUtterance *u);

/**
 * Convert `u` in place to the 8 kHz analysis rate.
 *
 * # Safety
 * `u` must be a live handle.
 */
enum SonStatus son_utterance_resample_8k(struct SonUtterance *u);

/**
 * Detect and refine epochs with the default settings. The utterance must be
 * at 8 kHz.
 *
 * # Safety
 * `u` must be a live handle; `out` must be writable.
 */
enum SonStatus son_detect_epochs(const struct SonUtterance *u, struct SonEpochs **out);

/**
 * # Safety
 * `e` must be null or a live handle.
 */
size_t son_epochs_len(const struct SonEpochs *e);

/**
 * Sample index of epoch `i`.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum SonStatus son_epochs_get(const struct SonEpochs *e, size_t i, size_t *out);

/**
 * # Safety
 * `e` must be null or a handle from this library not yet freed.
 */
void son_epochs_free(struct SonEpochs *e);

/**
 * HNGD spectrum at sample `epoch` with the default window and FFT size.
 * Writes `nfft/2 + 1` magnitudes to `buf`; `written` receives the count
 * needed even when the buffer is too small.
 *
 * # Safety
 * `u` must be a live handle; `buf` must hold `cap` doubles; `written` must be
 * writable.
 */
enum SonStatus son_hngd_at_epoch(const struct SonUtterance *u,
                                 size_t epoch,
                                 double *buf,
                                 size_t cap,
                                 size_t *written);

/**
 * Raw f1..f7 at every usable epoch, with default settings. The utterance
 * must be at 8 kHz.
 *
 * # Safety
 * `u` must be a live handle; `out` must be writable.
 */
enum SonStatus son_extract_features(const struct SonUtterance *u, struct SonFeatures **out);

/**
 * # Safety
 * `f` must be null or a live handle.
 */
size_t son_features_len(const struct SonFeatures *f);

/**
 * Row `i`: epoch sample, `SON_FEATURE_DIMS` raw values (NaN where not
 * measurable) and whether every value is usable.
 *
 * # Safety
 * `f` must be a live handle; `values` must hold `SON_FEATURE_DIMS` doubles;
 * `epoch` and `valid` must be writable.
 */
enum SonStatus son_features_get(const struct SonFeatures *f,
                                size_t i,
                                size_t *epoch,
                                double *values,
                                bool *valid);

/**
 * # Safety
 * `f` must be null or a handle from this library not yet freed.
 */
void son_features_free(struct SonFeatures *f);

/**
 * Symmetric divergence between two univariate Gaussians.
 *
 * # Safety
 * `out` must be writable.
 */
enum SonStatus son_kld_symmetric(double mu1, double sigma1, double mu2, double sigma2, double *out);

/**
 * Fusion weights proportional to `n` positive average KLDs, written to `out`.
 *
 * # Safety
 * `klds` must hold `n` readable doubles and `out` `n` writable ones.
 */
enum SonStatus son_compute_weights(const double *klds, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SONORITY_H */
