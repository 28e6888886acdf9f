/* weavefreq C API. Generated by cbindgen; do not edit. */

#ifndef WEAVEFREQ_H
#define WEAVEFREQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible API call.
 */
typedef enum WfStatus {
  WF_OK = 0,
  WF_NULL_ARGUMENT = 1,
  WF_INVALID_ARGUMENT = 2,
  WF_NUMERIC_ERROR = 3,
  WF_IO_ERROR = 4,
  WF_BUFFER_TOO_SMALL = 5,
  WF_PANIC = 6,
} WfStatus;

/**
 * Candidate frequency set (opaque).
 */
typedef struct WfFrequencySet WfFrequencySet;

/**
 * Trained network loaded from a model file (opaque).
 */
typedef struct WfModel WfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buffer` (NUL
 * terminated, truncated to `capacity`). Returns the full message
 * length in bytes, excluding the NUL; call with a null buffer to query
 * the required capacity.
 */
size_t wf_last_error_message(char *buffer, size_t capacity);

/**
 * Static version string of the library.
 */
const char *wf_version(void);

/**
 * Creates a candidate set from `len` frequencies in Hz (strictly
 * increasing, all positive, at least two).
 *
 * # Safety
 * `frequencies_hz` must point to `len` readable doubles; `out` must be
 * a valid destination for one pointer.
 */
enum WfStatus wf_frequency_set_new(const double *frequencies_hz,
                                   size_t len,
                                   struct WfFrequencySet **out);

/**
 * Releases a set created by [`wf_frequency_set_new`]. Null is a no-op.
 *
 * # Safety
 * `set` must be a pointer previously returned by this library and not
 * yet freed.
 */
void wf_frequency_set_free(struct WfFrequencySet *set);

/**
 * Number of candidate frequencies in the set.
 *
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum WfStatus wf_frequency_set_len(const struct WfFrequencySet *set, size_t *out);

/**
 * Number of samples of a signal with the given duration and sampling
 * time (both endpoints included), for sizing output buffers.
 */
enum WfStatus wf_signal_length(double duration, double dt, size_t *out);

/**
 * Generates a noisy sine measurement sequence into `out_samples`.
 *
 * The sequence is `amplitude * sin(2 pi freq_hz * t + phase)` plus
 * Gaussian noise of standard deviation `noise_std`, sampled every `dt`
 * seconds over `[0, duration]`; identical arguments (seed included)
 * produce bit-identical output. `written` receives the sample count.
 *
 * # Safety
 * `out_samples` must point to at least `capacity` writable doubles;
 * `written` must be writable.
 */
enum WfStatus wf_generate_signal(double amplitude,
                                 double freq_hz,
                                 double phase,
                                 double noise_std,
                                 double duration,
                                 double dt,
                                 uint64_t seed,
                                 double *out_samples,
                                 size_t capacity,
                                 size_t *written);

/**
 * Classifies a measurement sequence against the candidate set with a
 * bank of sine-wave Kalman filters.
 *
 * `noise_std` is the measurement noise the filters assume (their R is
 * its square, floored internally for noiseless signals). Pass
 * `phi_s <= 0` for the default process-noise density. `out_probs` is
 * optional; when non-null it receives one posterior probability per
 * candidate.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out_class` must be
 * writable; `out_probs`, when non-null, must hold as many doubles as
 * the set has candidates.
 */
enum WfStatus wf_mmae_classify(const struct WfFrequencySet *set,
                               const double *samples,
                               size_t len,
                               double dt,
                               double noise_std,
                               double phi_s,
                               int32_t *out_class,
                               double *out_probs);

/**
 * Loads a trained model from a JSON model file.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be a valid
 * destination for one pointer.
 */
enum WfStatus wf_model_load(const char *path, struct WfModel **out);

/**
 * Releases a model created by [`wf_model_load`]. Null is a no-op.
 *
 * # Safety
 * `model` must be a pointer previously returned by this library and
 * not yet freed.
 */
void wf_model_free(struct WfModel *model);

/**
 * Input length (sample count) the model expects.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum WfStatus wf_model_input_length(const struct WfModel *model, size_t *out);

/**
 * Number of classes the model separates.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum WfStatus wf_model_num_classes(const struct WfModel *model, size_t *out);

/**
 * Runs the network on a measurement sequence and reports the argmax
 * class. `out_logits` is optional; when non-null it receives one raw
 * logit per class.
 *
 * # Safety
 * `samples` must point to `len` readable doubles matching the model's
 * input length; `out_class` must be writable; `out_logits`, when
 * non-null, must hold `num_classes` doubles.
 */
enum WfStatus wf_model_predict(const struct WfModel *model,
                               const double *samples,
                               size_t len,
                               int32_t *out_class,
                               double *out_logits);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* WEAVEFREQ_H */
