//! C ABI for the weavefreq estimators.
//!
//! Exposes signal generation, MMAE classification, and trained-model
//! inference behind opaque handles and status codes so other languages
//! can bind against `libweavefreq_ffi`. The header is generated into
//! `include/weavefreq.h` by cbindgen at build time.
//!
//! Conventions:
//! - Every fallible function returns a [`WfStatus`]; `WF_OK` is zero.
//! - Output parameters are written only on `WF_OK`.
//! - On failure a thread-local message is retrievable with
//!   [`wf_last_error_message`].
//! - Objects returned through `*mut` handles are owned by the caller
//!   and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use weavefreq::error::Error;
use weavefreq::mmae::{classify_signal, MmaeConfig};
use weavefreq::nn::{argmax, forward, load_model, NetworkSpec, Parameters};
use weavefreq::signal::{generate_signal, FrequencySet, Signal, SignalParams};

/// Status code of every fallible API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(non_camel_case_types)]
pub enum WfStatus {
    WF_OK = 0,
    WF_NULL_ARGUMENT = 1,
    WF_INVALID_ARGUMENT = 2,
    WF_NUMERIC_ERROR = 3,
    WF_IO_ERROR = 4,
    WF_BUFFER_TOO_SMALL = 5,
    WF_PANIC = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized: String = message.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> WfStatus {
    match err {
        Error::Param(_) | Error::Shape(_) | Error::Config(_) => WfStatus::WF_INVALID_ARGUMENT,
        Error::Numeric(_) | Error::Diverged { .. } => WfStatus::WF_NUMERIC_ERROR,
        Error::Io { .. } | Error::Parse { .. } => WfStatus::WF_IO_ERROR,
    }
}

fn fail(err: &Error) -> WfStatus {
    set_last_error(&err.to_string());
    status_of(err)
}

fn fail_null(what: &str) -> WfStatus {
    set_last_error(&format!("{what} must not be null"));
    WfStatus::WF_NULL_ARGUMENT
}

/// Runs a closure, converting panics into `WF_PANIC` instead of
/// unwinding across the FFI boundary.
fn guarded(body: impl FnOnce() -> WfStatus) -> WfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            WfStatus::WF_PANIC
        }
    }
}

/// Candidate frequency set (opaque).
pub struct WfFrequencySet {
    inner: FrequencySet,
}

/// Trained network loaded from a model file (opaque).
pub struct WfModel {
    spec: NetworkSpec,
    params: Parameters,
}

/// Copies the last error message of this thread into `buffer` (NUL
/// terminated, truncated to `capacity`). Returns the full message
/// length in bytes, excluding the NUL; call with a null buffer to query
/// the required capacity.
#[no_mangle]
pub unsafe extern "C" fn wf_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buffer, n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// Static version string of the library.
#[no_mangle]
pub extern "C" fn wf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ── Frequency sets ───────────────────────────────────────────────────

/// Creates a candidate set from `len` frequencies in Hz (strictly
/// increasing, all positive, at least two).
///
/// # Safety
/// `frequencies_hz` must point to `len` readable doubles; `out` must be
/// a valid destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_frequency_set_new(
    frequencies_hz: *const f64,
    len: usize,
    out: *mut *mut WfFrequencySet,
) -> WfStatus {
    if out.is_null() {
        return fail_null("out");
    }
    if frequencies_hz.is_null() {
        return fail_null("frequencies_hz");
    }
    let slice = std::slice::from_raw_parts(frequencies_hz, len);
    match FrequencySet::new("ffi", slice.to_vec()) {
        Ok(set) => {
            *out = Box::into_raw(Box::new(WfFrequencySet { inner: set }));
            WfStatus::WF_OK
        }
        Err(err) => fail(&err),
    }
}

/// Releases a set created by [`wf_frequency_set_new`]. Null is a no-op.
///
/// # Safety
/// `set` must be a pointer previously returned by this library and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn wf_frequency_set_free(set: *mut WfFrequencySet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of candidate frequencies in the set.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_frequency_set_len(
    set: *const WfFrequencySet,
    out: *mut usize,
) -> WfStatus {
    if set.is_null() {
        return fail_null("set");
    }
    if out.is_null() {
        return fail_null("out");
    }
    *out = (*set).inner.len();
    WfStatus::WF_OK
}

// ── Signal generation ────────────────────────────────────────────────

/// Number of samples of a signal with the given duration and sampling
/// time (both endpoints included), for sizing output buffers.
#[no_mangle]
pub unsafe extern "C" fn wf_signal_length(
    duration: f64,
    dt: f64,
    out: *mut usize,
) -> WfStatus {
    if out.is_null() {
        return fail_null("out");
    }
    let params = SignalParams {
        amplitude: 1.0,
        frequency: 1.0,
        phase: 0.0,
        noise_std: 0.0,
        duration,
        dt,
        seed: 0,
    };
    if let Err(err) = params.validate() {
        return fail(&err);
    }
    *out = params.sample_count();
    WfStatus::WF_OK
}

/// Generates a noisy sine measurement sequence into `out_samples`.
///
/// The sequence is `amplitude * sin(2 pi freq_hz * t + phase)` plus
/// Gaussian noise of standard deviation `noise_std`, sampled every `dt`
/// seconds over `[0, duration]`; identical arguments (seed included)
/// produce bit-identical output. `written` receives the sample count.
///
/// # Safety
/// `out_samples` must point to at least `capacity` writable doubles;
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_generate_signal(
    amplitude: f64,
    freq_hz: f64,
    phase: f64,
    noise_std: f64,
    duration: f64,
    dt: f64,
    seed: u64,
    out_samples: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> WfStatus {
    if out_samples.is_null() {
        return fail_null("out_samples");
    }
    if written.is_null() {
        return fail_null("written");
    }
    let params = SignalParams {
        amplitude,
        frequency: std::f64::consts::TAU * freq_hz,
        phase,
        noise_std,
        duration,
        dt,
        seed,
    };
    guarded(|| match generate_signal(&params) {
        Ok(signal) => {
            if signal.samples.len() > capacity {
                set_last_error(&format!(
                    "buffer holds {capacity} samples, signal needs {}",
                    signal.samples.len()
                ));
                return WfStatus::WF_BUFFER_TOO_SMALL;
            }
            std::ptr::copy_nonoverlapping(
                signal.samples.as_ptr(),
                out_samples,
                signal.samples.len(),
            );
            *written = signal.samples.len();
            WfStatus::WF_OK
        }
        Err(err) => fail(&err),
    })
}

// ── MMAE classification ──────────────────────────────────────────────

/// Classifies a measurement sequence against the candidate set with a
/// bank of sine-wave Kalman filters.
///
/// `noise_std` is the measurement noise the filters assume (their R is
/// its square, floored internally for noiseless signals). Pass
/// `phi_s <= 0` for the default process-noise density. `out_probs` is
/// optional; when non-null it receives one posterior probability per
/// candidate.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out_class` must be
/// writable; `out_probs`, when non-null, must hold as many doubles as
/// the set has candidates.
#[no_mangle]
pub unsafe extern "C" fn wf_mmae_classify(
    set: *const WfFrequencySet,
    samples: *const f64,
    len: usize,
    dt: f64,
    noise_std: f64,
    phi_s: f64,
    out_class: *mut i32,
    out_probs: *mut f64,
) -> WfStatus {
    if set.is_null() {
        return fail_null("set");
    }
    if samples.is_null() {
        return fail_null("samples");
    }
    if out_class.is_null() {
        return fail_null("out_class");
    }
    if len == 0 {
        set_last_error("len must be >= 1");
        return WfStatus::WF_INVALID_ARGUMENT;
    }
    let set = &(*set).inner;
    let samples = std::slice::from_raw_parts(samples, len);

    let params = SignalParams {
        amplitude: 1.0,
        frequency: 1.0,
        phase: 0.0,
        noise_std,
        duration: (len - 1).max(1) as f64 * dt,
        dt,
        seed: 0,
    };
    if let Err(err) = params.validate() {
        return fail(&err);
    }
    let signal = Signal { samples: samples.to_vec(), params };
    let mut config = MmaeConfig::default();
    if phi_s > 0.0 {
        config.phi_s = phi_s;
    }

    guarded(|| {
        // classify_signal only reports the argmax; recover the
        // probabilities when the caller asked for them.
        if out_probs.is_null() {
            match classify_signal(&signal, set, &config) {
                Ok(class) => {
                    *out_class = class as i32;
                    WfStatus::WF_OK
                }
                Err(err) => fail(&err),
            }
        } else {
            match weavefreq::mmae::run_mmae(&signal, set, &config) {
                Ok(run) => {
                    *out_class = run.class as i32;
                    std::ptr::copy_nonoverlapping(
                        run.final_state.probabilities.as_ptr(),
                        out_probs,
                        set.len(),
                    );
                    WfStatus::WF_OK
                }
                Err(err) => fail(&err),
            }
        }
    })
}

// ── Trained models ───────────────────────────────────────────────────

/// Loads a trained model from a JSON model file.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn wf_model_load(
    path: *const c_char,
    out: *mut *mut WfModel,
) -> WfStatus {
    if path.is_null() {
        return fail_null("path");
    }
    if out.is_null() {
        return fail_null("out");
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_last_error("path is not valid UTF-8");
            return WfStatus::WF_INVALID_ARGUMENT;
        }
    };
    guarded(|| match load_model(Path::new(path)) {
        Ok((spec, params, _, _)) => {
            *out = Box::into_raw(Box::new(WfModel { spec, params }));
            WfStatus::WF_OK
        }
        Err(err) => fail(&err),
    })
}

/// Releases a model created by [`wf_model_load`]. Null is a no-op.
///
/// # Safety
/// `model` must be a pointer previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wf_model_free(model: *mut WfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input length (sample count) the model expects.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_model_input_length(
    model: *const WfModel,
    out: *mut usize,
) -> WfStatus {
    if model.is_null() {
        return fail_null("model");
    }
    if out.is_null() {
        return fail_null("out");
    }
    *out = (*model).spec.input_length;
    WfStatus::WF_OK
}

/// Number of classes the model separates.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wf_model_num_classes(
    model: *const WfModel,
    out: *mut usize,
) -> WfStatus {
    if model.is_null() {
        return fail_null("model");
    }
    if out.is_null() {
        return fail_null("out");
    }
    *out = (*model).spec.num_classes;
    WfStatus::WF_OK
}

/// Runs the network on a measurement sequence and reports the argmax
/// class. `out_logits` is optional; when non-null it receives one raw
/// logit per class.
///
/// # Safety
/// `samples` must point to `len` readable doubles matching the model's
/// input length; `out_class` must be writable; `out_logits`, when
/// non-null, must hold `num_classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn wf_model_predict(
    model: *const WfModel,
    samples: *const f64,
    len: usize,
    out_class: *mut i32,
    out_logits: *mut f64,
) -> WfStatus {
    if model.is_null() {
        return fail_null("model");
    }
    if samples.is_null() {
        return fail_null("samples");
    }
    if out_class.is_null() {
        return fail_null("out_class");
    }
    let model = &*model;
    let samples = std::slice::from_raw_parts(samples, len);
    guarded(|| match forward(&model.spec, &model.params, samples) {
        Ok(logits) => {
            *out_class = argmax(&logits) as i32;
            if !out_logits.is_null() {
                std::ptr::copy_nonoverlapping(logits.as_ptr(), out_logits, logits.len());
            }
            WfStatus::WF_OK
        }
        Err(err) => fail(&err),
    })
}

#[cfg(test)]
mod tests;
