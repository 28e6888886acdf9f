use super::*;

use std::ptr;

fn make_set(freqs: &[f64]) -> *mut WfFrequencySet {
    let mut set: *mut WfFrequencySet = ptr::null_mut();
    let status = unsafe { wf_frequency_set_new(freqs.as_ptr(), freqs.len(), &mut set) };
    assert_eq!(status, WfStatus::WF_OK);
    assert!(!set.is_null());
    set
}

fn generate(freq_hz: f64, noise_std: f64, seed: u64) -> Vec<f64> {
    let mut n = 0usize;
    assert_eq!(unsafe { wf_signal_length(1.0, 0.01, &mut n) }, WfStatus::WF_OK);
    assert_eq!(n, 101);
    let mut samples = vec![0.0; n];
    let mut written = 0usize;
    let status = unsafe {
        wf_generate_signal(
            1.0,
            freq_hz,
            0.0,
            noise_std,
            1.0,
            0.01,
            seed,
            samples.as_mut_ptr(),
            samples.len(),
            &mut written,
        )
    };
    assert_eq!(status, WfStatus::WF_OK);
    assert_eq!(written, n);
    samples
}

fn last_error() -> String {
    let needed = unsafe { wf_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0i8; needed + 1];
    unsafe { wf_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    let bytes: Vec<u8> = buf.iter().take_while(|&&b| b != 0).map(|&b| b as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn version_is_a_c_string() {
    let version = unsafe { CStr::from_ptr(wf_version()) };
    assert!(!version.to_str().unwrap().is_empty());
}

#[test]
fn frequency_set_round_trip() {
    let set = make_set(&[5.0, 5.5, 6.0]);
    let mut len = 0usize;
    assert_eq!(unsafe { wf_frequency_set_len(set, &mut len) }, WfStatus::WF_OK);
    assert_eq!(len, 3);
    unsafe { wf_frequency_set_free(set) };
    // Freeing null is a no-op.
    unsafe { wf_frequency_set_free(ptr::null_mut()) };
}

#[test]
fn invalid_set_is_rejected_with_message() {
    let freqs = [6.0, 5.0];
    let mut set: *mut WfFrequencySet = ptr::null_mut();
    let status = unsafe { wf_frequency_set_new(freqs.as_ptr(), 2, &mut set) };
    assert_eq!(status, WfStatus::WF_INVALID_ARGUMENT);
    assert!(set.is_null());
    assert!(last_error().contains("increasing"), "{}", last_error());
}

#[test]
fn null_arguments_are_reported() {
    let mut set: *mut WfFrequencySet = ptr::null_mut();
    assert_eq!(
        unsafe { wf_frequency_set_new(ptr::null(), 2, &mut set) },
        WfStatus::WF_NULL_ARGUMENT
    );
    let mut n = 0usize;
    assert_eq!(
        unsafe { wf_frequency_set_len(ptr::null(), &mut n) },
        WfStatus::WF_NULL_ARGUMENT
    );
}

#[test]
fn signal_generation_is_deterministic_and_checked() {
    let a = generate(5.0, 0.3, 42);
    let b = generate(5.0, 0.3, 42);
    assert_eq!(a, b);

    // Noiseless samples follow the sine exactly.
    let clean = generate(5.0, 0.0, 1);
    assert!(clean[0].abs() < 1e-12);
    assert!((clean[5] - 1.0).abs() < 1e-12);

    // Undersized buffer.
    let mut small = [0.0; 4];
    let mut written = 0usize;
    let status = unsafe {
        wf_generate_signal(1.0, 5.0, 0.0, 0.0, 1.0, 0.01, 1, small.as_mut_ptr(), 4, &mut written)
    };
    assert_eq!(status, WfStatus::WF_BUFFER_TOO_SMALL);

    // Invalid parameters.
    let status = unsafe {
        wf_generate_signal(1.0, 5.0, 0.0, 0.0, -1.0, 0.01, 1, small.as_mut_ptr(), 4, &mut written)
    };
    assert_eq!(status, WfStatus::WF_INVALID_ARGUMENT);
}

#[test]
fn mmae_classifies_noiseless_signals() {
    let set = make_set(&[5.0, 5.5, 6.0]);
    for (label, freq) in [5.0, 5.5, 6.0].iter().enumerate() {
        let samples = generate(*freq, 0.0, 7);
        let mut class = -1i32;
        let mut probs = [0.0f64; 3];
        let status = unsafe {
            wf_mmae_classify(
                set,
                samples.as_ptr(),
                samples.len(),
                0.01,
                0.0,
                0.0, // default process noise
                &mut class,
                probs.as_mut_ptr(),
            )
        };
        assert_eq!(status, WfStatus::WF_OK);
        assert_eq!(class as usize, label);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(
            probs.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0,
            label
        );
    }
    unsafe { wf_frequency_set_free(set) };
}

#[test]
fn mmae_rejects_bad_input() {
    let set = make_set(&[5.0, 5.5, 6.0]);
    let samples = [0.0; 8];
    let mut class = 0i32;
    assert_eq!(
        unsafe {
            wf_mmae_classify(set, samples.as_ptr(), 0, 0.01, 0.1, 0.0, &mut class, ptr::null_mut())
        },
        WfStatus::WF_INVALID_ARGUMENT
    );
    assert_eq!(
        unsafe {
            wf_mmae_classify(
                set,
                samples.as_ptr(),
                8,
                -0.01,
                0.1,
                0.0,
                &mut class,
                ptr::null_mut(),
            )
        },
        WfStatus::WF_INVALID_ARGUMENT
    );
    unsafe { wf_frequency_set_free(set) };
}

#[test]
fn model_load_predict_round_trip() {
    use weavefreq::nn::{build_architecture, save_model, Architecture, OptimizerMeta};
    use weavefreq::signal::{generate_dataset, FrequencySet, SignalParams};
    use weavefreq::train::{train, TrainConfig};

    // Train a small model with the library API and serve it over FFI.
    let set = FrequencySet::new("omega1", vec![5.0, 5.5, 6.0]).unwrap();
    let base = SignalParams {
        amplitude: 1.0,
        frequency: 1.0,
        phase: 0.0,
        noise_std: 0.0,
        duration: 1.0,
        dt: 0.01,
        seed: 0,
    };
    let ds = generate_dataset(&set, 20, &base, 99).unwrap();
    let spec = build_architecture(Architecture::Dnn, 101, 3).unwrap();
    let config = TrainConfig::for_architecture(Architecture::Dnn, 5);
    let model = train(&spec, &ds, &config).unwrap();

    let dir = std::env::temp_dir().join(format!("weavefreq_ffi_test_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.json");
    let meta = OptimizerMeta {
        kind: config.optimizer,
        learning_rate: config.learning_rate,
        epochs: config.epochs,
        batch_size: config.batch_size,
        shuffle_seed: config.shuffle_seed,
    };
    save_model(&path, &model.spec, &model.params, model.init_seed, &meta).unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle: *mut WfModel = ptr::null_mut();
    assert_eq!(unsafe { wf_model_load(c_path.as_ptr(), &mut handle) }, WfStatus::WF_OK);

    let mut input_length = 0usize;
    let mut num_classes = 0usize;
    unsafe {
        assert_eq!(wf_model_input_length(handle, &mut input_length), WfStatus::WF_OK);
        assert_eq!(wf_model_num_classes(handle, &mut num_classes), WfStatus::WF_OK);
    }
    assert_eq!(input_length, 101);
    assert_eq!(num_classes, 3);

    for (label, freq) in [5.0, 5.5, 6.0].iter().enumerate() {
        let samples = generate(*freq, 0.0, 3);
        let mut class = -1i32;
        let mut logits = [0.0f64; 3];
        let status = unsafe {
            wf_model_predict(handle, samples.as_ptr(), samples.len(), &mut class, logits.as_mut_ptr())
        };
        assert_eq!(status, WfStatus::WF_OK);
        assert_eq!(class as usize, label);
        assert!(logits.iter().all(|l| l.is_finite()));
    }

    // Wrong input length is a checked error, not UB.
    let short = [0.0; 10];
    let mut class = 0i32;
    assert_eq!(
        unsafe { wf_model_predict(handle, short.as_ptr(), 10, &mut class, ptr::null_mut()) },
        WfStatus::WF_INVALID_ARGUMENT
    );

    unsafe { wf_model_free(handle) };
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn model_load_reports_io_errors() {
    let c_path = CString::new("/nonexistent/weavefreq/model.json").unwrap();
    let mut handle: *mut WfModel = ptr::null_mut();
    let status = unsafe { wf_model_load(c_path.as_ptr(), &mut handle) };
    assert_eq!(status, WfStatus::WF_IO_ERROR);
    assert!(handle.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn generated_header_exists_and_exports_api() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/weavefreq.h");
    let text = std::fs::read_to_string(header).expect("header generated at build time");
    for symbol in [
        "wf_frequency_set_new",
        "wf_generate_signal",
        "wf_mmae_classify",
        "wf_model_predict",
        "wf_last_error_message",
        "WF_BUFFER_TOO_SMALL",
        "WEAVEFREQ_H",
    ] {
        assert!(text.contains(symbol), "header missing {symbol}");
    }
}
