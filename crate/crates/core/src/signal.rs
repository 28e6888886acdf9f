//! Noisy sine-wave measurement sequences and labeled Monte-Carlo datasets.
//!
//! A measurement sequence is `z_k = A sin(omega * k * dt + phi) + v_k`
//! with `v_k ~ N(0, sigma^2)` drawn from the deterministic generator in
//! [`crate::rng`]. Every operation here is a pure function of its
//! arguments including the seed, so datasets regenerate bit-identically.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

/// Parameters of one generated measurement sequence.
///
/// `frequency` is in rad/s; the candidate sets elsewhere in the crate
/// use Hz and convert at the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalParams {
    /// Sine amplitude, meters.
    pub amplitude: f64,
    /// Constant angular frequency, rad/s.
    pub frequency: f64,
    /// Phase offset, rad.
    pub phase: f64,
    /// Measurement-noise standard deviation, meters.
    pub noise_std: f64,
    /// Length of the measured interval, seconds.
    pub duration: f64,
    /// Sampling time, seconds.
    pub dt: f64,
    /// Seed for the per-signal noise stream.
    pub seed: u64,
}

impl SignalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::param(format!("duration must be > 0, got {}", self.duration)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.dt > self.duration {
            return Err(Error::param(format!(
                "dt ({}) must not exceed duration ({})",
                self.dt, self.duration
            )));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::param(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        if !(self.frequency > 0.0) {
            return Err(Error::param(format!("frequency must be > 0, got {}", self.frequency)));
        }
        if !(self.amplitude.is_finite() && self.phase.is_finite()) {
            return Err(Error::param("amplitude and phase must be finite".to_string()));
        }
        Ok(())
    }

    /// Number of samples, both endpoints t = 0 and t = duration included:
    /// `floor(duration/dt) + 1` with a small guard against the quotient
    /// landing just below an integer (1.0/0.01 evaluates to 99.999...).
    ///
    /// Note: a signal of n samples spans n - 1 sampling intervals, so
    /// the experiment harness reports the measurement count as n - 1.
    pub fn sample_count(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize + 1
    }
}

/// A generated measurement sequence together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub params: SignalParams,
}

/// Ordered set of candidate frequencies, in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySet {
    pub name: String,
    pub frequencies: Vec<f64>,
}

impl FrequencySet {
    pub fn new(name: impl Into<String>, frequencies: Vec<f64>) -> Result<Self> {
        let set = FrequencySet { name: name.into(), frequencies };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequencies.len() < 2 {
            return Err(Error::param("frequency set needs at least 2 entries".to_string()));
        }
        for w in self.frequencies.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::param(format!(
                    "frequencies must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if !(self.frequencies[0] > 0.0) {
            return Err(Error::param("frequencies must be positive".to_string()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Candidate frequencies converted to rad/s.
    pub fn omegas(&self) -> Vec<f64> {
        self.frequencies.iter().map(|f| TAU * f).collect()
    }
}

/// Signals with class labels into a [`FrequencySet`].
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub signals: Vec<Signal>,
    pub labels: Vec<usize>,
    pub set: FrequencySet,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.signals.len() != self.labels.len() {
            return Err(Error::shape(format!(
                "{} signals but {} labels",
                self.signals.len(),
                self.labels.len()
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.set.len()) {
            return Err(Error::shape(format!(
                "label {bad} out of range for a {}-class set",
                self.set.len()
            )));
        }
        if let Some(first) = self.signals.first() {
            let (d, dt) = (first.params.duration, first.params.dt);
            if self.signals.iter().any(|s| s.params.duration != d || s.params.dt != dt) {
                return Err(Error::shape("signals disagree on duration or dt".to_string()));
            }
        }
        Ok(())
    }

    /// Sample count shared by all signals.
    pub fn input_length(&self) -> usize {
        self.signals.first().map(|s| s.samples.len()).unwrap_or(0)
    }

    /// Per-class signal counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.set.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// Generates one measurement sequence.
///
/// Identical params (seed included) produce a bit-identical signal.
/// Sample k is `amplitude * sin(frequency * t + phase) + noise_std * g_k`
/// with `t = k * dt` evaluated first (the order matters at the last
/// bit) and `g_k` the k-th gaussian of the seeded stream.
pub fn generate_signal(params: &SignalParams) -> Result<Signal> {
    params.validate()?;
    let n = params.sample_count();
    let mut rng = Rng::new(params.seed);
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 * params.dt;
        let clean = params.amplitude * (params.frequency * t + params.phase).sin();
        samples.push(clean + params.noise_std * rng.next_gaussian());
    }
    Ok(Signal { samples, params: *params })
}

/// Generates `per_class` signals for every frequency in `set`.
///
/// Class `i` uses `set.frequencies[i]` (Hz converted to rad/s) and zero
/// phase; amplitude, noise, duration and dt come from `base`. The j-th
/// signal of class i is seeded with `derive_seed(seed, i, j)`, so the
/// dataset is reproducible signal-by-signal.
pub fn generate_dataset(
    set: &FrequencySet,
    per_class: usize,
    base: &SignalParams,
    seed: u64,
) -> Result<LabeledDataset> {
    set.validate()?;
    if per_class == 0 {
        return Err(Error::param("per_class must be >= 1".to_string()));
    }
    let mut signals = Vec::with_capacity(per_class * set.len());
    let mut labels = Vec::with_capacity(per_class * set.len());
    for (class, &freq_hz) in set.frequencies.iter().enumerate() {
        for j in 0..per_class {
            let params = SignalParams {
                frequency: TAU * freq_hz,
                phase: 0.0,
                seed: derive_seed(seed, class as u64, j as u64),
                ..*base
            };
            signals.push(generate_signal(&params)?);
            labels.push(class);
        }
    }
    let ds = LabeledDataset { signals, labels, set: set.clone() };
    ds.validate()?;
    Ok(ds)
}

/// Splits a dataset into disjoint, exhaustive train/test parts.
///
/// The split is stratified: each class contributes its proportional
/// share of `train_count` (largest-remainder rounding, ties to the
/// lower class index), so per-class counts are within one signal of
/// proportionality. Within each class the membership is a seeded
/// shuffle, and both output parts are themselves shuffled, all
/// deterministically in `seed`.
pub fn split_dataset(
    ds: &LabeledDataset,
    train_count: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    ds.validate()?;
    if train_count == 0 || train_count >= ds.len() {
        return Err(Error::param(format!(
            "train_count must be in 1..{} (got {train_count})",
            ds.len()
        )));
    }

    let n_classes = ds.set.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (idx, &label) in ds.labels.iter().enumerate() {
        by_class[label].push(idx);
    }

    // Largest-remainder allocation of train_count across classes.
    let total = ds.len();
    let mut quota = vec![0usize; n_classes];
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(n_classes);
    let mut assigned = 0usize;
    for (c, members) in by_class.iter().enumerate() {
        let exact = train_count as f64 * members.len() as f64 / total as f64;
        quota[c] = exact.floor() as usize;
        assigned += quota[c];
        remainders.push((exact - exact.floor(), c));
    }
    remainders.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for &(_, c) in remainders.iter().take(train_count - assigned) {
        quota[c] += 1;
    }

    let mut train_idx = Vec::with_capacity(train_count);
    let mut test_idx = Vec::with_capacity(total - train_count);
    for (c, members) in by_class.iter_mut().enumerate() {
        let mut rng = Rng::new(derive_seed(seed, c as u64, 0));
        rng.shuffle(members);
        let q = quota[c].min(members.len());
        train_idx.extend_from_slice(&members[..q]);
        test_idx.extend_from_slice(&members[q..]);
    }
    Rng::new(derive_seed(seed, n_classes as u64, 1)).shuffle(&mut train_idx);
    Rng::new(derive_seed(seed, n_classes as u64, 2)).shuffle(&mut test_idx);

    let gather = |indices: &[usize]| LabeledDataset {
        signals: indices.iter().map(|&i| ds.signals[i].clone()).collect(),
        labels: indices.iter().map(|&i| ds.labels[i]).collect(),
        set: ds.set.clone(),
    };
    Ok((gather(&train_idx), gather(&test_idx)))
}

// ── Dataset CSV ──────────────────────────────────────────────────────
//
// One row per signal: `label,freq_hz,sigma,dt,s0,s1,...,sN`. Floats are
// written in Rust's shortest round-trip decimal form (at most 17
// significant digits), so save/load is lossless.

/// Writes a dataset to CSV.
pub fn save_dataset_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    ds.validate()?;
    let n = ds.input_length();
    let mut out = String::new();
    out.push_str("label,freq_hz,sigma,dt");
    for k in 0..n {
        let _ = write!(out, ",s{k}");
    }
    out.push('\n');
    for (signal, &label) in ds.signals.iter().zip(&ds.labels) {
        let _ = write!(
            out,
            "{label},{},{},{}",
            ds.set.frequencies[label], signal.params.noise_std, signal.params.dt
        );
        for s in &signal.samples {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a dataset written by [`save_dataset_csv`].
///
/// The CSV stores what the estimators need (label, frequency, sigma, dt,
/// samples); amplitude defaults to 1 and phase to 0 on reload, and the
/// per-signal seed is not preserved.
pub fn load_dataset_csv(path: &Path) -> Result<LabeledDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(path, "empty file"))?;
    if !header.starts_with("label,freq_hz,sigma,dt") {
        return Err(Error::parse(path, format!("unexpected header: {header}")));
    }

    let mut freq_by_label: BTreeMap<usize, f64> = BTreeMap::new();
    let mut rows: Vec<(usize, f64, f64, f64, Vec<f64>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |what: &str| {
            fields
                .next()
                .ok_or_else(|| Error::parse(path, format!("row {}: missing {what}", lineno + 2)))
        };
        let label: usize = next("label")?
            .parse()
            .map_err(|e| Error::parse(path, format!("row {}: label: {e}", lineno + 2)))?;
        let freq_hz: f64 = next("freq_hz")?
            .parse()
            .map_err(|e| Error::parse(path, format!("row {}: freq_hz: {e}", lineno + 2)))?;
        let sigma: f64 = next("sigma")?
            .parse()
            .map_err(|e| Error::parse(path, format!("row {}: sigma: {e}", lineno + 2)))?;
        let dt: f64 = next("dt")?
            .parse()
            .map_err(|e| Error::parse(path, format!("row {}: dt: {e}", lineno + 2)))?;
        let samples: Vec<f64> = fields
            .map(|f| {
                f.parse().map_err(|e| Error::parse(path, format!("row {}: sample: {e}", lineno + 2)))
            })
            .collect::<Result<_>>()?;
        if samples.is_empty() {
            return Err(Error::parse(path, format!("row {}: no samples", lineno + 2)));
        }
        freq_by_label.entry(label).or_insert(freq_hz);
        rows.push((label, freq_hz, sigma, dt, samples));
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }

    let max_label = *freq_by_label.keys().last().unwrap();
    if freq_by_label.len() != max_label + 1 {
        return Err(Error::parse(path, "labels do not cover 0..num_classes"));
    }
    let frequencies: Vec<f64> = freq_by_label.values().copied().collect();
    let set = FrequencySet::new("imported", frequencies)?;

    let mut signals = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (label, freq_hz, sigma, dt, samples) in rows {
        let params = SignalParams {
            amplitude: 1.0,
            frequency: TAU * freq_hz,
            phase: 0.0,
            noise_std: sigma,
            duration: (samples.len() - 1) as f64 * dt,
            dt,
            seed: 0,
        };
        signals.push(Signal { samples, params });
        labels.push(label);
    }
    let ds = LabeledDataset { signals, labels, set };
    ds.validate()?;
    Ok(ds)
}
