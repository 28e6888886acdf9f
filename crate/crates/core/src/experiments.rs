//! The benchmark studies: accuracy versus noise level, versus frequency
//! set, versus signal length, and across network architectures.
//!
//! Every sweep point generates its own dataset (seeded from the root
//! seed, the candidate set, and the condition index), trains the
//! network estimators on the train split, and scores all estimators on
//! the same test split. The MMAE needs no training and sees only the
//! test signals. Results carry a config fingerprint so any figure can
//! be regenerated from its CSV alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mmae::{classify_signal, MmaeConfig};
use crate::nn::{build_architecture, Architecture};
use crate::rng::{derive_seed, mix64};
use crate::signal::{generate_dataset, split_dataset, FrequencySet, SignalParams};
use crate::train::{evaluate_accuracy, train, TrainConfig};

/// The three candidate sets used throughout the studies, in Hz.
pub fn builtin_frequency_sets() -> [FrequencySet; 3] {
    [
        FrequencySet::new("omega1", vec![5.0, 5.5, 6.0]).unwrap(),
        FrequencySet::new("omega2", vec![5.0, 5.2, 5.4]).unwrap(),
        FrequencySet::new("omega3", vec![10.0, 10.2, 10.4]).unwrap(),
    ]
}

/// An estimator under benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Mmae,
    Network(Architecture),
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Mmae => "MMAE",
            Estimator::Network(arch) => arch.name(),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a sweep point needs besides the condition itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    /// Signals generated per class; the train/test split keeps the
    /// 8:1 ratio (train count = total * 8 / 9).
    pub per_class: usize,
    pub amplitude: f64,
    pub duration: f64,
    pub dt: f64,
    pub root_seed: u64,
    /// `None` uses each architecture's default epoch count.
    pub epochs: Option<usize>,
    pub batch_size: usize,
    /// `None` uses each architecture's default learning rate.
    pub learning_rate: Option<f64>,
    pub mmae: MmaeConfig,
}

impl Protocol {
    /// Full-scale protocol: 3000 signals per class.
    pub fn replication(root_seed: u64) -> Self {
        Protocol {
            per_class: 3000,
            amplitude: 1.0,
            duration: 1.0,
            dt: 0.01,
            root_seed,
            epochs: None,
            batch_size: 32,
            learning_rate: None,
            mmae: MmaeConfig::default(),
        }
    }

    /// Reduced protocol (300 signals per class) for quick runs.
    pub fn fast(root_seed: u64) -> Self {
        Protocol { per_class: 300, ..Protocol::replication(root_seed) }
    }

    /// Train-split size preserving the 8:1 train:test ratio.
    pub fn train_count(&self, total: usize) -> usize {
        total * 8 / 9
    }

    fn train_config(&self, arch: Architecture, shuffle_seed: u64) -> TrainConfig {
        let mut config = TrainConfig::for_architecture(arch, shuffle_seed);
        if let Some(epochs) = self.epochs {
            config.epochs = epochs;
        }
        config.batch_size = self.batch_size;
        if let Some(lr) = self.learning_rate {
            config.learning_rate = lr;
        }
        config
    }

    /// Key-value description of the protocol for result headers.
    pub fn meta(&self) -> BTreeMap<String, String> {
        let mut meta = BTreeMap::new();
        meta.insert("per_class".to_string(), self.per_class.to_string());
        meta.insert("amplitude".to_string(), self.amplitude.to_string());
        meta.insert("dt".to_string(), self.dt.to_string());
        meta.insert("root_seed".to_string(), self.root_seed.to_string());
        meta.insert(
            "epochs".to_string(),
            self.epochs.map_or("arch_default".to_string(), |e| e.to_string()),
        );
        meta.insert("batch_size".to_string(), self.batch_size.to_string());
        meta.insert(
            "learning_rate".to_string(),
            self.learning_rate.map_or("arch_default".to_string(), |lr| lr.to_string()),
        );
        meta.insert("phi_s".to_string(), self.mmae.phi_s.to_string());
        meta.insert(
            "mmae_r".to_string(),
            self.mmae.r.map_or("sigma_squared".to_string(), |r| r.to_string()),
        );
        meta
    }
}

/// One accuracy measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub condition: f64,
    pub estimator: String,
    pub accuracy: f64,
    pub n_test: usize,
}

/// A table of (condition, estimator, accuracy) rows with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Name of the condition column, e.g. `sigma` or `duration_s`.
    pub condition_name: String,
    pub rows: Vec<SweepRow>,
    /// Fingerprint and config key-values, written as `# key=value`
    /// header lines.
    pub meta: BTreeMap<String, String>,
}

impl SweepResult {
    pub fn accuracy(&self, condition: f64, estimator: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.condition == condition && r.estimator == estimator)
            .map(|r| r.accuracy)
    }

    /// Distinct condition values in first-seen order.
    pub fn conditions(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for row in &self.rows {
            if !out.contains(&row.condition) {
                out.push(row.condition);
            }
        }
        out
    }

    /// Distinct estimator names in first-seen order.
    pub fn estimators(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for row in &self.rows {
            if !out.iter().any(|e| *e == row.estimator) {
                out.push(row.estimator.clone());
            }
        }
        out
    }

    fn validate_unique_rows(&self) -> Result<()> {
        for (i, a) in self.rows.iter().enumerate() {
            for b in &self.rows[i + 1..] {
                if a.condition == b.condition && a.estimator == b.estimator {
                    return Err(Error::param(format!(
                        "duplicate row for ({}, {})",
                        a.condition, a.estimator
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Short config fingerprint: sha256 over the sorted key-value pairs,
/// truncated to 16 hex characters.
pub fn fingerprint(meta: &BTreeMap<String, String>) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in meta {
        if k == "fingerprint" {
            continue;
        }
        hasher.update(k.as_bytes());
        hasher.update([0x1f]);
        hasher.update(v.as_bytes());
        hasher.update([0x1e]);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for byte in &digest[..8] {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Deterministic tag for a candidate set, mixed into dataset seeds.
fn set_tag(set: &FrequencySet) -> u64 {
    set.frequencies.iter().fold(mix64(set.frequencies.len() as u64), |acc, f| {
        mix64(acc ^ f.to_bits())
    })
}

/// Accuracy of every estimator at one (set, sigma, duration) point;
/// `condition` is the value recorded in the output rows.
#[allow(clippy::too_many_arguments)]
fn evaluate_point(
    set: &FrequencySet,
    sigma: f64,
    duration: f64,
    estimators: &[Estimator],
    protocol: &Protocol,
    condition: f64,
    condition_index: u64,
) -> Result<Vec<SweepRow>> {
    let base = SignalParams {
        amplitude: protocol.amplitude,
        frequency: 1.0, // replaced per class
        phase: 0.0,
        noise_std: sigma,
        duration,
        dt: protocol.dt,
        seed: 0,
    };
    let dataset_seed = derive_seed(protocol.root_seed, set_tag(set), condition_index);
    let ds = generate_dataset(set, protocol.per_class, &base, dataset_seed)?;
    let (train_set, test_set) =
        split_dataset(&ds, protocol.train_count(ds.len()), derive_seed(dataset_seed, 1, 0))?;

    let mut rows = Vec::with_capacity(estimators.len());
    for (e_idx, estimator) in estimators.iter().enumerate() {
        let accuracy = match estimator {
            Estimator::Mmae => {
                let correct: usize = test_set
                    .signals
                    .par_iter()
                    .zip(&test_set.labels)
                    .map(|(signal, &label)| {
                        classify_signal(signal, set, &protocol.mmae)
                            .map(|class| (class == label) as usize)
                    })
                    .try_reduce(|| 0, |a, b| Ok(a + b))?;
                correct as f64 / test_set.len() as f64
            }
            Estimator::Network(arch) => {
                let spec = build_architecture(*arch, train_set.input_length(), set.len())?;
                let config =
                    protocol.train_config(*arch, derive_seed(dataset_seed, 2, e_idx as u64));
                let model = train(&spec, &train_set, &config)?;
                evaluate_accuracy(&model, &test_set)?
            }
        };
        rows.push(SweepRow {
            condition,
            estimator: estimator.name().to_string(),
            accuracy,
            n_test: test_set.len(),
        });
    }
    Ok(rows)
}

fn base_meta(
    kind: &str,
    condition_name: &str,
    set: &FrequencySet,
    estimators: &[Estimator],
    protocol: &Protocol,
) -> BTreeMap<String, String> {
    let mut meta = protocol.meta();
    meta.insert("kind".to_string(), kind.to_string());
    meta.insert("condition".to_string(), condition_name.to_string());
    meta.insert("set".to_string(), set.name.clone());
    meta.insert(
        "frequencies_hz".to_string(),
        set.frequencies.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" "),
    );
    meta.insert(
        "estimators".to_string(),
        estimators.iter().map(|e| e.name().to_string()).collect::<Vec<_>>().join(" "),
    );
    meta
}

/// Accuracy versus noise standard deviation at fixed duration.
pub fn noise_sweep(
    set: &FrequencySet,
    sigmas: &[f64],
    estimators: &[Estimator],
    protocol: &Protocol,
) -> Result<SweepResult> {
    if sigmas.is_empty() {
        return Err(Error::param("empty sigma grid".to_string()));
    }
    if sigmas.iter().any(|&s| s < 0.0) {
        return Err(Error::param("sigma must be >= 0".to_string()));
    }
    let mut meta = base_meta("noise_sweep", "sigma", set, estimators, protocol);
    meta.insert("duration_s".to_string(), protocol.duration.to_string());
    meta.insert("fingerprint".to_string(), fingerprint(&meta));

    let mut rows = Vec::new();
    for (i, &sigma) in sigmas.iter().enumerate() {
        rows.extend(evaluate_point(
            set,
            sigma,
            protocol.duration,
            estimators,
            protocol,
            sigma,
            i as u64,
        )?);
    }
    Ok(SweepResult { condition_name: "sigma".to_string(), rows, meta })
}

/// Accuracy versus signal length at fixed noise, dt unchanged. The
/// network input length follows the duration, so a model is trained per
/// duration. A duration of T seconds means floor(T/dt) measurement
/// intervals (one less than the sample count).
pub fn length_sweep(
    set: &FrequencySet,
    durations: &[f64],
    sigma: f64,
    estimators: &[Estimator],
    protocol: &Protocol,
) -> Result<SweepResult> {
    if durations.is_empty() {
        return Err(Error::param("empty duration grid".to_string()));
    }
    if durations.iter().any(|&d| d <= 0.0) {
        return Err(Error::param("durations must be > 0".to_string()));
    }
    let mut meta = base_meta("length_sweep", "duration_s", set, estimators, protocol);
    meta.insert("sigma".to_string(), sigma.to_string());
    meta.insert("fingerprint".to_string(), fingerprint(&meta));

    let mut rows = Vec::new();
    for (i, &duration) in durations.iter().enumerate() {
        rows.extend(evaluate_point(
            set,
            sigma,
            duration,
            estimators,
            protocol,
            duration,
            i as u64,
        )?);
    }
    Ok(SweepResult { condition_name: "duration_s".to_string(), rows, meta })
}

/// Noise sweep of the four built-in architectures.
pub fn architecture_comparison(
    set: &FrequencySet,
    sigmas: &[f64],
    protocol: &Protocol,
) -> Result<SweepResult> {
    let estimators: Vec<Estimator> =
        Architecture::ALL.iter().map(|&a| Estimator::Network(a)).collect();
    let mut result = noise_sweep(set, sigmas, &estimators, protocol)?;
    result.meta.insert("kind".to_string(), "architecture_comparison".to_string());
    let fp = fingerprint(&result.meta);
    result.meta.insert("fingerprint".to_string(), fp);
    Ok(result)
}

/// Rowwise accuracy difference `a - b` per (condition, estimator).
///
/// Conditions and estimators must match pairwise; the output's
/// `accuracy` column holds the signed loss.
pub fn accuracy_loss(a: &SweepResult, b: &SweepResult) -> Result<SweepResult> {
    if a.condition_name != b.condition_name {
        return Err(Error::shape(format!(
            "condition mismatch: {} vs {}",
            a.condition_name, b.condition_name
        )));
    }
    a.validate_unique_rows()?;
    b.validate_unique_rows()?;
    if a.rows.len() != b.rows.len() {
        return Err(Error::shape(format!(
            "row count mismatch: {} vs {}",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let mut rows = Vec::with_capacity(a.rows.len());
    for row in &a.rows {
        let other = b
            .rows
            .iter()
            .find(|r| r.condition == row.condition && r.estimator == row.estimator)
            .ok_or_else(|| {
                Error::shape(format!(
                    "no matching row for ({}, {})",
                    row.condition, row.estimator
                ))
            })?;
        rows.push(SweepRow {
            condition: row.condition,
            estimator: row.estimator.clone(),
            accuracy: row.accuracy - other.accuracy,
            n_test: row.n_test.min(other.n_test),
        });
    }
    let mut meta = BTreeMap::new();
    meta.insert("kind".to_string(), "accuracy_loss".to_string());
    meta.insert("condition".to_string(), a.condition_name.clone());
    meta.insert(
        "minuend".to_string(),
        format!(
            "{} {}",
            a.meta.get("set").cloned().unwrap_or_default(),
            a.meta.get("fingerprint").cloned().unwrap_or_default()
        ),
    );
    meta.insert(
        "subtrahend".to_string(),
        format!(
            "{} {}",
            b.meta.get("set").cloned().unwrap_or_default(),
            b.meta.get("fingerprint").cloned().unwrap_or_default()
        ),
    );
    meta.insert("fingerprint".to_string(), fingerprint(&meta));
    Ok(SweepResult { condition_name: a.condition_name.clone(), rows, meta })
}

// ── Results CSV ──────────────────────────────────────────────────────

/// Writes a sweep result: `# key=value` header lines (sorted), then
/// `condition,estimator,accuracy,n_test` rows.
pub fn export_results(result: &SweepResult, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (k, v) in &result.meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("condition,estimator,accuracy,n_test\n");
    for row in &result.rows {
        let _ = writeln!(out, "{},{},{},{}", row.condition, row.estimator, row.accuracy, row.n_test);
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a sweep result written by [`export_results`].
pub fn import_results(path: &Path) -> Result<SweepResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| Error::parse(path, format!("line {}: bad meta", lineno + 1)))?;
            meta.insert(k.to_string(), v.to_string());
        } else if !saw_header {
            if line != "condition,estimator,accuracy,n_test" {
                return Err(Error::parse(path, format!("line {}: bad header", lineno + 1)));
            }
            saw_header = true;
        } else if !line.is_empty() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, format!("line {}: expected 4 fields", lineno + 1)));
            }
            rows.push(SweepRow {
                condition: fields[0]
                    .parse()
                    .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?,
                estimator: fields[1].to_string(),
                accuracy: fields[2]
                    .parse()
                    .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?,
                n_test: fields[3]
                    .parse()
                    .map_err(|e| Error::parse(path, format!("line {}: {e}", lineno + 1)))?,
            });
        }
    }
    if !saw_header {
        return Err(Error::parse(path, "missing column header"));
    }
    let condition_name = meta.get("condition").cloned().unwrap_or_else(|| "condition".to_string());
    Ok(SweepResult { condition_name, rows, meta })
}

/// Writes a small matplotlib script that plots `csv_name` (a sibling
/// file) as one accuracy line per estimator.
pub fn emit_plot_script(result: &SweepResult, csv_name: &str, path: &Path) -> Result<()> {
    let is_loss = result.meta.get("kind").is_some_and(|k| k == "accuracy_loss");
    let y_label = if is_loss { "Accuracy loss" } else { "Accuracy" };
    let x_label = match result.condition_name.as_str() {
        "sigma" => "Noise standard deviation [m]",
        "duration_s" => "Signal length [s]",
        other => other,
    };
    let title = format!(
        "{y_label} vs {}",
        match result.condition_name.as_str() {
            "sigma" => "noise standard deviation",
            "duration_s" => "signal length",
            other => other,
        }
    );
    let script = format!(
        r##"#!/usr/bin/env python3
"""Plots {csv}: one {what} line per estimator."""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv}"
series = defaultdict(list)
with open(path) as fh:
    for row in csv.DictReader(r for r in fh if not r.startswith("#")):
        series[row["estimator"]].append((float(row["condition"]), float(row["accuracy"])))

fig, ax = plt.subplots(figsize=(7, 4.5))
for estimator, points in series.items():
    points.sort()
    ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=estimator)
ax.set_xlabel("{x_label}")
ax.set_ylabel("{y_label}")
ax.set_title("{title}")
ax.grid(True, alpha=0.4)
ax.legend()
out = path.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=150, bbox_inches="tight")
print(f"wrote {{out}}")
"##,
        csv = csv_name,
        what = y_label.to_lowercase(),
        x_label = x_label,
        y_label = y_label,
        title = title,
    );
    std::fs::write(path, script).map_err(|e| Error::io(path, e))
}
