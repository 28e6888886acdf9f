//! Run configuration: one JSON document with a versioned schema that
//! pins every knob of a run (candidate set, signal parameters, filter
//! bank settings, training hyperparameters, sweep grids, seeds). The
//! sha256-based fingerprint of the effective config keys every output
//! file, so identical configs reproduce identical artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{fingerprint, Protocol};
use crate::mmae::MmaeConfig;
use crate::signal::FrequencySet;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// `omega1`, `omega2`, `omega3`, or `custom`.
    pub set: String,
    /// Candidate frequencies when `set` is `custom`, Hz, ascending.
    pub custom_frequencies_hz: Vec<f64>,
    pub amplitude: f64,
    /// Noise standard deviation for single-condition commands.
    pub sigma: f64,
    /// Signal length in seconds.
    pub duration: f64,
    pub dt: f64,
    pub per_class: usize,
    /// Process-noise spectral density of the filter bank.
    pub phi_s: f64,
    /// Measurement-noise variance override; `null` tracks the
    /// generating sigma^2.
    pub mmae_r: Option<f64>,
    /// Epoch override; `null` uses each architecture's default (30 for
    /// the dense nets, 12 for the convolutional ones).
    pub epochs: Option<usize>,
    pub batch_size: usize,
    /// Learning-rate override; `null` uses each architecture's default.
    pub learning_rate: Option<f64>,
    /// Noise grid for `sweep noise` and `sweep arch`.
    pub sigma_grid: Vec<f64>,
    /// Duration grid for `sweep length`.
    pub duration_grid: Vec<f64>,
    /// Baseline set subtracted in `sweep loss`.
    pub loss_baseline: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 keeps the library default.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            set: "omega1".to_string(),
            custom_frequencies_hz: vec![],
            amplitude: 1.0,
            sigma: 0.3,
            duration: 1.0,
            dt: 0.01,
            per_class: 3000,
            phi_s: MmaeConfig::default().phi_s,
            mmae_r: None,
            epochs: None,
            batch_size: 32,
            learning_rate: None,
            sigma_grid: vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
            duration_grid: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            loss_baseline: "omega2".to_string(),
            seed: 7_0913,
            out_dir: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if config.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported schema version {} (expected {CONFIG_SCHEMA_VERSION})",
                path.display(),
                config.schema_version
            )));
        }
        Ok(config)
    }

    /// Checks every nested invariant before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.frequency_set().map_err(|e| Error::Config(e.to_string()))?;
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(self.amplitude.is_finite() && self.amplitude > 0.0, "amplitude must be > 0")?;
        check(self.sigma >= 0.0, "sigma must be >= 0")?;
        check(self.duration > 0.0, "duration must be > 0")?;
        check(self.dt > 0.0 && self.dt <= self.duration, "dt must be in (0, duration]")?;
        check(self.per_class >= 1, "per_class must be >= 1")?;
        check(self.phi_s >= 0.0, "phi_s must be >= 0")?;
        check(self.mmae_r.is_none_or(|r| r > 0.0), "mmae_r must be > 0")?;
        check(self.epochs.is_none_or(|e| e >= 1), "epochs must be >= 1")?;
        check(self.batch_size >= 1, "batch_size must be >= 1")?;
        check(self.learning_rate.is_none_or(|lr| lr > 0.0), "learning_rate must be > 0")?;
        check(
            !self.sigma_grid.is_empty() && self.sigma_grid.iter().all(|&s| s >= 0.0),
            "sigma_grid must be non-empty and non-negative",
        )?;
        check(
            !self.duration_grid.is_empty() && self.duration_grid.iter().all(|&d| d > self.dt),
            "duration_grid entries must exceed dt",
        )?;
        check(
            ["omega1", "omega2", "omega3"].contains(&self.loss_baseline.as_str()),
            "loss_baseline must be one of omega1, omega2, omega3",
        )?;
        Ok(())
    }

    /// Resolves the configured candidate set.
    pub fn frequency_set(&self) -> Result<FrequencySet> {
        let [w1, w2, w3] = crate::experiments::builtin_frequency_sets();
        match self.set.as_str() {
            "omega1" => Ok(w1),
            "omega2" => Ok(w2),
            "omega3" => Ok(w3),
            "custom" => FrequencySet::new("custom", self.custom_frequencies_hz.clone()),
            other => Err(Error::Config(format!(
                "unknown set '{other}'; valid: omega1, omega2, omega3, custom"
            ))),
        }
    }

    pub fn named_set(&self, name: &str) -> Result<FrequencySet> {
        let [w1, w2, w3] = crate::experiments::builtin_frequency_sets();
        match name {
            "omega1" => Ok(w1),
            "omega2" => Ok(w2),
            "omega3" => Ok(w3),
            other => Err(Error::Config(format!("unknown set '{other}'"))),
        }
    }

    pub fn mmae_config(&self) -> MmaeConfig {
        MmaeConfig {
            phi_s: self.phi_s,
            r: self.mmae_r,
            amplitude: self.amplitude,
            ..MmaeConfig::default()
        }
    }

    pub fn protocol(&self) -> Protocol {
        Protocol {
            per_class: self.per_class,
            amplitude: self.amplitude,
            duration: self.duration,
            dt: self.dt,
            root_seed: self.seed,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            mmae: self.mmae_config(),
        }
    }

    /// 16-hex-digit fingerprint of the effective config.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_value(self).expect("config serializes");
        let mut meta = BTreeMap::new();
        flatten_json("", &json, &mut meta);
        fingerprint(&meta)
    }
}

fn flatten_json(prefix: &str, value: &serde_json::Value, out: &mut BTreeMap<String, String>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_json(&key, v, out);
            }
        }
        serde_json::Value::Array(items) => {
            out.insert(
                prefix.to_string(),
                items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            );
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}
