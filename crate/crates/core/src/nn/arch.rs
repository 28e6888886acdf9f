//! The four built-in classifier architectures.
//!
//! Two fully-connected stacks (hidden widths 10-20-10 and 40-30-20-10,
//! Adagrad) and two convolutional stacks (filter counts 4-8-12-16 and
//! 4-8-12-16-20-24-28, kernel 3, stride 1, same padding, Adam), all
//! ReLU-activated with a single dense head producing the class logits.
//! Optional max-pooling after each conv block is off by default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{LayerSpec, NetworkSpec, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    Dnn,
    Dnn2,
    Cnn,
    Cnn2,
}

impl Architecture {
    pub const ALL: [Architecture; 4] =
        [Architecture::Dnn, Architecture::Dnn2, Architecture::Cnn, Architecture::Cnn2];

    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Dnn => "DNN",
            Architecture::Dnn2 => "DNN2",
            Architecture::Cnn => "CNN",
            Architecture::Cnn2 => "CNN2",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_uppercase().as_str() {
            "DNN" => Ok(Architecture::Dnn),
            "DNN2" => Ok(Architecture::Dnn2),
            "CNN" => Ok(Architecture::Cnn),
            "CNN2" => Ok(Architecture::Cnn2),
            other => Err(Error::param(format!(
                "unknown architecture '{other}'; valid names: DNN, DNN2, CNN, CNN2"
            ))),
        }
    }

    /// Hidden dense widths (fully-connected nets only).
    pub fn hidden_widths(&self) -> &'static [usize] {
        match self {
            Architecture::Dnn => &[10, 20, 10],
            Architecture::Dnn2 => &[40, 30, 20, 10],
            _ => &[],
        }
    }

    /// Conv filter counts (convolutional nets only).
    pub fn filter_counts(&self) -> &'static [usize] {
        match self {
            Architecture::Cnn => &[4, 8, 12, 16],
            Architecture::Cnn2 => &[4, 8, 12, 16, 20, 24, 28],
            _ => &[],
        }
    }

    pub fn is_convolutional(&self) -> bool {
        !self.filter_counts().is_empty()
    }

    /// Default update rule and learning rate: Adagrad at 0.01 for the
    /// dense nets, Adam at 0.001 for the conv nets.
    pub fn default_optimizer(&self) -> (OptimizerKind, f64) {
        if self.is_convolutional() {
            (OptimizerKind::adam(), 0.001)
        } else {
            (OptimizerKind::adagrad(), 0.01)
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds the named architecture for a given input length and class
/// count. Max-pooling after each conv block is disabled.
pub fn build_architecture(
    arch: Architecture,
    input_length: usize,
    num_classes: usize,
) -> Result<NetworkSpec> {
    build_architecture_with_pooling(arch, input_length, num_classes, None)
}

/// As [`build_architecture`], with an optional max-pool window applied
/// after each conv block's activation.
pub fn build_architecture_with_pooling(
    arch: Architecture,
    input_length: usize,
    num_classes: usize,
    pool_window: Option<usize>,
) -> Result<NetworkSpec> {
    let mut layers = Vec::new();
    if arch.is_convolutional() {
        for &filters in arch.filter_counts() {
            layers.push(LayerSpec::conv3(filters));
            layers.push(LayerSpec::Relu);
            if let Some(window) = pool_window {
                layers.push(LayerSpec::MaxPool1d { window });
            }
        }
        layers.push(LayerSpec::Flatten);
        layers.push(LayerSpec::Dense { units: num_classes });
    } else {
        for &units in arch.hidden_widths() {
            layers.push(LayerSpec::Dense { units });
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::Dense { units: num_classes });
    }
    let spec = NetworkSpec { name: arch.name().to_string(), input_length, layers, num_classes };
    spec.validate()?;
    Ok(spec)
}
