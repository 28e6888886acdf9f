//! Model files: JSON documents carrying the architecture, the seed the
//! weights were initialized from, the flat per-layer weights
//! (row-major) and biases, and the optimizer settings used in training.
//! Floats serialize in shortest round-trip decimal form, so a
//! save/load/save cycle is byte-identical.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{NetworkSpec, OptimizerKind, Parameters};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerMeta {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerValues {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub spec: NetworkSpec,
    pub init_seed: u64,
    layers: Vec<LayerValues>,
    pub optimizer: OptimizerMeta,
}

/// Writes a trained model to `path` as JSON.
pub fn save_model(
    path: &Path,
    spec: &NetworkSpec,
    params: &Parameters,
    init_seed: u64,
    optimizer: &OptimizerMeta,
) -> Result<()> {
    let layers = params
        .blocks
        .iter()
        .map(|b| LayerValues {
            weights: params.weights(b).to_vec(),
            biases: params.biases(b).to_vec(),
        })
        .collect();
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        spec: spec.clone(),
        init_seed,
        layers,
        optimizer: optimizer.clone(),
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::parse(path, format!("serialize: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Reads a model file and reassembles the flat parameter vector.
pub fn load_model(path: &Path) -> Result<(NetworkSpec, Parameters, u64, OptimizerMeta)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::parse(
            path,
            format!(
                "unsupported schema version {} (expected {MODEL_SCHEMA_VERSION})",
                file.schema_version
            ),
        ));
    }
    let mut params = Parameters::zeros(&file.spec)?;
    if file.layers.len() != params.blocks.len() {
        return Err(Error::parse(
            path,
            format!(
                "model has {} trainable layers, spec expects {}",
                file.layers.len(),
                params.blocks.len()
            ),
        ));
    }
    for (block, layer) in params.blocks.clone().iter().zip(&file.layers) {
        if layer.weights.len() != block.weight_len || layer.biases.len() != block.bias_len {
            return Err(Error::parse(
                path,
                format!(
                    "layer {} sizes {}/{} do not match spec {}/{}",
                    block.layer,
                    layer.weights.len(),
                    layer.biases.len(),
                    block.weight_len,
                    block.bias_len
                ),
            ));
        }
        params.data[block.weight_offset..block.weight_offset + block.weight_len]
            .copy_from_slice(&layer.weights);
        params.data[block.bias_offset..block.bias_offset + block.bias_len]
            .copy_from_slice(&layer.biases);
    }
    Ok((file.spec, params, file.init_seed, file.optimizer))
}
