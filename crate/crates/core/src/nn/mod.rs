//! Minimal from-scratch neural-network core: dense and 1-D
//! convolutional layers, ReLU, max-pooling, softmax cross-entropy, and
//! analytically derived reverse-mode gradients.
//!
//! There is no autodiff graph. Each layer's forward and backward are
//! written out by hand, and the gradient tests check every parameter
//! against central finite differences.

mod arch;
mod model_io;
mod optim;

pub use arch::{build_architecture, build_architecture_with_pooling, Architecture};
pub use model_io::{load_model, save_model, ModelFile, OptimizerMeta};
pub use optim::{adagrad_step, adam_step, sgd_step, OptimizerKind, OptimizerState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

// ── Tensors ──────────────────────────────────────────────────────────

/// A (channels, length) array of f64, stored flat channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1 {
    pub channels: usize,
    pub length: usize,
    pub values: Vec<f64>,
}

impl Tensor1 {
    pub fn new(channels: usize, length: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != channels * length {
            return Err(Error::shape(format!(
                "tensor of shape ({channels}, {length}) needs {} values, got {}",
                channels * length,
                values.len()
            )));
        }
        Ok(Tensor1 { channels, length, values })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        Tensor1 { channels, length, values: vec![0.0; channels * length] }
    }

    /// Single-channel tensor over a flat slice.
    pub fn from_samples(samples: &[f64]) -> Self {
        Tensor1 { channels: 1, length: samples.len(), values: samples.to_vec() }
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.length..(c + 1) * self.length]
    }
}

// ── Layer and network specs ──────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero-pad so the output keeps the input length.
    Same,
    /// No padding; output shrinks by kernel - 1.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense { units: usize },
    Conv1d { filters: usize, kernel: usize, stride: usize, padding: Padding },
    MaxPool1d { window: usize },
    Relu,
    Flatten,
}

impl LayerSpec {
    pub fn conv3(filters: usize) -> Self {
        LayerSpec::Conv1d { filters, kernel: 3, stride: 1, padding: Padding::Same }
    }
}

/// Declarative network architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input_length: usize,
    pub layers: Vec<LayerSpec>,
    pub num_classes: usize,
}

impl NetworkSpec {
    /// Propagates (channels, length) through every layer.
    ///
    /// Returns the shape after each layer (element 0 is the input
    /// shape); fails on any inconsistency, including a final output
    /// that is not exactly `num_classes` logits.
    pub fn propagate_shapes(&self) -> Result<Vec<(usize, usize)>> {
        if self.input_length == 0 {
            return Err(Error::shape("input_length must be >= 1".to_string()));
        }
        if self.num_classes < 2 {
            return Err(Error::shape("num_classes must be >= 2".to_string()));
        }
        let mut shapes = vec![(1usize, self.input_length)];
        for (i, layer) in self.layers.iter().enumerate() {
            let (c, l) = *shapes.last().unwrap();
            let next = match *layer {
                LayerSpec::Dense { units } => {
                    if units == 0 {
                        return Err(Error::shape(format!("layer {i}: dense units must be >= 1")));
                    }
                    if c != 1 {
                        return Err(Error::shape(format!(
                            "layer {i}: dense expects a flat input, got {c} channels (insert flatten)"
                        )));
                    }
                    (1, units)
                }
                LayerSpec::Conv1d { filters, kernel, stride, padding } => {
                    if filters == 0 {
                        return Err(Error::shape(format!("layer {i}: conv filters must be >= 1")));
                    }
                    if stride != 1 {
                        return Err(Error::shape(format!("layer {i}: only stride 1 is supported")));
                    }
                    if kernel == 0 || (padding == Padding::Same && kernel % 2 == 0) {
                        return Err(Error::shape(format!(
                            "layer {i}: kernel must be odd with same padding, got {kernel}"
                        )));
                    }
                    let out_len = match padding {
                        Padding::Same => l,
                        Padding::None => {
                            if l < kernel {
                                return Err(Error::shape(format!(
                                    "layer {i}: input length {l} shorter than kernel {kernel}"
                                )));
                            }
                            l - kernel + 1
                        }
                    };
                    (filters, out_len)
                }
                LayerSpec::MaxPool1d { window } => {
                    if window == 0 {
                        return Err(Error::shape(format!("layer {i}: pool window must be >= 1")));
                    }
                    if l < window {
                        return Err(Error::shape(format!(
                            "layer {i}: input length {l} shorter than pool window {window}"
                        )));
                    }
                    (c, l / window)
                }
                LayerSpec::Relu => (c, l),
                LayerSpec::Flatten => (1, c * l),
            };
            shapes.push(next);
        }
        let (c, l) = *shapes.last().unwrap();
        if c * l != self.num_classes {
            return Err(Error::shape(format!(
                "network outputs {} values, expected {} logits",
                c * l,
                self.num_classes
            )));
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        self.propagate_shapes().map(|_| ())
    }
}

// ── Parameters ───────────────────────────────────────────────────────

/// Location of one trainable layer's weights and biases inside the
/// flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamBlock {
    /// Index into `NetworkSpec::layers`.
    pub layer: usize,
    pub weight_offset: usize,
    pub weight_len: usize,
    pub bias_offset: usize,
    pub bias_len: usize,
    /// Inputs feeding one output unit (dense: input length; conv:
    /// in_channels * kernel). Used for initialization scaling.
    pub fan_in: usize,
}

/// All trainable values of a network, flattened in layer order
/// (weights row-major, then biases, per layer).
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub data: Vec<f64>,
    pub blocks: Vec<ParamBlock>,
}

impl Parameters {
    /// Builds the layout for `spec` with all values zero.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self> {
        let shapes = spec.propagate_shapes()?;
        let mut blocks = Vec::new();
        let mut offset = 0usize;
        for (i, layer) in spec.layers.iter().enumerate() {
            let (in_c, in_l) = shapes[i];
            match *layer {
                LayerSpec::Dense { units } => {
                    let weight_len = units * in_l;
                    blocks.push(ParamBlock {
                        layer: i,
                        weight_offset: offset,
                        weight_len,
                        bias_offset: offset + weight_len,
                        bias_len: units,
                        fan_in: in_l,
                    });
                    offset += weight_len + units;
                }
                LayerSpec::Conv1d { filters, kernel, .. } => {
                    let weight_len = filters * in_c * kernel;
                    blocks.push(ParamBlock {
                        layer: i,
                        weight_offset: offset,
                        weight_len,
                        bias_offset: offset + weight_len,
                        bias_len: filters,
                        fan_in: in_c * kernel,
                    });
                    offset += weight_len + filters;
                }
                _ => {}
            }
        }
        Ok(Parameters { data: vec![0.0; offset], blocks })
    }

    /// He-style scaled uniform initialization for ReLU stacks: weights
    /// uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)] drawn from one
    /// seeded stream in layout order, biases zero.
    pub fn init_he_uniform(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let mut params = Parameters::zeros(spec)?;
        let mut rng = Rng::new(seed);
        for block in params.blocks.clone() {
            let limit = (6.0 / block.fan_in as f64).sqrt();
            for w in
                &mut params.data[block.weight_offset..block.weight_offset + block.weight_len]
            {
                *w = rng.next_range(-limit, limit);
            }
        }
        Ok(params)
    }

    pub fn zeros_like(&self) -> Self {
        Parameters { data: vec![0.0; self.data.len()], blocks: self.blocks.clone() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Block for the i-th trainable layer (not the i-th layer overall).
    pub fn block(&self, trainable_index: usize) -> &ParamBlock {
        &self.blocks[trainable_index]
    }

    pub fn weights(&self, block: &ParamBlock) -> &[f64] {
        &self.data[block.weight_offset..block.weight_offset + block.weight_len]
    }

    pub fn biases(&self, block: &ParamBlock) -> &[f64] {
        &self.data[block.bias_offset..block.bias_offset + block.bias_len]
    }

    pub fn add_assign(&mut self, other: &Parameters) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

// ── Activations ──────────────────────────────────────────────────────

/// Elementwise max(0, x).
pub fn relu_forward(input: &Tensor1) -> Tensor1 {
    Tensor1 {
        channels: input.channels,
        length: input.length,
        values: input.values.iter().map(|&x| x.max(0.0)).collect(),
    }
}

/// Logistic sigmoid 1 / (1 + e^-x). Provided as a utility; none of the
/// built-in architectures use it.
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Hyperbolic tangent as 2 / (1 + e^-2x) - 1. Utility only.
pub fn tanh(x: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * x).exp()) - 1.0
}

// ── Layer forward passes ─────────────────────────────────────────────

/// Dense pre-activation: out_j = b_j + sum_i w[j * n + i] * in_i.
/// Weights are row-major (one row per output unit).
pub fn dense_forward(input: &Tensor1, weights: &[f64], biases: &[f64]) -> Result<Tensor1> {
    if input.channels != 1 {
        return Err(Error::shape(format!(
            "dense expects a flat input, got {} channels",
            input.channels
        )));
    }
    let n = input.length;
    let units = biases.len();
    if weights.len() != units * n {
        return Err(Error::shape(format!(
            "dense weights: expected {} values ({units} x {n}), got {}",
            units * n,
            weights.len()
        )));
    }
    let mut out = vec![0.0; units];
    for (j, o) in out.iter_mut().enumerate() {
        let row = &weights[j * n..(j + 1) * n];
        let mut acc = biases[j];
        for (w, x) in row.iter().zip(&input.values) {
            acc += w * x;
        }
        *o = acc;
    }
    Tensor1::new(1, units, out)
}

/// 1-D convolution, stride 1. `kernels` is flat (filters, in_channels,
/// kernel) row-major. With `Padding::Same` the input is zero-padded so
/// the output keeps the input length.
pub fn conv1d_forward(
    input: &Tensor1,
    kernels: &[f64],
    filters: usize,
    kernel: usize,
    biases: &[f64],
    padding: Padding,
) -> Result<Tensor1> {
    let in_c = input.channels;
    let l = input.length;
    if kernels.len() != filters * in_c * kernel {
        return Err(Error::shape(format!(
            "conv kernels: expected {} values ({filters} x {in_c} x {kernel}), got {}",
            filters * in_c * kernel,
            kernels.len()
        )));
    }
    if biases.len() != filters {
        return Err(Error::shape(format!(
            "conv biases: expected {filters}, got {}",
            biases.len()
        )));
    }
    if padding == Padding::Same && kernel % 2 == 0 {
        return Err(Error::shape(format!("same padding needs an odd kernel, got {kernel}")));
    }
    let (out_len, pad) = match padding {
        Padding::Same => (l, kernel / 2),
        Padding::None => {
            if l < kernel {
                return Err(Error::shape(format!(
                    "input length {l} shorter than kernel {kernel}"
                )));
            }
            (l - kernel + 1, 0)
        }
    };

    let mut out = Tensor1::zeros(filters, out_len);
    for o in 0..filters {
        let out_row = &mut out.values[o * out_len..(o + 1) * out_len];
        for x in out_row.iter_mut() {
            *x = biases[o];
        }
        for ic in 0..in_c {
            let in_row = input.channel(ic);
            for k in 0..kernel {
                let w = kernels[(o * in_c + ic) * kernel + k];
                // out[x] += w * in[x + k - pad] over the in-bounds window
                let x_lo = pad.saturating_sub(k);
                let x_hi = out_len.min(l + pad - k);
                for x in x_lo..x_hi {
                    out_row[x] += w * in_row[x + k - pad];
                }
            }
        }
    }
    Ok(out)
}

/// Max-pooling over non-overlapping windows, truncating a remainder.
pub fn maxpool1d_forward(input: &Tensor1, window: usize) -> Result<Tensor1> {
    maxpool1d_with_argmax(input, window).map(|(t, _)| t)
}

/// Max-pooling that also reports the flat input index of each selected
/// maximum (first index on ties), for gradient routing.
fn maxpool1d_with_argmax(input: &Tensor1, window: usize) -> Result<(Tensor1, Vec<usize>)> {
    if window == 0 {
        return Err(Error::shape("pool window must be >= 1".to_string()));
    }
    if input.length < window {
        return Err(Error::shape(format!(
            "input length {} shorter than pool window {window}",
            input.length
        )));
    }
    let out_len = input.length / window;
    let mut out = Tensor1::zeros(input.channels, out_len);
    let mut argmax = vec![0usize; input.channels * out_len];
    for c in 0..input.channels {
        let in_row = input.channel(c);
        for j in 0..out_len {
            let start = j * window;
            let mut best = in_row[start];
            let mut best_idx = start;
            for (off, &v) in in_row[start..start + window].iter().enumerate() {
                if v > best {
                    best = v;
                    best_idx = start + off;
                }
            }
            out.values[c * out_len + j] = best;
            argmax[c * out_len + j] = c * input.length + best_idx;
        }
    }
    Ok((out, argmax))
}

// ── Loss ─────────────────────────────────────────────────────────────

/// Softmax cross-entropy with max-subtraction.
///
/// Returns the loss `-log softmax(logits)[label]` and its gradient with
/// respect to the logits, `softmax - onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if logits.len() < 2 {
        return Err(Error::shape("need at least 2 logits".to_string()));
    }
    if label >= logits.len() {
        return Err(Error::shape(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut grad: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = grad.iter().sum();
    let loss = z.ln() - (logits[label] - max);
    for g in &mut grad {
        *g /= z;
    }
    grad[label] -= 1.0;
    Ok((loss, grad))
}

// ── Whole-network forward / backward ─────────────────────────────────

struct Trace {
    /// activations[0] is the input; activations[i + 1] is layer i's output.
    activations: Vec<Tensor1>,
    /// Flat argmax indices for each max-pool layer, keyed by layer index.
    pool_argmax: Vec<Option<Vec<usize>>>,
}

fn forward_trace(spec: &NetworkSpec, params: &Parameters, input: &[f64]) -> Result<Trace> {
    if input.len() != spec.input_length {
        return Err(Error::shape(format!(
            "input has {} samples, spec expects {}",
            input.len(),
            spec.input_length
        )));
    }
    let mut activations = Vec::with_capacity(spec.layers.len() + 1);
    let mut pool_argmax = vec![None; spec.layers.len()];
    activations.push(Tensor1::from_samples(input));
    let mut trainable = 0usize;
    for (i, layer) in spec.layers.iter().enumerate() {
        let current = activations.last().unwrap();
        let next = match *layer {
            LayerSpec::Dense { .. } => {
                let block = params.block(trainable);
                trainable += 1;
                dense_forward(current, params.weights(block), params.biases(block))?
            }
            LayerSpec::Conv1d { filters, kernel, padding, .. } => {
                let block = params.block(trainable);
                trainable += 1;
                conv1d_forward(
                    current,
                    params.weights(block),
                    filters,
                    kernel,
                    params.biases(block),
                    padding,
                )?
            }
            LayerSpec::MaxPool1d { window } => {
                let (out, argmax) = maxpool1d_with_argmax(current, window)?;
                pool_argmax[i] = Some(argmax);
                out
            }
            LayerSpec::Relu => relu_forward(current),
            LayerSpec::Flatten => {
                let mut t = current.clone();
                t.length = t.channels * t.length;
                t.channels = 1;
                t
            }
        };
        activations.push(next);
    }
    Ok(Trace { activations, pool_argmax })
}

/// Runs the network and returns the raw logits.
pub fn forward(spec: &NetworkSpec, params: &Parameters, input: &[f64]) -> Result<Vec<f64>> {
    let trace = forward_trace(spec, params, input)?;
    Ok(trace.activations.last().unwrap().values.clone())
}

/// Loss and exact gradients for one labeled sample, plus the argmax
/// prediction observed on the way (ties to the lowest index).
pub(crate) fn backward_with_prediction(
    spec: &NetworkSpec,
    params: &Parameters,
    input: &[f64],
    label: usize,
) -> Result<(f64, Parameters, usize)> {
    let trace = forward_trace(spec, params, input)?;
    let logits = &trace.activations.last().unwrap().values;
    let (loss, dlogits) = softmax_cross_entropy(logits, label)?;
    let predicted = argmax(logits);

    let mut grads = params.zeros_like();
    let mut trainable_of_layer: Vec<Option<usize>> = vec![None; spec.layers.len()];
    for (t, block) in params.blocks.iter().enumerate() {
        trainable_of_layer[block.layer] = Some(t);
    }

    let last = trace.activations.last().unwrap();
    let mut d_out = Tensor1::new(last.channels, last.length, dlogits)?;

    for (i, layer) in spec.layers.iter().enumerate().rev() {
        let input_t = &trace.activations[i];
        d_out = match *layer {
            LayerSpec::Dense { units } => {
                let block = params.block(trainable_of_layer[i].unwrap());
                let n = input_t.length;
                let weights = params.weights(block);
                let mut d_in = Tensor1::zeros(1, n);
                {
                    let gw = &mut grads.data
                        [block.weight_offset..block.weight_offset + block.weight_len];
                    for j in 0..units {
                        let g = d_out.values[j];
                        let row = &mut gw[j * n..(j + 1) * n];
                        for (r, x) in row.iter_mut().zip(&input_t.values) {
                            *r += g * x;
                        }
                        let w_row = &weights[j * n..(j + 1) * n];
                        for (di, w) in d_in.values.iter_mut().zip(w_row) {
                            *di += w * g;
                        }
                    }
                }
                for (j, gb) in grads.data
                    [block.bias_offset..block.bias_offset + block.bias_len]
                    .iter_mut()
                    .enumerate()
                {
                    *gb += d_out.values[j];
                }
                d_in
            }
            LayerSpec::Conv1d { filters, kernel, padding, .. } => {
                let block = params.block(trainable_of_layer[i].unwrap());
                let in_c = input_t.channels;
                let l = input_t.length;
                let out_len = d_out.length;
                let pad = if padding == Padding::Same { kernel / 2 } else { 0 };
                let weights = params.weights(block);
                let mut d_in = Tensor1::zeros(in_c, l);
                for o in 0..filters {
                    let d_row = d_out.channel(o);
                    grads.data[block.bias_offset + o] += d_row.iter().sum::<f64>();
                    for ic in 0..in_c {
                        let in_row = input_t.channel(ic);
                        let d_in_row =
                            &mut d_in.values[ic * l..(ic + 1) * l];
                        for k in 0..kernel {
                            let x_lo = pad.saturating_sub(k);
                            let x_hi = out_len.min(l + pad - k);
                            let mut gw = 0.0;
                            for x in x_lo..x_hi {
                                gw += d_row[x] * in_row[x + k - pad];
                            }
                            grads.data[block.weight_offset + (o * in_c + ic) * kernel + k] += gw;
                            let w = weights[(o * in_c + ic) * kernel + k];
                            for x in x_lo..x_hi {
                                d_in_row[x + k - pad] += w * d_row[x];
                            }
                        }
                    }
                }
                d_in
            }
            LayerSpec::MaxPool1d { .. } => {
                let argmax = trace.pool_argmax[i].as_ref().unwrap();
                let mut d_in = Tensor1::zeros(input_t.channels, input_t.length);
                for (j, &src) in argmax.iter().enumerate() {
                    d_in.values[src] += d_out.values[j];
                }
                d_in
            }
            LayerSpec::Relu => {
                let mut d_in = d_out;
                for (d, &x) in d_in.values.iter_mut().zip(&input_t.values) {
                    if x <= 0.0 {
                        *d = 0.0;
                    }
                }
                d_in.channels = input_t.channels;
                d_in.length = input_t.length;
                d_in
            }
            LayerSpec::Flatten => {
                let mut d_in = d_out;
                d_in.channels = input_t.channels;
                d_in.length = input_t.length;
                d_in
            }
        };
    }
    Ok((loss, grads, predicted))
}

/// Loss and exact gradients of the softmax cross-entropy for one
/// labeled sample.
pub fn backward(
    spec: &NetworkSpec,
    params: &Parameters,
    input: &[f64],
    label: usize,
) -> Result<(f64, Parameters)> {
    backward_with_prediction(spec, params, input, label).map(|(l, g, _)| (l, g))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
