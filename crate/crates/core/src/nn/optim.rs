//! Gradient-descent update rules: plain SGD, Adam, Adagrad.
//!
//! The SGD variants (batch, stochastic, mini-batch) share the same
//! update `theta -= eta * g` and differ only in how the caller
//! assembles the gradient; the batch scope lives in the training loop's
//! `batch_size`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Parameters;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Adagrad { epsilon: f64 },
}

impl OptimizerKind {
    /// Adam with the suggested defaults beta1 = 0.9, beta2 = 0.999,
    /// epsilon = 1e-8.
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    /// Adagrad with epsilon = 1e-8.
    pub fn adagrad() -> Self {
        OptimizerKind::Adagrad { epsilon: 1e-8 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam { .. } => "adam",
            OptimizerKind::Adagrad { .. } => "adagrad",
        }
    }
}

/// Update rule plus per-parameter accumulators.
///
/// `m`/`v` hold Adam's first and second moment estimates; Adagrad keeps
/// its running sum of squared gradients in `v`; SGD uses neither.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64, param_count: usize) -> Result<Self> {
        if !(learning_rate > 0.0) {
            return Err(Error::param(format!(
                "learning rate must be > 0, got {learning_rate}"
            )));
        }
        Ok(OptimizerState {
            kind,
            learning_rate,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        })
    }

    /// Raw accumulators (Adam: first and second moments; Adagrad: the
    /// squared-gradient sum lives in the second slot).
    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }

    /// Applies one update with the configured rule.
    pub fn step(&mut self, params: &mut Parameters, grads: &Parameters) -> Result<()> {
        match self.kind {
            OptimizerKind::Sgd => sgd_step(params, grads, self),
            OptimizerKind::Adam { .. } => adam_step(params, grads, self),
            OptimizerKind::Adagrad { .. } => adagrad_step(params, grads, self),
        }
    }

    fn check_sizes(&self, params: &Parameters, grads: &Parameters) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.m.len() {
            return Err(Error::shape(format!(
                "optimizer sized for {} parameters, got params {} / grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        Ok(())
    }
}

/// theta -= eta * g.
pub fn sgd_step(params: &mut Parameters, grads: &Parameters, opt: &mut OptimizerState) -> Result<()> {
    opt.check_sizes(params, grads)?;
    opt.t += 1;
    let eta = opt.learning_rate;
    for (p, g) in params.data.iter_mut().zip(&grads.data) {
        *p -= eta * g;
    }
    Ok(())
}

/// Adam: decaying moment estimates with bias correction,
/// `theta -= eta * m_hat / sqrt(v_hat + eps)`.
pub fn adam_step(params: &mut Parameters, grads: &Parameters, opt: &mut OptimizerState) -> Result<()> {
    opt.check_sizes(params, grads)?;
    let OptimizerKind::Adam { beta1, beta2, epsilon } = opt.kind else {
        return Err(Error::param("adam_step on a non-Adam optimizer".to_string()));
    };
    opt.t += 1;
    let t = opt.t as i32;
    let m_corr = 1.0 - beta1.powi(t);
    let v_corr = 1.0 - beta2.powi(t);
    let eta = opt.learning_rate;
    for i in 0..params.data.len() {
        let g = grads.data[i];
        opt.m[i] = beta1 * opt.m[i] + (1.0 - beta1) * g;
        opt.v[i] = beta2 * opt.v[i] + (1.0 - beta2) * g * g;
        let m_hat = opt.m[i] / m_corr;
        let v_hat = opt.v[i] / v_corr;
        params.data[i] -= eta * m_hat / (v_hat + epsilon).sqrt();
    }
    Ok(())
}

/// Adagrad: per-parameter accumulated squared gradients,
/// `theta -= eta * g / sqrt(G + eps)`.
pub fn adagrad_step(
    params: &mut Parameters,
    grads: &Parameters,
    opt: &mut OptimizerState,
) -> Result<()> {
    opt.check_sizes(params, grads)?;
    let OptimizerKind::Adagrad { epsilon } = opt.kind else {
        return Err(Error::param("adagrad_step on a non-Adagrad optimizer".to_string()));
    };
    opt.t += 1;
    let eta = opt.learning_rate;
    for i in 0..params.data.len() {
        let g = grads.data[i];
        opt.v[i] += g * g;
        params.data[i] -= eta * g / (opt.v[i] + epsilon).sqrt();
    }
    Ok(())
}
