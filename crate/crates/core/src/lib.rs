//! Classification of the constant frequency of a noisy sine-wave
//! trajectory out of a known finite candidate set.
//!
//! Two estimator families are implemented from first principles and
//! benchmarked against each other:
//!
//! - [`mmae`]: a bank of two-state sine-wave Kalman filters with
//!   Bayesian model-probability updates (multiple model adaptive
//!   estimation);
//! - [`nn`] + [`train`]: small fully-connected and 1-D convolutional
//!   networks with hand-derived backpropagation, trained by SGD
//!   variants, Adam, or Adagrad.
//!
//! [`signal`] generates reproducible Monte-Carlo datasets, and
//! [`experiments`] runs the accuracy sweeps (noise level, frequency
//! resolution, signal length, architecture) that compare the two.

pub mod config;
pub mod error;
pub mod experiments;
pub mod kalman;
pub mod mmae;
pub mod nn;
pub mod rng;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
