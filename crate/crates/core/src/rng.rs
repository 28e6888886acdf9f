//! Deterministic random number generation.
//!
//! Everything stochastic in this crate (measurement noise, dataset
//! shuffles, weight initialization) flows through this module so that
//! results are bit-reproducible from a 64-bit seed alone. The scheme is
//! fixed and documented here; regression fixtures elsewhere in the crate
//! depend on it and must not change silently:
//!
//! - Stream generator: SplitMix64. `next_u64` advances the state by the
//!   golden-ratio increment `0x9E3779B97F4A7C15` and returns the
//!   finalizer `mix64` of the new state.
//! - Uniform f64 in [0, 1): the top 53 bits of `next_u64`, scaled by
//!   2^-53.
//! - Gaussian: Box-Muller, cosine branch only. Each variate consumes
//!   exactly two uniforms `(u1, u2)` and returns
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`; the sine branch is discarded
//!   (no caching), so the k-th gaussian of a stream is a pure function
//!   of the seed and k.
//! - Seed derivation: `derive_seed(root, a, b)` chains the `mix64`
//!   finalizer: `mix64(mix64(mix64(root) ^ a) ^ b)`. Per-signal seeds in
//!   dataset generation are `derive_seed(root, class_index, signal_index)`,
//!   so datasets are reproducible independently of generation order.

use std::f64::consts::PI;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a full-avalanche 64-bit mixing function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a root seed and two indices.
#[inline]
pub fn derive_seed(root: u64, a: u64, b: u64) -> u64 {
    mix64(mix64(mix64(root) ^ a) ^ b)
}

/// Small deterministic generator (SplitMix64).
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal variate (Box-Muller, cosine branch, two uniforms
    /// per call).
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]: keeps ln finite
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Uniform integer in [0, n). Multiply-shift mapping of a 64-bit
    /// draw; the modulo bias of ~n/2^64 is negligible for the index
    /// ranges used here.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
