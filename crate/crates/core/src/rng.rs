//! Reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_id)`. The underlying
//! generator is ChaCha20 keyed by `master_seed` (expanded with
//! `SeedableRng::seed_from_u64`) with its 64-bit stream selector set to
//! `stream_id`, so every stream is an independent counter-mode sequence and
//! can be regenerated without touching any other stream.
//!
//! Uniforms take the top 53 bits of a `u64` draw `k` and return
//! `(k + 0.5) / 2^53`, which lies strictly inside `(0, 1)`.
//!
//! Standard normals use the Box-Muller transform on two consecutive uniforms
//! `u1, u2`: `r = sqrt(-2 ln u1)`, `z0 = r cos(2 pi u2)`, `z1 = r sin(2 pi u2)`.
//! `z0` is returned first and `z1` is kept for the next call.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        RngStream {
            master_seed,
            stream_id,
            inner,
            spare: None,
        }
    }

    /// Child stream sharing this stream's master seed.
    pub fn derive(&self, stream_id: u64) -> Self {
        RngStream::new(self.master_seed, stream_id)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        let k = self.inner.next_u64() >> 11;
        (k as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Uniform draw in `[lo, hi]`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// `dim` i.i.d. draws from `N(0, std^2)`.
    pub fn normal_vec(&mut self, dim: usize, std: f64) -> Vec<f64> {
        (0..dim).map(|_| std * self.standard_normal()).collect()
    }
}

/// `count` independent standard normal vectors of length `dim`.
///
/// Panics if `dim` or `count` is zero.
pub fn sample_gaussian(rng: &mut RngStream, dim: usize, count: usize) -> Vec<Tensor> {
    assert!(dim >= 1 && count >= 1, "dim and count must be positive");
    (0..count)
        .map(|_| Tensor::from_parts_unchecked(vec![dim], rng.normal_vec(dim, 1.0)))
        .collect()
}
