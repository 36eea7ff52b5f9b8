//! Seed plumbing.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! 64-bit seed and a [`Stream`] id. The seed selects the key; the stream id
//! selects one of the 2^64 independent ChaCha streams under that key, so the
//! data noise and the splitting noise of one replicate never overlap.
//!
//! Sweep drivers derive the per-replicate seed with [`derive_seed`], which
//! chains the SplitMix64 finalizer [`mix64`] over `(base, cell, replicate)`.
//! Normal variates use the ziggurat sampler of `rand_distr::StandardNormal`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent sub-streams used by the pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Gaussian noise of the data model.
    Noise = 0,
    /// Draws of (θ, z) from the planted prior.
    Prior = 1,
    /// Extra noise used by sample splitting.
    Split = 2,
    /// Bernoulli coins of randomized tests.
    Coin = 3,
    /// Pair draws of the low-degree Monte-Carlo estimator.
    LowDegree = 4,
    /// Labels produced by randomized baseline labelers.
    Labeler = 5,
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of replicate `replicate` in grid cell `cell` of a sweep with base seed `base`.
pub fn derive_seed(base: u64, cell: u64, replicate: u64) -> u64 {
    mix64(mix64(mix64(base) ^ cell) ^ replicate)
}

/// The generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Source of i.i.d. standard normal variates.
///
/// Implemented for every RNG, and for [`ZeroNoise`], which the tests use to
/// switch the noise off without touching the code paths under test.
pub trait GaussianSource {
    fn standard_normal(&mut self) -> f64;

    fn fill_standard_normal(&mut self, buf: &mut [f64]) {
        for x in buf {
            *x = self.standard_normal();
        }
    }
}

impl<R: RngCore> GaussianSource for R {
    fn standard_normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

/// A Gaussian source that always returns 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl GaussianSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

/// Uniform draw from {−1, +1}.
pub fn rademacher<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}
