//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a [`Stream`] addressed by a
//! root seed plus a path of integer labels, e.g. `(seed, [ENSEMBLE, b])` for
//! bootstrap replicate `b`. Streams are derived, never shared, so the draws
//! of a replicate do not depend on how many threads built the ensemble or in
//! which order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Path label for bootstrap replicate streams.
pub const ENSEMBLE: u64 = 0x454e_5345_4d42;
/// Path label for synthetic data generation.
pub const DATAGEN: u64 = 0x4441_5441_4745;
/// Path label for the train/test permutation.
pub const SPLIT: u64 = 0x0053_504c_4954;
/// Path label for EXP4 repetitions.
pub const REPETITION: u64 = 0x5245_5045_4154;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a path of labels into a single 64-bit key.
pub fn derive_key(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(seed ^ GOLDEN), |acc, &label| {
        mix64(acc.wrapping_add(GOLDEN) ^ mix64(label.wrapping_add(GOLDEN)))
    })
}

/// A value-like deterministic random stream (ChaCha8 keyed by a derived seed).
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, &[])
    }

    pub fn derive(seed: u64, path: &[u64]) -> Self {
        Stream {
            rng: ChaCha8Rng::seed_from_u64(derive_key(seed, path)),
        }
    }

    /// Uniform index in `[0, n)`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
