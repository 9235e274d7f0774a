//! Seeded random stream used for initialization, dropout masks and shuffling.
//!
//! The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`. Both
//! are fixed, portable algorithms, so a seed yields the same values on every
//! platform. Only `u64`/`u32`/`f32` draws are exposed; `usize`-based sampling
//! would differ between 32- and 64-bit targets.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Float;

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f32(&mut self) -> f32 {
        self.inner.gen::<f32>()
    }

    /// Uniform in `[lo, hi]`.
    pub fn uniform(&mut self, lo: Float, hi: Float) -> Float {
        lo + (hi - lo) * self.next_f32() as Float
    }

    /// Uniform integer in `[0, n)`; `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        self.inner.gen_range(0..n)
    }

    /// Fisher–Yates shuffle driven by `below`.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// Independent child stream, e.g. one per fold.
    pub fn fork(&mut self) -> Rng {
        Rng::new(self.next_u64())
    }
}
