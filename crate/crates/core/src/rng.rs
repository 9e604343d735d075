//! Seeded uniform sampling.
//!
//! The generator is SplitMix64 with the seed as its 64-bit state. A uniform
//! draw takes the top 53 bits of the next output and scales by `2^-53`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone)]
pub struct SampleRng(SplitMix64);

impl SampleRng {
    pub fn new(seed: u64) -> Self {
        SampleRng(SplitMix64::seed_from_u64(seed))
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}
