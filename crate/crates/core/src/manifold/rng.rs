//! Seeded, portable randomness for the layout optimizer.
//!
//! The generator is ChaCha8 keyed by the run seed. Stream 0 feeds the
//! initialization; epoch `e` of the sequential optimizer reads stream
//! `e + 1`; in vertex-parallel mode vertex `v` in epoch `e` reads stream
//! `(e + 1) << 32 | v`. Streams are independent, so the numbers an epoch
//! sees never depend on how many were drawn in earlier epochs.

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

pub struct LayoutRng(ChaCha8Rng);

impl LayoutRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        LayoutRng(inner)
    }

    pub fn for_init(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn for_epoch(seed: u64, epoch: usize) -> Self {
        Self::new(seed, epoch as u64 + 1)
    }

    pub fn for_vertex(seed: u64, epoch: usize, vertex: usize) -> Self {
        Self::new(seed, ((epoch as u64 + 1) << 32) | vertex as u64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform index in `0..n` by 64-bit modulo; bias is below 2^-50 for any
    /// realistic point count.
    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform in `[0, 1)` from the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}
