//! Keyed random streams for path simulation.
//!
//! Every path draws from its own ChaCha8 stream: the 64-bit base seed selects
//! the key and the path index selects the stream id. Path `i` of an ensemble
//! seeded with `s` therefore sees the same bits no matter which worker runs it
//! or in what order, and `simulate_walk(params, s)` is path 0 of that ensemble.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const TWO_POW_53: f64 = 9_007_199_254_740_992.0;

#[derive(Clone, Debug)]
pub struct PathRng {
    inner: ChaCha8Rng,
}

impl PathRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / TWO_POW_53
    }
}

/// Precomputed Bernoulli(p) test on the top 53 bits of a draw.
#[derive(Clone, Copy, Debug)]
pub struct Bernoulli {
    threshold: u64,
}

impl Bernoulli {
    pub fn new(p: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p));
        Self {
            threshold: (p * TWO_POW_53) as u64,
        }
    }

    #[inline]
    pub fn sample(&self, rng: &mut PathRng) -> bool {
        (rng.next_u64() >> 11) < self.threshold
    }
}
