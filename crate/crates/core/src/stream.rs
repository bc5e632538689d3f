//! Counter-based uniform streams.
//!
//! A draw is addressed by `(seed, stream, index)`: the ChaCha8 keystream for
//! `seed` on `stream`, positioned at word `2 * index`. Any split of an index
//! range into chunks therefore yields the same values.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Default seed used by every randomized entry point when none is given.
pub const DEFAULT_SEED: u64 = 0;

const CHUNK: usize = 4096;

/// A reproducible source of open-interval uniforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformStream {
    pub seed: u64,
    pub stream: u64,
}

impl UniformStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    fn rng_at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(2 * index as u128);
        rng
    }

    /// The single draw at `index`.
    pub fn uniform_at(&self, index: u64) -> f64 {
        to_open_unit(self.rng_at(index).next_u64())
    }

    /// Fills `out` with the draws at `start, start + 1, ...`.
    pub fn fill(&self, start: u64, out: &mut [f64]) {
        for (k, chunk) in out.chunks_mut(CHUNK).enumerate() {
            let mut rng = self.rng_at(start + (k * CHUNK) as u64);
            for slot in chunk {
                *slot = to_open_unit(rng.next_u64());
            }
        }
    }

    pub fn take(&self, start: u64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.fill(start, &mut out);
        out
    }
}

/// Maps 64 random bits to `(k + 1/2) / 2^53`, never 0 or 1.
#[inline]
fn to_open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
