//! Counter-based uniforms keyed by `(seed, trajectory, period)`.
//!
//! Each trajectory reads its own ChaCha8 stream; period `t` consumes the 64-bit
//! word at position `t`. Any draw can be reproduced without replaying the
//! ones before it, and trajectories never share randomness.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sequential reader over one trajectory's stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        inner.set_word_pos(0);
        Self { inner }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        to_unit(self.inner.next_u64())
    }
}

#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The uniform drawn at `period` of trajectory `stream`.
pub fn uniform_at(seed: u64, stream: u64, period: u64) -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r.set_word_pos(2 * period as u128);
    to_unit(r.next_u64())
}
