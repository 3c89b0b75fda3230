//! Seed derivation and counter-based random streams.
//!
//! Every random quantity in a realization is addressed by a key derived from
//! the master seed and a purpose tag, so values can be regenerated in any
//! order and from any thread.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Purpose tags for derived streams.
pub mod tag {
    pub const ATOMS: u64 = 0xA70A_5EED;
    pub const GAUSSIAN: u64 = 0x6A05_5EED;
    pub const SMALL_JUMPS: u64 = 0x5A11_5EED;
    pub const REPLICATE: u64 = 0x8E91_5EED;
    pub const SAMPLE_POINTS: u64 = 0x9017_5EED;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN) ^ mix64(tag.wrapping_add(GOLDEN)))
}

/// Seed for replicate `id` of a run with master seed `seed`.
#[inline]
pub fn replicate_seed(seed: u64, id: u64) -> u64 {
    derive_seed(derive_seed(seed, tag::REPLICATE), id)
}

/// Key for a multi-index under a given stream key. Order of components matters.
pub fn index_key(key: u64, index: &[u32]) -> u64 {
    let mut h = mix64(key ^ (index.len() as u64).wrapping_mul(GOLDEN));
    for &k in index {
        h = mix64(h ^ (k as u64).wrapping_add(GOLDEN));
    }
    h
}

/// SplitMix64-style stream: word `n` is `mix64(key + (n + 1) * GOLDEN)`.
#[derive(Debug, Clone)]
pub struct CounterStream {
    state: u64,
}

impl CounterStream {
    pub fn new(key: u64) -> Self {
        Self { state: key }
    }
}

impl RngCore for CounterStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

/// Standard normal draw addressed by `(key, index)`.
#[inline]
pub fn indexed_normal(key: u64, index: &[u32]) -> f64 {
    let mut s = CounterStream::new(index_key(key, index));
    StandardNormal.sample(&mut s)
}

/// Sequential generator for a purpose-tagged stream.
pub fn stream_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}
