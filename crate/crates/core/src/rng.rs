//! Named, counter-based random substreams.
//!
//! Every consumer of randomness derives its own ChaCha stream from the master
//! seed, a stream name and up to two integer coordinates. Two substreams never
//! share state, so the values a consumer sees do not depend on the order in
//! which other consumers run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// FNV-1a over the bytes of `s`.
pub fn fnv1a(s: &str) -> u64 {
    fnv1a_bytes(s.as_bytes())
}

pub fn fnv1a_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Key for one substream: `(master seed, stream name, a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub name: u64,
    pub a: u64,
    pub b: u64,
}

impl StreamKey {
    pub fn new(seed: u64, name: &str) -> Self {
        Self {
            seed,
            name: fnv1a(name),
            a: 0,
            b: 0,
        }
    }

    pub fn with(mut self, a: u64, b: u64) -> Self {
        self.a = a;
        self.b = b;
        self
    }

    pub fn rng(&self) -> SimRng {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.name.to_le_bytes());
        seed[16..24].copy_from_slice(&self.a.to_le_bytes());
        seed[24..32].copy_from_slice(&self.b.to_le_bytes());
        ChaCha8Rng::from_seed(seed)
    }
}

/// Shorthand for `StreamKey::new(seed, name).with(a, b).rng()`.
pub fn substream(seed: u64, name: &str, a: u64, b: u64) -> SimRng {
    StreamKey::new(seed, name).with(a, b).rng()
}
