//! Seeded random streams with labelled, order-independent substreams.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// A deterministic stream. `split` derives a child from the seed and a
/// label only, so children do not depend on how much the parent has drawn.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha20Rng,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn split(&self, label: &str) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(fnv1a(label.as_bytes()))))
    }

    /// Child stream for the `index`-th item of a labelled family.
    pub fn split_indexed(&self, label: &str, index: u64) -> Self {
        let child = self.split(label);
        Self::new(splitmix64(child.seed.wrapping_add(splitmix64(index))))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
