//! Seeded random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream whose key is a
//! hash of a root seed and a path of integers (family, cell, replicate, ...).
//! Streams therefore never depend on scheduling or on the order of calls.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `seed` and `path` into a new 64-bit seed.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for (depth, &p) in path.iter().enumerate() {
        h = splitmix64(h ^ splitmix64(p.wrapping_add((depth as u64 + 1).wrapping_mul(GOLDEN))));
    }
    h
}

/// Random stream for `(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> StreamRng {
    let mut key = [0u8; 32];
    let mut h = derive(seed, path);
    for chunk in key.chunks_exact_mut(8) {
        h = splitmix64(h);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
