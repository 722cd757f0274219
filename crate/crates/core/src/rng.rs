//! Counter-based random streams.
//!
//! Every random draw is keyed by `(seed, domain, key)`, so the value used for
//! a node pair or a trial does not depend on the order in which work is
//! scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes that consume randomness from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Transforms = 1,
    Edges = 2,
    Noise = 3,
    SolverStart = 4,
    Permutation = 5,
}

/// A ChaCha8 generator positioned on its own stream.
pub fn stream(seed: u64, domain: Domain, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, domain as u64]));
    rng.set_stream(key);
    rng
}

/// Stream key of the unordered node pair `i < j`.
pub fn pair_key(i: usize, j: usize) -> u64 {
    ((i as u64) << 32) | (j as u64)
}

/// SplitMix64 finalizer folded over the words; used to derive sub-seeds.
pub fn mix(words: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &w in words {
        h ^= w;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
