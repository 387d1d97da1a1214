//! Seed derivation for independent, reproducible random streams.
//!
//! Every randomized component (matrix draws, data draws, train/test splits,
//! Monte Carlo sample chunks, votes) derives its own 64-bit seed from a base
//! seed, a stream tag, and an index, then runs a `ChaCha8Rng` on it. Streams
//! with distinct (tag, index) pairs are statistically independent, and the
//! mapping is pure, so any sub-stream can be reproduced without replaying the
//! others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Values are arbitrary but fixed; changing them changes every
/// derived stream.
pub mod tag {
    pub const MATRIX: u64 = 0x4d41_5452;
    pub const DATA: u64 = 0x4441_5441;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const SVM: u64 = 0x5356_4d00;
    pub const VOTE: u64 = 0x564f_5445;
    pub const RUN: u64 = 0x5255_4e00;
    pub const CHUNK: u64 = 0x4348_4e4b;
    pub const VECTOR: u64 = 0x5645_4354;
    pub const PAIR: u64 = 0x5041_4952;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the seed of sub-stream (`tag`, `index`) from `base`.
pub fn derive(base: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(tag)) ^ index)
}

/// ChaCha8 stream seeded with `derive(base, tag, index)`.
pub fn stream(base: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(base, tag, index))
}
