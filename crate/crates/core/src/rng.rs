//! Reproducible random streams.
//!
//! Every stochastic routine takes a 64-bit seed. Work that is split across
//! items (datasets in a batch, replicates in a study, blocks of mixture
//! draws) derives one independent stream per item with
//! [`derive_seed`]`(seed, index)`, so results never depend on how the work
//! is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th sub-stream of `seed`.
///
/// `mix64(seed + GOLDEN_GAMMA * (index + 1)) ^ mix64(index)`, with wrapping
/// arithmetic. The rule is part of the public contract: batch item `i` run
/// with seed `s` gives the same result as a single run with
/// `derive_seed(s, i)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1)))) ^ mix64(index)
}

/// A ChaCha8 stream seeded from a 64-bit value.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
