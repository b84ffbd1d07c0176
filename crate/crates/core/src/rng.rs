//! Reproducible random streams for Monte-Carlo trajectories.
//!
//! Stream contract `splitmix-chacha8/v1`: trajectory `i` of an ensemble with master seed
//! `s` draws from `ChaCha8Rng::seed_from_u64(mix(s, i))`, where `mix` is the SplitMix64
//! finalizer applied to `s ⊕ (i+1)·0x9E3779B97F4A7C15`. Uniform doubles come from
//! `rand`'s standard 53-bit conversion. Both are platform independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_VERSION: &str = "splitmix-chacha8/v1";

pub type TrajectoryRng = ChaCha8Rng;

/// SplitMix64 avalanche finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn stream(master_seed: u64, index: u64) -> TrajectoryRng {
    ChaCha8Rng::seed_from_u64(mix(master_seed, index))
}
