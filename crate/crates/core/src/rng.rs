//! Seeded random streams.
//!
//! Every consumer gets its own SplitMix64 stream derived from the run seed and
//! a tag path (purpose, epoch, video id, ...), so the values a video sees do
//! not depend on the order other videos are processed in.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

pub type Prng = SplitMix64;

pub mod tag {
    pub const INIT: u64 = 0x494e_4954;
    pub const SHUFFLE: u64 = 0x5348_5546;
    pub const VIDEO: u64 = 0x5649_4445;
    pub const BACKBONE: u64 = 0x4241_434b;
    pub const GENERATE: u64 = 0x4745_4e45;
    pub const WINDOW: u64 = 0x5749_4e44;
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed` with the SplitMix64 finalizer.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed), |acc, &p| {
        mix(acc ^ p.wrapping_add(0x9e37_79b9_7f4a_7c15))
    })
}

pub fn stream(seed: u64, parts: &[u64]) -> Prng {
    Prng::seed_from_u64(derive_seed(seed, parts))
}
