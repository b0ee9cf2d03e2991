//! Seed plumbing. Every random stream in the crate is a `ChaCha8Rng` keyed by
//! a seed derived from the run's master seed, so results do not depend on
//! call order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes `(master, stream, index)` into an independent 64-bit seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) mod streams {
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const DROPOUT: u64 = 3;
    pub const GRADCHECK: u64 = 4;
    pub const REPEAT: u64 = 5;
}
