//! Seed derivation. Every random draw in the crate comes from a ChaCha
//! stream keyed by a master seed and a tuple of labels, so results never
//! depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a master seed with a list of labels into a new seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l)))
}

pub fn derived_rng(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels))
}

/// Stable small integer tags for the different consumers of randomness.
pub mod stream {
    pub const NODE_STEP: u64 = 1;
    pub const ADVERSARY: u64 = 2;
    pub const SKELETON: u64 = 3;
    pub const SOURCES: u64 = 4;
    pub const TOKENS: u64 = 5;
    pub const DECOMPOSITION: u64 = 6;
    pub const ALGORITHM: u64 = 7;
    pub const INSTANCE: u64 = 8;
}
