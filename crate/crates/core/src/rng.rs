//! Seed derivation. Every random stream in the crate is a `ChaCha8Rng` seeded
//! from a master seed mixed with a tuple of counters, so results never depend
//! on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `seed` with a sequence of stream labels into a new seed.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(seed), |acc, &l| splitmix64(acc ^ splitmix64(l.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng_from(seed: u64, labels: &[u64]) -> Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels))
}
