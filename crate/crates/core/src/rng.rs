//! Seeded random streams.
//!
//! Every generator in the crate draws from ChaCha8 (`rand_chacha`), seeded
//! through `SeedableRng::seed_from_u64`. Independent sub-streams are derived
//! from a parent seed with the SplitMix64 finalizer so that, for example, the
//! rotation sequence and the perspective trials of a plan never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SpaceRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SpaceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn derived_rng(seed: u64, stream: u64) -> SpaceRng {
    rng_from_seed(derive_seed(seed, stream))
}
