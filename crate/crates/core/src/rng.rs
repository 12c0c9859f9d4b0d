//! Seed derivation for reproducible, platform-independent randomness.
//!
//! Every random object in the crate draws from a ChaCha8 stream. Derived
//! seeds come from [`split`], the SplitMix64 finaliser applied to
//! `seed + (index + 1) * 0x9E3779B97F4A7C15` (wrapping). Coalescing
//! simulations further give each particle its own ChaCha stream id so a
//! particle's trajectory never depends on how many other particles are alive.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derives the `index`-th child seed of `seed`.
pub fn split(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
