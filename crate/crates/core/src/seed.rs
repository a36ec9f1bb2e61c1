//! Counter-based seed derivation.
//!
//! Every random stream in a run is keyed by `(master seed, stream tag, indices...)`
//! and mixed with the SplitMix64 finalizer. Streams never depend on how many
//! draws another stream consumed, so runs can execute in any order (or in
//! parallel) and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Changing any of these changes every derived seed.
pub mod stream {
    pub const RUN: u64 = 0x5255_4E00;
    pub const BOARDING: u64 = 0x424F_4152;
    pub const APC: u64 = 0x4150_4300;
    pub const MCMC: u64 = 0x4D43_4D43;
    pub const DISTORTION: u64 = 0x4449_5354;
    pub const NOISE: u64 = 0x4E4F_4953;
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `parts` into `seed`, one SplitMix64 round per part.
pub fn derive(seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for the stream identified by `parts` under `seed`.
pub fn rng(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, parts))
}
