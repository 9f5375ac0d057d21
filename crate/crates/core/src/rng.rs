//! Seeded, portable random streams.
//!
//! Every generator in the crate draws from [`StreamRng`] (ChaCha8), whose
//! output is fixed across platforms and crate releases for a given seed.
//! Replicate `r` of an experiment with base seed `s` uses the stream seeded
//! by [`derive_seed`]`(s, r)`, so replicates can run on any thread in any
//! order and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` under `base_seed`:
/// `splitmix64(base_seed ^ splitmix64(replicate))`.
pub fn derive_seed(base_seed: u64, replicate: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(replicate))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
