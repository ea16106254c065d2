//! Seeded pseudo-randomness.
//!
//! Every random decision in the crate (splits, label masking, rebalancing,
//! synthetic data) draws from ChaCha8 seeded through
//! [`rand::SeedableRng::seed_from_u64`]. Sub-streams are derived from a base
//! seed with a SplitMix64 finalizer so that two operations sharing a base seed
//! never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `seed` and `stream` into an independent seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
