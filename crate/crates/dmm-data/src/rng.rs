//! Substream derivation: every video gets an independent RNG keyed by
//! (master seed, split id, video index) so any single video can be
//! regenerated in isolation and generation order never matters.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; a documented 64-bit mixing step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic per-video seed from (master seed, split id, index).
pub fn substream_seed(master_seed: u64, split_id: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ split_id) ^ index)
}

pub fn substream_rng(master_seed: u64, split_id: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(master_seed, split_id, index))
}
