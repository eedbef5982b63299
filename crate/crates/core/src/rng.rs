//! Seed derivation for reproducible, independent random streams.
//!
//! Every trial in the harness gets its own generator keyed by
//! `(base_seed, cell, trial)`, so trials can run in any order or in parallel
//! and still produce bit-identical data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with two stream indices into a new 64-bit seed.
pub fn derive_seed(base: u64, cell: u64, trial: u64) -> u64 {
    let h = splitmix64(base);
    let h = splitmix64(h ^ cell.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(h ^ trial.wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}
