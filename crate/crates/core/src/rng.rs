//! Seeded random streams.
//!
//! Every draw comes from a ChaCha8 generator seeded with a 64-bit value.
//! Ensemble member `i` of a run with master seed `s` uses the seed
//! [`derive_seed`]`(s, i)`: the SplitMix64 output function applied to
//! `s + (i + 1)·0x9E3779B97F4A7C15`. Members are therefore reproducible on their
//! own and an ensemble can be split across threads in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 mix of `(master, index)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[0, 1)`.
pub fn unit_interval(rng: &mut impl Rng) -> f64 {
    rng.gen::<f64>()
}
