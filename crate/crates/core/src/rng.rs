//! Seed derivation and counter-based uniforms.
//!
//! Every random stream is keyed by `(seed, labels…)`, so results never
//! depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// splitmix64 finaliser.
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a label into a seed.
#[inline]
pub fn mix64(seed: u64, label: u64) -> u64 {
    finalize(
        seed.wrapping_add(GOLDEN)
            .wrapping_add(finalize(label.wrapping_add(GOLDEN))),
    )
}

pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(finalize(seed), |acc, &l| mix64(acc, l))
}

/// Independent ChaCha stream for `(seed, labels…)`.
pub fn stream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels))
}

/// Maps a hash to the open interval `(0, 1)` on a grid of spacing `2^-52`.
#[inline]
pub fn open_unit(h: u64) -> f64 {
    ((h >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}
