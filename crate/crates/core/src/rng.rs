//! Counter-based uniform centers.
//!
//! The center of arc `n` in trial `t` is a pure function of `(seed, t, n)`:
//! each coordinate of the tuple is folded into a 64-bit state through the
//! SplitMix64 finalizer, and the top 53 bits of the result give a double in
//! `[0, 1)`. No generator state is carried between draws, so trials can run in
//! any order or in parallel and still replay bit-for-bit.

use crate::circle::CirclePoint;

/// Default experiment seed shipped with the tool.
pub const DEFAULT_SEED: u64 = 42;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (Stafford variant 13).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn fold(state: u64, word: u64) -> u64 {
    mix64(state ^ mix64(word.wrapping_add(GOLDEN_GAMMA)))
}

/// Key identifying one trial's stream; derive once, then draw by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        StreamKey(fold(fold(GOLDEN_GAMMA, seed), trial_index))
    }

    #[inline]
    pub fn bits(self, n: u64) -> u64 {
        fold(self.0, n)
    }

    #[inline]
    pub fn unit(self, n: u64) -> f64 {
        (self.bits(n) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    #[inline]
    pub fn center(self, n: u64) -> CirclePoint {
        CirclePoint::new(self.unit(n))
    }
}

/// Uniform center `X_n` of trial `trial_index` under `seed`.
pub fn sample_center(seed: u64, trial_index: u64, n: u64) -> CirclePoint {
    StreamKey::new(seed, trial_index).center(n)
}
