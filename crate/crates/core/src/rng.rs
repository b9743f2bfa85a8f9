//! The one generator used for every random draw in the crate.
//!
//! Xoshiro256** seeded from a `u64` through SplitMix64 (the `rand_xoshiro`
//! `seed_from_u64` expansion). Shuffles are Fisher–Yates via
//! `rand::seq::SliceRandom`. Changing either changes pinned partitions and
//! trained weights, so both are fixed for the life of the file formats.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

pub type SeededRng = Xoshiro256StarStar;

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}
