//! Deterministic per-record seeding.
//!
//! A record's seed depends only on `(master_seed, record_index)`, so a record
//! can be regenerated alone, in any order, on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for record `record_index` of a run seeded with `master_seed`.
///
/// This is element `record_index + 1` of the SplitMix64 stream started at
/// `master_seed`. For a fixed master seed the map is injective over all
/// indices, since both the gamma step (odd multiplier) and the finalizer are
/// bijections. The construction is part of the dataset format: changing it
/// changes every generated record.
pub fn derive_seed(master_seed: u64, record_index: u64) -> u64 {
    mix64(master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(record_index.wrapping_add(1))))
}

/// Where a record's randomness comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedPath {
    pub master_seed: u64,
    pub record_index: u64,
}

impl SeedPath {
    pub fn new(master_seed: u64, record_index: u64) -> Self {
        Self {
            master_seed,
            record_index,
        }
    }

    pub fn seed(&self) -> u64 {
        derive_seed(self.master_seed, self.record_index)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed())
    }
}

/// Sub-stream of a record seed for an independent purpose (placement,
/// texture dithering, gusts, ...). `salt` values are fixed per purpose.
pub fn substream(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(salt.wrapping_add(GOLDEN_GAMMA))))
}
