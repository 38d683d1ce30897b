//! Deterministic random substreams.
//!
//! A master seed is expanded into a tree of independent ChaCha8 streams.
//! Each node is addressed by a path of tags (purpose, trial index, ...), so
//! the numbers a trial sees never depend on which thread ran it or in which
//! order trials were scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes used across the crate.
pub mod purpose {
    pub const SIMPLIFIED: u64 = 0x5349_4d50;
    pub const FULL: u64 = 0x4655_4c4c;
    pub const ORACLE: u64 = 0x4f52_4143;
    pub const ESTIMATOR_STATS: u64 = 0x4553_5441;
    pub const PROPERTIES: u64 = 0x5052_4f50;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A node in the substream tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn from_seed(seed: u64) -> Self {
        Self(splitmix64(seed))
    }

    /// Child stream for `tag`; distinct tags give unrelated keys.
    pub fn child(self, tag: u64) -> Self {
        Self(splitmix64(self.0 ^ splitmix64(tag.wrapping_add(0x632b_e59b_d9b4_e019))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
