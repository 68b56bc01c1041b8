use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a (seed, index) pair to a 64-bit word.
pub(crate) fn hash_pair(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index ^ 0xD1B5_4A32_D192_ED03))
}

/// Uniform double in [0, 1) from the top 53 bits of a hash.
pub(crate) fn unit_from_hash(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed schedule for reproducible Monte Carlo.
///
/// Sample `j` always draws from a generator seeded with `hash(master_seed, j)`,
/// so any subset of samples can be regenerated independently and parallel
/// workers never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomPlan {
    pub master_seed: u64,
}

impl RandomPlan {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    /// Seed of stream `j`.
    pub fn stream_seed(&self, j: u64) -> u64 {
        hash_pair(self.master_seed, j)
    }

    /// Generator for stream `j`.
    pub fn rng(&self, j: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.stream_seed(j))
    }

    /// Child plan for an independent purpose (bootstrap, pair sampling, ...).
    pub fn derive(&self, tag: &str) -> RandomPlan {
        let tag_hash = tag
            .bytes()
            .fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
                (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
            });
        RandomPlan::new(mix64(self.master_seed ^ mix64(tag_hash)))
    }
}
