//! Seed derivation for independent, order-free random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Concrete RNG used everywhere in the simulator.
pub type SimRng = ChaCha8Rng;

/// Create a deterministic RNG from a seed.
pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a path of integer labels.
///
/// Used for per-client, per-round streams so results do not depend on the
/// order in which clients are processed.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(parent), |acc, &label| mix(acc ^ mix(label)))
}

/// Stream labels keep the world-building streams apart.
pub mod stream {
    pub const TRACE_POOL: u64 = 1;
    pub const SCENARIO: u64 = 2;
    pub const PROFILES: u64 = 3;
    pub const DATASET: u64 = 4;
    pub const PARTITION: u64 = 5;
    pub const SELECTION: u64 = 6;
    pub const TRAINING: u64 = 7;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[1]), derive_seed(8, &[1]));
    }

    #[test]
    fn seeded_rng_is_deterministic() {
        let a: u64 = seeded_rng(42).random();
        let b: u64 = seeded_rng(42).random();
        assert_eq!(a, b);
    }
}
