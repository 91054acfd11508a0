//! Derivation of independent, reproducible random streams.
//!
//! Every stochastic decision in a run draws from a stream keyed by the
//! global seed plus a small tuple of tags (generation, individual index,
//! evaluation counter, ...). Streams never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a sequence of tags into a single 64-bit key.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(seed), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

/// A fresh generator for the stream identified by `(seed, tags)`.
pub fn stream(seed: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, tags))
}

/// Stream domains, used as the first tag so that streams of different
/// purposes never collide.
pub mod domain {
    pub const BODY_INIT: u64 = 1;
    pub const THETA_INIT: u64 = 2;
    pub const OFFSPRING: u64 = 3;
    pub const LEARNER: u64 = 4;
    pub const EPISODE: u64 = 5;
    pub const STRATEGY: u64 = 6;
    pub const RELEARN: u64 = 7;
    pub const CURVE: u64 = 8;
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(7, &[1, 2]).random();
        let b: u64 = stream(7, &[1, 2]).random();
        let c: u64 = stream(7, &[2, 1]).random();
        let d: u64 = stream(8, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
