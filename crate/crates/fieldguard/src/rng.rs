//! Seeded random-number construction and seed derivation.
//!
//! Every stochastic element of the crate draws from a [`ChaCha8Rng`] seeded
//! through these helpers, so that any run is reproducible from a single `u64`
//! and independent sub-streams (per run, per training update, per split) can
//! be derived without correlation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a child seed from a base seed and a stream index.
///
/// Uses the splitmix64 finalizer over the base xored with the golden-ratio
/// multiple of the stream index, so that nearby `(base, stream)` pairs yield
/// statistically unrelated seeds.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Build the deterministic generator used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stable 64-bit FNV-1a hash of a string, for deriving seeds from
/// identifiers (estimator ids, preset names) platform-independently.
pub fn hash_seed(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
