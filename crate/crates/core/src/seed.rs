//! Deterministic seed derivation.
//!
//! Every parallel unit of work (a fold, a tree, a permutation trial, an
//! evaluation cell) gets its own RNG seeded from the master seed and its
//! coordinates, so serial and parallel runs produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used by the CLI when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `parts` into `master`. Order of `parts` matters.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Stable 64-bit hash of a string (FNV-1a), for use as a `derive` part.
pub fn tag(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn rng(master: u64, parts: &[u64]) -> Rng {
    Rng::seed_from_u64(derive(master, parts))
}
