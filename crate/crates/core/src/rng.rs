//! Deterministic stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream keyed by
//! `(seed, replicate, class, purpose)` through the fixed mixing below.
//! Distinct tuples give distinct keys, so distance classes, the vertex
//! mask, and the tie-break stream can be consumed independently and in
//! parallel without perturbing each other.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Stream purposes. The values are part of the reproducibility contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Edge presence draws for one distance class.
    Edges = 0,
    /// The per-vertex open/closed mask of the mixed model.
    Mask = 1,
    /// Uniform tie-break among maximal clusters.
    TieBreak = 2,
    /// Experiment-level draws (random digit states and the like).
    Experiment = 3,
}

/// SplitMix64 finalizer; used to decorrelate the key words.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive the ChaCha stream for `(seed, replicate, class, purpose)`.
pub fn stream(seed: u64, replicate: u64, class: u64, purpose: Purpose) -> ChaCha12Rng {
    let words = [
        splitmix64(seed),
        splitmix64(seed ^ splitmix64(replicate)),
        splitmix64(replicate ^ splitmix64(class)),
        splitmix64(class ^ splitmix64(purpose as u64) ^ seed.rotate_left(32)),
    ];
    let mut key = [0u8; 32];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Seed for one report row, derived from the experiment master seed.
pub fn row_seed(master_seed: u64, row_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(row_index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}
