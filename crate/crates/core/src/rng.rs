//! Deterministic RNG stream derivation.
//!
//! Every random draw in a trial comes from a stream keyed by
//! (base seed, trial index, slot). Two runs with the same key see the same
//! stream regardless of what other slots or trials consumed, which is what
//! makes common-random-number strategy comparisons and parallel execution
//! reproducible.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

// Domain tags keep the per-slot, per-trial, and generator streams disjoint
// even when their numeric keys coincide.
const TAG_SLOT: u64 = 0x51;
const TAG_TRIAL: u64 = 0x72;
const TAG_INIT: u64 = 0x19;
const TAG_GRAPH: u64 = 0x6a;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(seed: u64, tag: u64, a: u64, b: u64) -> u64 {
    let mut s = splitmix64(seed);
    s = splitmix64(s ^ tag);
    s = splitmix64(s ^ a);
    splitmix64(s ^ b)
}

/// Stream driving slot `slot` of trial `trial`: node selection first, then
/// the flip uniform, then any opinion-sampling draws.
pub fn slot_rng(base_seed: u64, trial: u64, slot: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(mix(base_seed, TAG_SLOT, trial, slot))
}

/// Stream for trial-level draws made once before the slot loop (e.g. the
/// conditioned hub slot).
pub fn trial_rng(base_seed: u64, trial: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(mix(base_seed, TAG_TRIAL, trial, 0))
}

/// Stream for drawing a trial's initial opinion assignment.
pub fn init_rng(seed: u64, trial: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(mix(seed, TAG_INIT, trial, 0))
}

/// Stream for random graph construction.
pub fn graph_rng(seed: u64) -> Pcg64Mcg {
    Pcg64Mcg::seed_from_u64(mix(seed, TAG_GRAPH, 0, 0))
}
