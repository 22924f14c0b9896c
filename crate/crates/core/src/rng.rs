//! Seeded random streams.
//!
//! Every stochastic routine takes a caller-owned `&mut R: Rng`. Batch code
//! derives one independent stream per replicate from a master seed and the
//! replicate index, so any single replicate can be rerun in isolation.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

/// The generator used throughout the crate.
pub type StreamRng = Pcg64Mcg;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    mix(mix(master) ^ mix(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

/// Independent stream for replicate `index` of a run seeded with `master`.
pub fn replicate_stream(master: u64, index: u64) -> StreamRng {
    stream(replicate_seed(master, index))
}
