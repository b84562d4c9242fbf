//! Hierarchical seed derivation.
//!
//! Every stochastic routine takes a `u64` seed. Sub-tasks (Monte Carlo shards,
//! per-`(n, k)` context draws, per-run repetitions) derive their own seeds from
//! the master seed and a path of task indices, so results never depend on the
//! order in which threads pick up work.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Builds a generator from a seed.
pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of a sub-task from a master seed and a task path.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

/// Domain tags for the top-level stochastic subsystems.
pub mod stream {
    pub const CONTEXTS: u64 = 1;
    pub const SAMPLING: u64 = 2;
    pub const MKC: u64 = 3;
    pub const THEOREM3: u64 = 4;
    pub const PERTURBATION: u64 = 5;
    pub const DISCRIMINATION: u64 = 6;
    pub const PREPARATIONS: u64 = 7;
}
