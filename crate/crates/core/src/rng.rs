//! Seed and stream derivation.
//!
//! Every replication `r` of a run seeded with `master` owns a ChaCha8 generator
//! keyed by `splitmix64(master ^ splitmix64(r + 1))`. Each stochastic
//! ingredient reads its own ChaCha stream of that key, so the factor noise,
//! the asset noise, the thinning uniforms and the claim marks are mutually
//! independent and do not shift when another ingredient draws more numbers.
//! Results therefore depend only on `(master, r)`, never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Factor = 1,
    Asset = 2,
    Arrivals = 3,
    Marks = 4,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Key of replication `rep` under `master`.
pub fn replication_key(master: u64, rep: u64) -> u64 {
    splitmix64(master ^ splitmix64(rep.wrapping_add(1)))
}

pub fn stream_rng(master: u64, rep: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(replication_key(master, rep));
    rng.set_stream(stream as u64);
    rng
}

/// Seed for the `index`-th independent sub-run (sweep point, lattice column).
pub fn derived_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.rotate_left(17) ^ splitmix64(index ^ 0xA5A5_A5A5_5A5A_5A5A))
}
