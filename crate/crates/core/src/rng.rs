//! Deterministic seeding. Every random quantity in the crate is drawn from a
//! ChaCha stream keyed by a 64-bit seed; independent streams are derived from
//! a master seed by mixing in a stream tag and an index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `index` of kind `stream` from `master`.
pub fn sub_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream)).wrapping_add(index))
}

/// Stream tags used across the crate so that unrelated consumers of the same
/// master seed never share draws.
pub mod stream {
    pub const NETWORK: u64 = 1;
    pub const RESAMPLE: u64 = 2;
    pub const CSSCA: u64 = 3;
    pub const VALIDATION: u64 = 4;
    pub const MONTE_CARLO: u64 = 5;
    pub const REPLICATION: u64 = 6;
    pub const TRACE: u64 = 7;
    pub const UMAX: u64 = 8;
}
