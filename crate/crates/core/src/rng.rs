//! Seed derivation for independent, order-free random streams.
//!
//! Every stochastic quantity is drawn from a stream keyed by
//! `(master_seed, key, index)`, so serial and parallel executions see the
//! same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream keys used across the crate.
pub mod stream {
    pub const POSES: u64 = 0x706f_7365;
    pub const SHAPES: u64 = 0x7368_6170;
    pub const JITTER: u64 = 0x6a69_7474;
    pub const SELECTION: u64 = 0x7365_6c65;
    pub const NOISE: u64 = 0x6e6f_6973;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, key: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ key) ^ index)
}

pub fn stream_rng(master: u64, key: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, key, index))
}
