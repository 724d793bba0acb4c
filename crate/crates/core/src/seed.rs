//! Deterministic seed splitting.
//!
//! Every random stream in the crate is derived from the master seed of a
//! [`SimConfig`](crate::SimConfig) through [`derive_stream_seed`], so two runs
//! with the same configuration see identical random numbers regardless of how
//! the work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Generator used for every stream. ChaCha output is specified bit-for-bit,
/// so results do not depend on the platform.
pub type StreamRng = ChaCha12Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stream-id tags for the top-level random domains.
pub mod tags {
    pub const CHANNEL: u64 = 0x4348_414e; // "CHAN"
    pub const FRAME: u64 = 0x4652_4d45; // "FRME"
    pub const NOISE: u64 = 0x4e4f_4953; // "NOIS"
    pub const CALIBRATION: u64 = 0x4341_4c49; // "CALI"
}

/// SplitMix64 finalizer. A bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream_id` from `master_seed`.
///
/// For a fixed master seed the map `stream_id -> seed` is injective: both
/// `mix64` and the xor with a constant are bijections.
pub fn derive_stream_seed(master_seed: u64, stream_id: u64) -> u64 {
    mix64(master_seed ^ mix64(stream_id.wrapping_add(GOLDEN_GAMMA)))
}

/// Folds a path of stream ids into a single seed.
pub fn derive_path(master_seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(master_seed, |seed, &id| derive_stream_seed(seed, id))
}

pub fn stream_rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
