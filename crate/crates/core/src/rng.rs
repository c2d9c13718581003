//! Counter-based random streams.
//!
//! Every consumer of randomness gets a ChaCha8 stream addressed by
//! `(seed, stream)`. Streams never overlap, so work can be split across
//! threads in any order and still see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used inside a single episode.
pub const ENV_STREAM: u64 = 0;
pub const POLICY_STREAM: u64 = 1;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `(seed, index)`. Used for per-episode seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// A ChaCha8 generator positioned on stream `stream` of key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
