//! Seeded random streams.
//!
//! Every random draw in the toolkit comes from ChaCha8 keyed by a single
//! 64-bit seed. Independent consumers take distinct stream ids, so adding
//! draws to one consumer never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream id for instance `index` of consumer `tag`.
pub fn stream_id(tag: u32, index: u32) -> u64 {
    (u64::from(tag) << 32) | u64::from(index)
}
