//! Deterministic per-task random streams.
//!
//! Parallel work never shares an RNG. Each task (a node, a query, one of a
//! query's independent searches) derives its own ChaCha stream from the user
//! seed and its task coordinates, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for task `(a, b)` under `seed`.
pub fn stream(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b.rotate_left(17));
    ChaCha8Rng::seed_from_u64(mixed)
}
