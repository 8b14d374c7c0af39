//! Seed derivation. Every stochastic draw in a run comes from one root seed;
//! work items get independent streams keyed by `(seed, stream, index)` so
//! parallel and sequential execution draw identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root generator for a run.
pub fn root(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for work item `index` of a named stream.
pub fn stream(seed: u64, stream: u64, index: u64) -> Rng {
    let key = splitmix64(seed ^ splitmix64(stream.wrapping_add(splitmix64(index))));
    ChaCha8Rng::seed_from_u64(key)
}
