//! Named random streams derived from one run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of `seed`, a stream name, and an index.
pub fn stream_seed(seed: u64, name: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET;
    for b in seed.to_le_bytes().iter().chain(name.as_bytes()).chain(&index.to_le_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix(h)
}

pub fn stream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, name, index))
}

/// Uniform value in `[0, 1)` determined by `seed` and `text`.
pub fn hash_unit(seed: u64, text: &str) -> f64 {
    (stream_seed(seed, text, 0) >> 11) as f64 / (1u64 << 53) as f64
}
