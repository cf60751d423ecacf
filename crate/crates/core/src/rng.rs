//! Deterministic random streams.
//!
//! Every stream is keyed by `(seed, frame, pixel, stream id)`, so results do not
//! depend on thread count or on the order in which pixels are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream ids used by the frame pipeline. Each stage of each pixel draws from
/// its own stream.
pub mod stream_id {
    pub const INITIAL: u64 = 1;
    pub const TEMPORAL: u64 = 2;
    pub const MUTATION: u64 = 3;
    pub const SPATIAL: u64 = 4;
    pub const SAMPLE_ID: u64 = 5;
    pub const TESTBED: u64 = 16;
    pub const TESTBED_PIXEL_A: u64 = 17;
    pub const TESTBED_PIXEL_B: u64 = 18;
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a key tuple into a single 64-bit value.
pub fn hash_key(seed: u64, frame: u64, pixel: u64, stream: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ frame.wrapping_mul(0xd6e8_feb8_6659_fd93));
    h = splitmix64(h ^ pixel.wrapping_mul(0xa076_1d64_78bd_642f));
    splitmix64(h ^ stream.wrapping_mul(0xe703_7ed1_a0b4_28db))
}

pub fn stream(seed: u64, frame: u64, pixel: u64, stream: u64) -> StreamRng {
    let key = hash_key(seed, frame, pixel, stream);
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_exact_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix64(key.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}
