//! Counter-based substreams: every replication gets its own generator,
//! derived only from the master seed and its index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for substream `index` of `master`.
pub fn substream(master: u64, index: u64) -> StreamRng {
    let mut state = splitmix64(master) ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Index of replication `rep` at scale point `point`.
pub fn stream_index(point: usize, rep: usize) -> u64 {
    ((point as u64) << 40) | rep as u64
}
