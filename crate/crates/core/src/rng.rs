//! Seeded random streams.
//!
//! Every Monte Carlo routine splits its work into fixed-size indexed chunks.
//! Chunk `i` draws from its own ChaCha stream derived from `(seed, i)`, so the
//! output does not depend on how chunks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per work chunk for Monte Carlo loops.
pub const CHUNK: usize = 1024;

/// Random stream for chunk `index` of an experiment seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an independent sub-seed, e.g. one per restart or per trial.
pub fn derive(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Chunk boundaries `(index, start, len)` covering `total` samples.
pub fn chunks(total: usize) -> impl Iterator<Item = (u64, usize, usize)> {
    (0..total.div_ceil(CHUNK)).map(move |i| {
        let start = i * CHUNK;
        (i as u64, start, CHUNK.min(total - start))
    })
}
