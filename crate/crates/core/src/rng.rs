//! Counter-keyed random streams.
//!
//! A stream is addressed by `(seed, key)`; draws for one key never depend on
//! how many draws another key has consumed, so work split across threads
//! reproduces the sequential result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, key: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}
