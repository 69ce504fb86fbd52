//! Seeded random streams.
//!
//! Every random choice is drawn from a ChaCha8 stream selected by
//! `(seed, stream id)`; generators key streams by vertex id so that a
//! construction on a ball is the restriction of the same construction on any
//! larger ball.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in outputs so runs can be reproduced elsewhere.
pub const RNG_ALGORITHM: &str = "chacha8-seed_from_u64-stream";

pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
