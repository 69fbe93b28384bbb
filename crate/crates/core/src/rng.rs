//! Seeded random streams.
//!
//! Every stochastic routine takes its generator from [`stream`], which maps a
//! `(seed, stream id)` pair onto an independent ChaCha20 stream. The generator
//! identifier [`GENERATOR_ID`] is written into saved models; reproducibility is
//! defined per (generator id, seed).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type ModelRng = ChaCha20Rng;

pub const GENERATOR_ID: &str = "chacha20";

/// Stream ids used by the training and generation routines.
pub mod streams {
    /// Layer `l` of greedy pretraining uses `PRETRAIN + l`.
    pub const PRETRAIN: u64 = 1;
    pub const DBM: u64 = 100;
    pub const GENERATION: u64 = 200;
    pub const EVALUATION: u64 = 300;
}

pub fn stream(seed: u64, stream_id: u64) -> ModelRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
