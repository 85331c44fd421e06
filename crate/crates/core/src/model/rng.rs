//! Seeded random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and
//! positioned on its own 64-bit stream id, so replications never share
//! output and results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

/// Stream id reserved for drawing the ground-truth model of an experiment.
pub const MODEL_STREAM: u64 = u64::MAX;

/// Generator for `(master_seed, stream)`.
pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of replication `rep` at per-half sample size `n`.
pub fn replication_stream(n: usize, rep: usize) -> u64 {
    assert!(n < (1 << 32) && rep < (1 << 32), "stream key out of range");
    ((n as u64) << 32) | rep as u64
}

/// Serializable position of a stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamState {
    pub master_seed: u64,
    pub stream: u64,
    pub word_pos: u128,
}

impl StreamState {
    pub fn capture(master_seed: u64, rng: &StreamRng) -> Self {
        Self {
            master_seed,
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> StreamRng {
        let mut rng = stream_rng(self.master_seed, self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}
