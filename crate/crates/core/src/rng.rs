//! Named random streams split from one root seed.
//!
//! Each stream is a ChaCha8 generator keyed by the root seed and selected by a
//! distinct stream id, so drawing more from one stream (or adding a stream)
//! leaves every other stream untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Synthetic dataset generation.
    Data,
    /// Monte-Carlo sampling probes.
    Probe,
    /// Latency and failure draws of one worker.
    Latency(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Data => 1,
            Stream::Probe => 2,
            Stream::Latency(worker) => (1 << 32) | worker as u64,
        }
    }
}

pub fn stream_rng(root_seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(stream.id());
    rng
}
