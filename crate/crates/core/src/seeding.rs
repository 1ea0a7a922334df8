//! Independent random streams derived from a single run seed.
//!
//! Environment draws never share a stream with policy draws, so every policy
//! evaluated under the same seed sees the same requests, positions and
//! fading.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Catalog,
    TrainEnv,
    EvalEnv,
    Agent,
    Policy,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Catalog => 1,
            Stream::TrainEnv => 2,
            Stream::EvalEnv => 3,
            Stream::Agent => 4,
            Stream::Policy => 5,
        }
    }
}

pub fn rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
