//! Named random streams fanned out from a single master seed.
//!
//! Each stream is a ChaCha8 generator keyed by the master seed and a fixed
//! stream id, so toggling one noise source never shifts the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement,
    Mobility,
    Traffic,
    Channel,
    Exploration,
    Init,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::Mobility => 2,
            Stream::Traffic => 3,
            Stream::Channel => 4,
            Stream::Exploration => 5,
            Stream::Init => 6,
        }
    }
}

pub fn stream(master_seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(which.id());
    rng
}
