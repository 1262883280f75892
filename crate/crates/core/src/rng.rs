//! Seeded random streams.
//!
//! Every stochastic component of a run draws from its own ChaCha stream so
//! that, for instance, changing the subsampling routine leaves the mutation
//! draws untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The independent substreams carried by an [`RngStream`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Substream {
    Init,
    Mutation,
    Subsampling,
    Shuffle,
    TieBreak,
}

impl Substream {
    const ALL: [Substream; 5] = [
        Substream::Init,
        Substream::Mutation,
        Substream::Subsampling,
        Substream::Shuffle,
        Substream::TieBreak,
    ];

    fn stream_id(self) -> u64 {
        match self {
            Substream::Init => 1,
            Substream::Mutation => 2,
            Substream::Subsampling => 3,
            Substream::Shuffle => 4,
            Substream::TieBreak => 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    streams: [ChaCha8Rng; 5],
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let streams = Substream::ALL.map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s.stream_id());
            rng
        });
        RngStream { seed, streams }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&mut self, which: Substream) -> &mut ChaCha8Rng {
        let idx = Substream::ALL.iter().position(|s| *s == which).unwrap();
        &mut self.streams[idx]
    }

    pub fn mutation(&mut self) -> &mut ChaCha8Rng {
        self.get(Substream::Mutation)
    }

    pub fn subsampling(&mut self) -> &mut ChaCha8Rng {
        self.get(Substream::Subsampling)
    }

    pub fn shuffle(&mut self) -> &mut ChaCha8Rng {
        self.get(Substream::Shuffle)
    }

    pub fn tie_break(&mut self) -> &mut ChaCha8Rng {
        self.get(Substream::TieBreak)
    }

    pub fn init(&mut self) -> &mut ChaCha8Rng {
        self.get(Substream::Init)
    }
}
