//! Deterministic random streams.
//!
//! Every random number consumed by a simulation comes from a stream
//! identified by `(master seed, replicate, attempt, purpose)`. Streams are
//! independent of thread scheduling, so ensembles reproduce bit-for-bit at
//! any degree of parallelism.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;

pub type SimRng = Pcg64Mcg;

/// What a stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Exact simulation: waiting times and channel selection.
    Ssa,
    /// Reference Poisson process arrival times.
    Arrivals,
    /// Reference Poisson process marks.
    Marks,
    /// Wiener increments of the diffusion channel with this reaction index.
    Wiener(usize),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Ssa => 1,
            Stream::Arrivals => 2,
            Stream::Marks => 3,
            Stream::Wiener(r) => 0x100 + r as u64,
        }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed coordinates of one replicate attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamSeed {
    pub master: u64,
    pub replicate: u64,
    pub attempt: u32,
}

impl StreamSeed {
    pub fn new(master: u64, replicate: u64) -> Self {
        StreamSeed {
            master,
            replicate,
            attempt: 0,
        }
    }

    pub fn with_attempt(self, attempt: u32) -> Self {
        StreamSeed { attempt, ..self }
    }

    pub fn rng(&self, stream: Stream) -> SimRng {
        let mut h = splitmix64(self.master);
        h = splitmix64(h ^ self.replicate);
        h = splitmix64(h ^ u64::from(self.attempt));
        h = splitmix64(h ^ stream.tag());
        SimRng::seed_from_u64(h)
    }
}
