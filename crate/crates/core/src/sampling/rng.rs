//! Seeded, splittable random streams.
//!
//! Every stream is a ChaCha8 generator keyed by `(seed, purpose)` and
//! positioned on the ChaCha stream `stream_id`. Distinct replicas and
//! distinct purposes therefore never share key-stream material, and a
//! replica's draws do not depend on which worker thread happens to run it.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Discriminates independent uses of the same user seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Purpose {
    Boundary,
    Diagnostics,
    PairSubsample,
    Geometry,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Boundary => 0x0b0d,
            Purpose::Diagnostics => 0xd1a6,
            Purpose::PairSubsample => 0x5a3b,
            Purpose::Geometry => 0x6e0e,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    purpose: Purpose,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::with_purpose(seed, Purpose::Boundary, stream_id)
    }

    pub fn with_purpose(seed: u64, purpose: Purpose, stream_id: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&purpose.tag().to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            purpose,
            rng,
        }
    }

    /// Stream for replica `index`; the stream id is `seed ⊕ index`.
    pub fn replica(seed: u64, purpose: Purpose, index: u64) -> Self {
        Self::with_purpose(seed, purpose, seed ^ index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn purpose(&self) -> Purpose {
        self.purpose
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen()
    }

    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}
