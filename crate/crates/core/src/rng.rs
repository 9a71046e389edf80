use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The generator behind every draw in the crate.
pub type SimRng = ChaCha8Rng;

/// Seed plus stream index.
///
/// ChaCha is counter based, so each `(seed, stream)` pair names an
/// independent sequence that can be produced on any worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub const fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub const fn with_stream(self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    /// A new base seed for a named sub-experiment, stream reset to 0.
    pub fn derive(self, tag: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(tag.wrapping_add(self.stream))))
    }

    pub fn rng(self) -> SimRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

impl Default for RngSeed {
    fn default() -> Self {
        Self::new(0x5EED)
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
