use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator handed to samplers; one per stream, never shared between tasks.
pub type StreamRng = ChaCha8Rng;

/// A reproducible random stream: the ChaCha key is derived from
/// `master_seed` and `stream_id` selects the ChaCha stream, so replications
/// can be generated independently and in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A derived seed for a nested stream (e.g. density index within a bench run).
    pub fn child(&self, salt: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self
                .master_seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(salt.wrapping_mul(0xBF58_476D_1CE4_E5B9))
                ^ (salt >> 7),
            stream_id: self.stream_id,
        }
    }
}
