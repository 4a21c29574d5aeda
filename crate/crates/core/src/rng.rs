//! Seeded, stream-addressable random number generation.
//!
//! Every estimator consumes exactly one [`RngStream`]. A stream is the pair
//! `(seed, stream_id)`; the generator behind it is ChaCha8 keyed by the seed
//! with the ChaCha stream counter set to `stream_id`, so distinct ids give
//! non-overlapping sequences by construction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type handed to samplers.
pub type McRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> McRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream for replication `index` under the same seed.
    pub fn replication(seed: u64, index: u64) -> Self {
        Self::new(seed, index)
    }

    /// Sub-stream for branch `k` of a multi-branch estimator.
    ///
    /// Branch 0 is the stream itself. Other branches re-key the generator, so
    /// they never collide with any `stream_id` of the parent seed.
    pub fn branch(&self, k: u64) -> Self {
        if k == 0 {
            return *self;
        }
        Self {
            seed: splitmix64(self.seed ^ splitmix64(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))),
            stream_id: self.stream_id,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
