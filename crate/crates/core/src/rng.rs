//! Deterministic, counter-based random streams.
//!
//! A [`RngSpec`] names a stream by `(seed, stream_id)`. The ChaCha key is
//! derived from both; the ChaCha stream counter carries the replication
//! index, so replication `r` of a stream can be generated on any thread
//! without touching the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    #[serde(default)]
    pub stream_id: u64,
}

#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSpec {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.seed ^ splitmix64(&mut self.stream_id.clone());
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// Generator for replication 0 of this stream.
    pub fn rng(&self) -> StreamRng {
        self.replication(0)
    }

    /// Generator for replication `rep`; independent of every other
    /// replication index.
    pub fn replication(&self, rep: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(rep);
        rng
    }

    /// A child stream keyed by `index`, for nesting (e.g. one child per B²).
    pub fn substream(&self, index: u64) -> RngSpec {
        let mut state = self.stream_id ^ 0xD6E8_FEB8_6659_FD93;
        let a = splitmix64(&mut state);
        let mut s2 = a ^ index;
        RngSpec {
            seed: self.seed,
            stream_id: splitmix64(&mut s2),
        }
    }
}
