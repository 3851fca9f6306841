//! Counter-based random streams.
//!
//! Every random draw in a Monte Carlo run is addressed by
//! `(experiment seed, point, trial index, stream id)`. The key of a ChaCha8
//! generator is derived from the seed and the point, the trial index selects the
//! ChaCha stream and the stream id selects a disjoint block of the counter space.
//! Results therefore do not depend on which worker runs which trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Stream {
    Bits = 0,
    Channel = 1,
    Noise = 2,
    Aux = 3,
}

// Each stream owns 2^40 words of the 2^68-word counter space of a ChaCha stream.
const STREAM_STRIDE_LOG2: u32 = 40;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key material for one experiment point; cheap to copy into worker threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    key: [u8; 32],
}

impl StreamKey {
    pub fn new(seed: u64, point: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed ^ splitmix64(point.wrapping_add(0xA5A5_A5A5));
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        Self { key }
    }

    /// Generator positioned at the start of `stream` for `trial`.
    pub fn rng(&self, trial: u64, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(trial);
        rng.set_word_pos(u128::from(stream as u8) << STREAM_STRIDE_LOG2);
        rng
    }
}

/// Convenience: a generator for a one-off draw keyed by `(seed, stream)`.
pub fn seeded(seed: u64, stream: Stream) -> ChaCha8Rng {
    StreamKey::new(seed, 0).rng(0, stream)
}
