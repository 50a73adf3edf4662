//! Reproducible random streams.
//!
//! A stream is identified by `(master_seed, stream_index)`. The master seed keys
//! a ChaCha8 generator and the index selects one of its 2^64 independent
//! counter streams, so distinct indices never share keystream blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Stream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl StreamSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        StreamSpec {
            master_seed,
            stream_index,
        }
    }

    pub fn stream(&self) -> Stream {
        derive_stream(self.master_seed, self.stream_index)
    }

    /// A spec for the `index`-th sub-stream of this one.
    ///
    /// The parent `(master_seed, stream_index)` pair is hashed into a fresh
    /// key, so children of different parents never collide.
    pub fn child(&self, index: u64) -> StreamSpec {
        let key = splitmix64(splitmix64(self.master_seed) ^ splitmix64(!self.stream_index));
        StreamSpec::new(key, index)
    }
}

pub fn derive_stream(master_seed: u64, stream_index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_index);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
