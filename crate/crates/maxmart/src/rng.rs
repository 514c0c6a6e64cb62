//! Reproducible, splittable random number streams.
//!
//! One named generator: ChaCha8, a counter-based stream cipher. The 256-bit
//! key is expanded from a 64-bit master seed by a SplitMix64 chain, and the
//! cipher's 64-bit stream counter selects an independent stream per unit of
//! work (path index, inner replication, ...). Because every unit of work owns
//! its `(master, stream)` pair, results do not depend on how work is split
//! across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// SplitMix64 mix step (Steele, Lea, Flood 2014). Used both as the key
/// expansion for ChaCha and as the 64-bit mix deriving nested masters.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one reproducible stream: `master` keys the cipher, `stream`
/// selects the ChaCha stream counter. Path `i` of a batch uses `stream = i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Seed { master, stream }
    }

    /// Derive a fresh master for a nested stage (inner Monte Carlo, bridge
    /// refinements, ...) so nested streams never collide with batch streams.
    pub fn derive_master(master: u64, salt: u64) -> u64 {
        splitmix64(master ^ splitmix64(salt))
    }

    /// Child seed for a nested stage labelled by `salt`, keeping this seed's
    /// stream as the outer index.
    pub fn child(&self, salt: u64) -> Seed {
        Seed {
            master: Seed::derive_master(self.master, salt ^ self.stream.rotate_left(17)),
            stream: 0,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut s = self.master;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}
