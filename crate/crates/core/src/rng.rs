//! Counter-style stream derivation: every random stream is a pure function of
//! a root seed and a tuple of integer keys, so results never depend on the
//! order in which replications are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every stream in the crate.
pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A hashed key path below a root seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    state: u64,
}

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        Self {
            state: splitmix64(seed),
        }
    }

    /// Derives a child key; `push(a).push(b)` differs from `push(b).push(a)`.
    pub fn push(self, key: u64) -> Self {
        Self {
            state: splitmix64(self.state ^ splitmix64(key.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    pub fn push_f64(self, key: f64) -> Self {
        self.push(key.to_bits())
    }

    pub fn rng(self) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut s = self.state;
        for chunk in seed.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        StreamRng::from_seed(seed)
    }
}
