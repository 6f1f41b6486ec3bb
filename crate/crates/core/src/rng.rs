//! Seeded random streams with deterministic fork-by-index.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finaliser, used to derive child seeds.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A single-owner pseudo-random stream.
///
/// `fork(k)` depends only on the stream's seed and `k`, never on how many
/// values have been drawn, so parallel workers can derive their streams in
/// any order and still reproduce the same sequences.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream `index` of this stream.
    pub fn fork(&self, index: u64) -> Self {
        Self::new(Self::child_seed(self.seed, index))
    }

    /// Seed of child `index` of a stream seeded with `seed`.
    pub fn child_seed(seed: u64, index: u64) -> u64 {
        mix64(seed ^ mix64(index.wrapping_add(0x51_7CC1_B727_220A)))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
