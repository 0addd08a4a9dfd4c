//! splitmix64, the reproducibility contract for every random draw in the crate.
//!
//! The generator is tiny, has no platform-dependent behaviour and is trivial to
//! reimplement in any language, so seeded outputs can be checked bit-for-bit
//! against other implementations.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Sebastiano Vigna's splitmix64 stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` using the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = (self.next_f64() * n as f64) as usize;
        i.min(n - 1)
    }
}

/// The splitmix64 output finalizer, usable as a one-shot hash of a `u64`.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for an independent sub-stream, e.g. one sweep cell.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    SplitMix64::new(base ^ index).next_u64()
}
