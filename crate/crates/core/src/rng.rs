//! Deterministic random numbers for the Monte-Carlo harness.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood's 64-bit mix, the
//! `splitmix64` reference sequence): a counter advanced by the golden-ratio
//! increment 0x9E3779B97F4A7C15, finalized with two xor-shift multiplies.
//! It is trivially portable, so test vectors reproduce across languages.
//! Uniform doubles take the top 53 bits; per-shard substreams come from
//! hashing (seed, shard) through one extra mix.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent substream for a shard: mixes the shard index into the
    /// seed before the counter starts, so shards can run in any order.
    pub fn substream(seed: u64, shard: u64) -> Self {
        let mut base = Self::new(seed ^ shard.wrapping_mul(0xA076_1D64_78BD_642F));
        let s = base.next_u64();
        Self::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from a pmf by inverse-CDF scan. The pmf must sum to ~1;
    /// rounding dust falls into the last index.
    pub fn sample_pmf(&mut self, pmf: &[f64]) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        for (idx, &p) in pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return idx;
            }
        }
        pmf.len() - 1
    }
}
