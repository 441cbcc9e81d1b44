//! Seeded deterministic random number generation.
//!
//! All randomness in the pipeline flows through [`SplitMix64`], a small,
//! fully specified 64-bit generator (Steele, Lea & Flood 2014). Picks and
//! model initializations are therefore reproducible bit-for-bit from the
//! configured seeds, and portable to any other implementation of the same
//! algorithm.

/// SplitMix64 generator. One `u64` of state, one output per step.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform float in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, bound). Rejection-sampled, bias-free.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Derive an independent child seed, e.g. one per LDA chain.
    pub fn derive(seed: u64, stream: u64) -> u64 {
        let mut r = SplitMix64::new(seed ^ stream.wrapping_mul(0xA0761D6478BD642F));
        r.next_u64()
    }
}
