//! Counter-based random streams: every variate is a pure function of
//! (seed, stream words), so replicate ensembles are reproducible under any
//! parallel schedule without storing generator state.

use crate::special::normal_quantile;

/// splitmix64 finalizer; full-avalanche 64-bit mixer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Keyed hash of a word sequence.
#[derive(Debug, Clone, Copy)]
pub struct Prf {
    seed: u64,
}

impl Prf {
    pub fn new(seed: u64) -> Self {
        Prf {
            seed: mix64(seed ^ 0x6A09_E667_F3BC_C909),
        }
    }

    /// Derive a sub-key; chaining mixers keeps per-edge hashing cheap for
    /// deep paths (hash the prefix once, extend per child).
    #[inline]
    pub fn derive(&self, word: u64) -> Prf {
        Prf {
            seed: mix64(self.seed.wrapping_add(GAMMA) ^ word),
        }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        mix64(self.seed ^ 0xD1B5_4A32_D192_ED03)
    }

    pub fn hash(&self, words: &[u64]) -> u64 {
        let mut p = *self;
        for &w in words {
            p = p.derive(w);
        }
        p.value()
    }

    /// Uniform in the open interval (0, 1), 53-bit resolution.
    #[inline]
    pub fn uniform(&self, words: &[u64]) -> f64 {
        u64_to_unit(self.hash(words))
    }

    /// Standard normal via the inverse distribution function (keeps streams
    /// aligned: exactly one u64 consumed per variate).
    #[inline]
    pub fn gaussian(&self, words: &[u64]) -> f64 {
        normal_quantile(self.uniform(words))
    }

    /// Standard exponential.
    #[inline]
    pub fn exponential(&self, words: &[u64]) -> f64 {
        -self.uniform(words).ln()
    }
}

#[inline]
pub fn u64_to_unit(x: u64) -> f64 {
    // (x >> 11) in [0, 2^53); shift into (0,1) symmetric around 1/2.
    ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}
