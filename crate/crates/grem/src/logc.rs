//! Log-domain complex arithmetic.
//!
//! A nonzero complex number is stored as `exp(ln_mod + i*arg)`. Sums like
//! `Z_n(beta) = sum exp(beta sqrt(n) X)` have terms whose exponents grow
//! linearly in `n`, so the plain `Complex64` representation overflows around
//! `n*a*|beta|^2 > 700`. Everything here stays finite as long as the
//! *exponents* are finite.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    /// ln |z|; `f64::NEG_INFINITY` encodes z = 0.
    pub ln_mod: f64,
    /// arg z, not reduced mod 2 pi (callers may rely on accumulated phase).
    pub arg: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        ln_mod: f64::NEG_INFINITY,
        arg: 0.0,
    };

    pub const ONE: LogComplex = LogComplex {
        ln_mod: 0.0,
        arg: 0.0,
    };

    /// Representation of `exp(w)` for complex `w`.
    #[inline]
    pub fn from_exponent(w: Complex64) -> Self {
        LogComplex {
            ln_mod: w.re,
            arg: w.im,
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            return Self::ZERO;
        }
        LogComplex {
            ln_mod: z.norm().ln(),
            arg: z.arg(),
        }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            LogComplex {
                ln_mod: x.ln(),
                arg: 0.0,
            }
        } else {
            LogComplex {
                ln_mod: (-x).ln(),
                arg: std::f64::consts::PI,
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_mod == f64::NEG_INFINITY
    }

    /// May overflow to infinity; callers that need the value at large `n`
    /// should work with `ln_mod`/`arg` directly.
    pub fn to_complex(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_mod.exp(), self.arg)
    }

    #[inline]
    pub fn mul(&self, other: &LogComplex) -> LogComplex {
        LogComplex {
            ln_mod: self.ln_mod + other.ln_mod,
            arg: self.arg + other.arg,
        }
    }

    #[inline]
    pub fn div(&self, other: &LogComplex) -> LogComplex {
        LogComplex {
            ln_mod: self.ln_mod - other.ln_mod,
            arg: self.arg - other.arg,
        }
    }

    /// Multiply by `exp(w)`.
    #[inline]
    pub fn mul_exp(&self, w: Complex64) -> LogComplex {
        LogComplex {
            ln_mod: self.ln_mod + w.re,
            arg: self.arg + w.im,
        }
    }

    pub fn neg(&self) -> LogComplex {
        LogComplex {
            ln_mod: self.ln_mod,
            arg: self.arg + std::f64::consts::PI,
        }
    }

    pub fn conj(&self) -> LogComplex {
        LogComplex {
            ln_mod: self.ln_mod,
            arg: -self.arg,
        }
    }

    /// `z^w` via the principal value of `log z`.
    pub fn powc(&self, w: Complex64) -> LogComplex {
        let log_z = Complex64::new(self.ln_mod, reduce_arg(self.arg));
        LogComplex::from_exponent(w * log_z)
    }

    /// Addition without leaving the log domain: factor out the larger
    /// modulus, do the O(1)-sized correction in ordinary arithmetic.
    pub fn add(&self, other: &LogComplex) -> LogComplex {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let (big, small) = if self.ln_mod >= other.ln_mod {
            (self, other)
        } else {
            (other, self)
        };
        let r = (small.ln_mod - big.ln_mod).exp();
        let s = Complex64::new(1.0, 0.0) + Complex64::from_polar(r, small.arg - big.arg);
        if s == Complex64::new(0.0, 0.0) {
            return Self::ZERO;
        }
        LogComplex {
            ln_mod: big.ln_mod + s.norm().ln(),
            arg: big.arg + s.arg(),
        }
    }

    pub fn sub(&self, other: &LogComplex) -> LogComplex {
        self.add(&other.neg())
    }

    pub fn sum<I: IntoIterator<Item = LogComplex>>(items: I) -> LogComplex {
        items
            .into_iter()
            .fold(LogComplex::ZERO, |acc, x| acc.add(&x))
    }
}

/// Reduce an accumulated phase to (-pi, pi].
pub fn reduce_arg(arg: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = arg % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Sum a slice of complex exponents `w_j` as `sum_j exp(w_j)`, shifting by
/// the largest real part so nothing overflows.
pub fn sum_exp(exponents: &[Complex64]) -> LogComplex {
    let mut max_re = f64::NEG_INFINITY;
    for w in exponents {
        if w.re > max_re {
            max_re = w.re;
        }
    }
    if max_re == f64::NEG_INFINITY {
        return LogComplex::ZERO;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for w in exponents {
        acc += Complex64::from_polar((w.re - max_re).exp(), w.im);
    }
    if acc == Complex64::new(0.0, 0.0) {
        return LogComplex::ZERO;
    }
    LogComplex {
        ln_mod: max_re + acc.norm().ln(),
        arg: acc.arg(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    #[test]
    fn add_matches_plain_arithmetic() {
        let a = Complex64::new(1.3, -0.4);
        let b = Complex64::new(-0.2, 2.1);
        let la = LogComplex::from_complex(a);
        let lb = LogComplex::from_complex(b);
        assert!(close(la.add(&lb).to_complex(), a + b, 1e-14));
        assert!(close(la.sub(&lb).to_complex(), a - b, 1e-14));
        assert!(close(la.mul(&lb).to_complex(), a * b, 1e-14));
        assert!(close(la.div(&lb).to_complex(), a / b, 1e-14));
    }

    #[test]
    fn survives_huge_exponents() {
        // exp(1000 + i) + exp(999 - 2i), far beyond f64 range.
        let a = LogComplex::from_exponent(Complex64::new(1000.0, 1.0));
        let b = LogComplex::from_exponent(Complex64::new(999.0, -2.0));
        let s = a.add(&b);
        // Compare against the shifted computation exp(1000)*(e^{i} + e^{-1-2i}).
        let shifted = Complex64::from_polar(1.0, 1.0) + Complex64::from_polar((-1.0f64).exp(), -2.0);
        assert!((s.ln_mod - (1000.0 + shifted.norm().ln())).abs() < 1e-12);
        assert!((reduce_arg(s.arg) - shifted.arg()).abs() < 1e-12);
    }

    #[test]
    fn cancellation_to_zero() {
        let a = LogComplex::from_real(2.5);
        let s = a.sub(&a);
        assert!(s.is_zero() || s.ln_mod < a.ln_mod - 30.0);
    }

    #[test]
    fn sum_exp_agrees_with_fold() {
        let ws = [
            Complex64::new(0.3, 1.0),
            Complex64::new(-2.0, 0.1),
            Complex64::new(1.1, -3.0),
        ];
        let direct: Complex64 = ws.iter().map(|w| w.exp()).sum();
        assert!(close(sum_exp(&ws).to_complex(), direct, 1e-14));
    }
}
