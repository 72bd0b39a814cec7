//! Special functions: the entire continuation of the normal distribution
//! function to complex arguments, and the real normal quantile.
//!
//! `phi(z)` is the analytic continuation of `P[N(0,1) <= x]`. It is built
//! from `erfc` on the half-plane `Re v >= 0` with the reflection
//! `phi(z) + phi(-z) = 1` (exact by construction). On the half-plane,
//! `erfc` is computed from the Maclaurin series of `erf` where the relative
//! cancellation stays below ~e^{2 Re(v)^2} and from the Laplace continued
//! fraction for `erfcx` elsewhere; the continued fraction converges for
//! every `Re v > 0` and is fast once `Re v` is bounded away from 0.

use crate::logc::LogComplex;
use num_complex::Complex64;

const FRAC_2_SQRT_PI: f64 = 1.128_379_167_095_512_6;
const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Maclaurin series for erf, adequate when `Re v <= 1.4` (any |v| up to ~7)
/// or |v| small. Relative error of the resulting erfc stays below ~1e-13.
fn erf_series(v: Complex64) -> Complex64 {
    let v2 = v * v;
    let mut term = v;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..250 {
        let contrib = term / (2 * n + 1) as f64;
        sum += if n % 2 == 0 { contrib } else { -contrib };
        term = term * v2 / (n + 1) as f64;
        if term.norm_sqr() < 1e-36 * (1.0 + sum.norm_sqr()) {
            break;
        }
    }
    sum * FRAC_2_SQRT_PI
}

/// Laplace continued fraction for `erfcx(v) = e^{v^2} erfc(v)`, `Re v > 0`:
/// `sqrt(pi) erfcx(v) = 1/(v + (1/2)/(v + 1/(v + (3/2)/(v + ...))))`.
fn erfcx_cf(v: Complex64) -> Complex64 {
    let tiny = Complex64::new(1e-300, 0.0);
    let mut f = if v == Complex64::new(0.0, 0.0) { tiny } else { v };
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for k in 1..=1200u32 {
        let a = Complex64::new(k as f64 / 2.0, 0.0);
        d = v + a * d;
        if d == Complex64::new(0.0, 0.0) {
            d = tiny;
        }
        c = v + a / c;
        if c == Complex64::new(0.0, 0.0) {
            c = tiny;
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (SQRT_PI * f).inv()
}

/// Asymptotic expansion `erfcx(v) ~ (1/(v sqrt(pi))) sum (-1)^m (2m-1)!!/(2v^2)^m`,
/// truncated at the smallest term; below 1e-16 relative once |v| >= 8.
fn erfcx_asymptotic(v: Complex64) -> Complex64 {
    let neg_half_inv_v2 = -(2.0 * v * v).inv();
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut last = f64::INFINITY;
    for m in 0..60u32 {
        let norm = term.norm();
        if norm >= last || norm < 1e-18 {
            break;
        }
        sum += term;
        last = norm;
        term = term * ((2 * m + 1) as f64) * neg_half_inv_v2;
    }
    sum / (v * SQRT_PI)
}

/// `erfc(v)/2` for `Re v >= 0`, in log form so huge moduli near the
/// imaginary axis stay representable.
fn half_erfc_log(v: Complex64) -> LogComplex {
    let scaled = if v.norm_sqr() > 68.0 {
        // Large modulus, any |arg v| <= pi/2 (the continued fraction is
        // unreliable on the imaginary axis itself).
        0.5 * erfcx_asymptotic(v)
    } else if v.re <= 1.4 {
        let e = 0.5 * (Complex64::new(1.0, 0.0) - erf_series(v));
        return LogComplex::from_complex(e);
    } else {
        0.5 * erfcx_cf(v)
    };
    // erfc = e^{-v^2} erfcx; keep the exponent symbolic.
    LogComplex::from_complex(scaled).mul_exp(-v * v)
}

/// Entire continuation of the standard normal distribution function.
///
/// Accurate to better than 1e-12 relative for |z| <= 30; may overflow to
/// infinity beyond |z| ~ 37 in the fluctuation sectors (use [`phi_log`]).
pub fn phi(z: Complex64) -> Complex64 {
    phi_log(z).to_complex()
}

/// `phi` in log form: exact for arbitrarily large |z|.
pub fn phi_log(z: Complex64) -> LogComplex {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    if z.re <= 0.0 {
        half_erfc_log(-z * inv_sqrt2)
    } else {
        LogComplex::ONE.sub(&half_erfc_log(z * inv_sqrt2))
    }
}

/// Complementary function `1 - phi(z) = phi(-z)`.
pub fn phi_bar(z: Complex64) -> Complex64 {
    phi(-z)
}

pub fn phi_bar_log(z: Complex64) -> LogComplex {
    phi_log(-z)
}

/// Real restriction, used by the statistics battery.
pub fn phi_real(x: f64) -> f64 {
    phi(Complex64::new(x, 0.0)).re
}

pub fn phi_bar_real(x: f64) -> f64 {
    phi(Complex64::new(-x, 0.0)).re
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Wichura's PPND16 (AS 241): inverse of the standard normal distribution
/// function, accurate to ~1e-16 relative over (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = (((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_812_8e4) * r
            + 6.726_577_092_700_870e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5)
            * q;
        let den = ((((((5.226_495_278_852_854_5e3 * r + 2.872_908_573_572_194e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return num / den;
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_546)
            * r
            + 1.423_437_110_749_683_6;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_at_zero_is_half() {
        let v = phi(Complex64::new(0.0, 0.0));
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn reflection_identity() {
        // phi(z) + phi(-z) = 1 across both evaluation branches.
        let pts = [
            Complex64::new(0.3, 0.2),
            Complex64::new(-2.5, 4.0),
            Complex64::new(7.0, -3.0),
            Complex64::new(0.1, 9.5),
            Complex64::new(5.0, 5.0),
        ];
        for z in pts {
            let s = phi(z) + phi(-z);
            let scale = 1.0 + phi(z).norm();
            assert!(
                (s - Complex64::new(1.0, 0.0)).norm() < 1e-12 * scale,
                "z = {z}, sum = {s}"
            );
        }
    }

    #[test]
    fn real_axis_reference_values() {
        // Known double-precision values of Phi on the real axis.
        let cases = [
            (1.0, 0.841_344_746_068_542_9),
            (-1.0, 0.158_655_253_931_457_05),
            (2.0, 0.977_249_868_051_820_8),
            (-4.0, 3.167_124_183_311_992_4e-5),
            (6.0, 0.999_999_999_013_412_3),
        ];
        for (x, want) in cases {
            let got = phi_real(x);
            assert!(
                (got - want).abs() < 1e-13 * want.abs().max(1e-3),
                "x = {x}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn extreme_real_tail_relative_accuracy() {
        // Phi(-x) = erfc(x/sqrt(2))/2 deep in the tail; compare with the
        // asymptotic series which is essentially exact at x = 20.
        let x = 20.0f64;
        let got = phi_real(-x);
        // phi(x)/x * sum (-1)^m (2m-1)!!/x^{2m}, truncated well past 1e-13
        let mut series = 0.0;
        let mut term = 1.0;
        for m in 0..8 {
            series += term;
            term *= -((2 * m + 1) as f64) / (x * x);
        }
        let asy = normal_pdf(x) / x * series;
        assert!(((got - asy) / asy).abs() < 1e-11, "got {got}, asy {asy}");
    }

    #[test]
    fn sector_asymptotics_large_imaginary() {
        // |arg z| > pi/4: Phi(z) ~ -exp(-z^2/2)/(sqrt(2 pi) z).
        // Work in log form: the values reach e^450 at |z| = 30.
        for &mag in &[8.0, 15.0, 30.0] {
            let z = Complex64::new(0.0, mag);
            let lead_log = LogComplex::from_complex(
                -((2.0 * std::f64::consts::PI).sqrt() * z).inv(),
            )
            .mul_exp(-z * z / 2.0);
            let ratio = phi_log(z).div(&lead_log).to_complex();
            let tol = 2.0 / (mag * mag); // next order is O(|z|^-2)
            assert!(
                (ratio - Complex64::new(1.0, 0.0)).norm() < tol,
                "mag {mag}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn quantile_round_trips() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-10] {
            let x = normal_quantile(p);
            let back = phi_real(x);
            assert!((back - p).abs() < 1e-12 * (p.min(1.0 - p)).max(1e-13) + 1e-15);
        }
    }

    #[test]
    fn mills_ratio_bound_on_grid() {
        // phi_bar(x) <= pdf(x)/x for x > 0.
        let mut x = 0.05;
        while x < 12.0 {
            assert!(phi_bar_real(x) <= normal_pdf(x) / x + 1e-300);
            x += 0.173;
        }
    }
}
