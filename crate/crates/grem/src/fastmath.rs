//! Branch-light polynomial exp and sin/cos for the Monte Carlo inner loops.
//!
//! The simulator spends nearly all of its time evaluating e^{sigma E} and
//! (cos, sin)(tau E) per leaf; the libm routines on this target cost ~40 ns
//! per leaf which blows the acceptance-suite runtime budgets. These
//! reductions + Taylor kernels are accurate to a few 1e-16 absolute over the
//! exponent ranges the simulator produces (|x| <= 700, |y| <= 1e7) and,
//! being pure f64 arithmetic, are bit-identical across platforms, which the
//! reproducibility contract likes. Precision-critical code (the complex
//! normal CDF, quantiles, statistics) stays on libm.

/// e^x for |x| <= 708; saturates like libm outside.
#[inline]
pub fn fexp(x: f64) -> f64 {
    const LOG2_E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    if x > 709.0 {
        return f64::INFINITY;
    }
    if x < -709.0 {
        return 0.0;
    }
    let kf = (x * LOG2_E).round();
    let r = (x - kf * LN2_HI) - kf * LN2_LO;
    // Taylor to r^11 on |r| <= ln(2)/2 = 0.347: next term < 6e-17.
    let p = 1.0
        + r * (1.0
            + r * (0.5
                + r * (1.0 / 6.0
                    + r * (1.0 / 24.0
                        + r * (1.0 / 120.0
                            + r * (1.0 / 720.0
                                + r * (1.0 / 5040.0
                                    + r * (1.0 / 40320.0
                                        + r * (1.0 / 362880.0
                                            + r * (1.0 / 3628800.0
                                                + r * (1.0 / 39916800.0
                                                    + r * (1.0 / 479001600.0
                                                        + r * (1.0 / 6227020800.0)))))))))))));
    let k = kf as i64;
    // scale by 2^k, splitting for subnormal-adjacent k
    if (-1000..=1000).contains(&k) {
        p * f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        let half = f64::from_bits(((k / 2 + 1023) as u64) << 52);
        let rest = f64::from_bits(((k - k / 2 + 1023) as u64) << 52);
        p * half * rest
    }
}

/// (sin y, cos y) for |y| <= ~1e7 (three-part pi/2 reduction).
#[inline]
pub fn fsincos(y: f64) -> (f64, f64) {
    const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;
    const P1: f64 = 1.570_796_326_734_125_6; // pi/2, high 33 bits
    const P2: f64 = 6.077_100_506_303_966e-11; // next 33 bits
    const P3: f64 = 2.022_266_248_711_166_5e-21; // next 33 bits
    let jf = (y * FRAC_2_PI).round();
    let r = ((y - jf * P1) - jf * P2) - jf * P3;
    let r2 = r * r;
    // sin to r^15, cos to r^16 on |r| <= pi/4: errors < 1e-16.
    let s = r
        * (1.0
            + r2 * (-1.0 / 6.0
                + r2 * (1.0 / 120.0
                    + r2 * (-1.0 / 5040.0
                        + r2 * (1.0 / 362880.0
                            + r2 * (-1.0 / 39916800.0
                                + r2 * (1.0 / 6227020800.0
                                    + r2 * (-1.0 / 1307674368000.0))))))));
    let c = 1.0
        + r2 * (-0.5
            + r2 * (1.0 / 24.0
                + r2 * (-1.0 / 720.0
                    + r2 * (1.0 / 40320.0
                        + r2 * (-1.0 / 3628800.0
                            + r2 * (1.0 / 479001600.0
                                + r2 * (-1.0 / 87178291200.0
                                    + r2 * (1.0 / 20922789888000.0))))))));
    match (jf as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// e^{x + i y} as (re, im).
#[inline]
pub fn cis_exp(x: f64, y: f64) -> (f64, f64) {
    let r = fexp(x);
    let (s, c) = fsincos(y);
    (r * c, r * s)
}

pub const LANES: usize = 8;

/// Branchless lane-parallel e^x; requires |x| <= 705 (callers bound their
/// exponents before choosing this path).
#[inline]
fn fexp_lanes(x: &[f64; LANES]) -> [f64; LANES] {
    const LOG2_E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    let mut kf = [0.0; LANES];
    let mut r = [0.0; LANES];
    for l in 0..LANES {
        // clamp: shifted-sum callers produce arbitrarily negative exponents
        let xl = x[l].max(-708.0);
        kf[l] = (xl * LOG2_E).round();
        r[l] = (xl - kf[l] * LN2_HI) - kf[l] * LN2_LO;
    }
    let mut p = [0.0; LANES];
    for l in 0..LANES {
        let rl = r[l];
        p[l] = 1.0
            + rl * (1.0
                + rl * (0.5
                    + rl * (1.0 / 6.0
                        + rl * (1.0 / 24.0
                            + rl * (1.0 / 120.0
                                + rl * (1.0 / 720.0
                                    + rl * (1.0 / 5040.0
                                        + rl * (1.0 / 40320.0
                                            + rl * (1.0 / 362880.0
                                                + rl * (1.0 / 3628800.0
                                                    + rl * (1.0 / 39916800.0
                                                        + rl * (1.0 / 479001600.0
                                                            + rl * (1.0 / 6227020800.0)))))))))))));
    }
    let mut out = [0.0; LANES];
    for l in 0..LANES {
        out[l] = p[l] * f64::from_bits(((kf[l] as i64 + 1023) as u64) << 52);
    }
    out
}

/// Branchless lane-parallel (sin, cos).
#[inline]
fn fsincos_lanes(y: &[f64; LANES]) -> ([f64; LANES], [f64; LANES]) {
    const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;
    const P1: f64 = 1.570_796_326_734_125_6;
    const P2: f64 = 6.077_100_506_303_966e-11;
    const P3: f64 = 2.022_266_248_711_166_5e-21;
    let mut q = [0i64; LANES];
    let mut r = [0.0; LANES];
    for l in 0..LANES {
        let jf = (y[l] * FRAC_2_PI).round();
        r[l] = ((y[l] - jf * P1) - jf * P2) - jf * P3;
        q[l] = jf as i64;
    }
    let mut sin_out = [0.0; LANES];
    let mut cos_out = [0.0; LANES];
    for l in 0..LANES {
        let rl = r[l];
        let r2 = rl * rl;
        let s = rl
            * (1.0
                + r2 * (-1.0 / 6.0
                    + r2 * (1.0 / 120.0
                        + r2 * (-1.0 / 5040.0
                            + r2 * (1.0 / 362880.0
                                + r2 * (-1.0 / 39916800.0
                                    + r2 * (1.0 / 6227020800.0
                                        + r2 * (-1.0 / 1307674368000.0))))))));
        let c = 1.0
            + r2 * (-0.5
                + r2 * (1.0 / 24.0
                    + r2 * (-1.0 / 720.0
                        + r2 * (1.0 / 40320.0
                            + r2 * (-1.0 / 3628800.0
                                + r2 * (1.0 / 479001600.0
                                    + r2 * (-1.0 / 87178291200.0
                                        + r2 * (1.0 / 20922789888000.0))))))));
        let ql = q[l];
        let swap = (ql & 1) != 0;
        let (s1, c1) = if swap { (c, s) } else { (s, c) };
        let sign_s = if ql & 2 != 0 { -1.0 } else { 1.0 };
        let sign_c = if (ql.wrapping_add(1)) & 2 != 0 { -1.0 } else { 1.0 };
        sin_out[l] = sign_s * s1;
        cos_out[l] = sign_c * c1;
    }
    (sin_out, cos_out)
}

/// Sum of e^{(sigma e_j + base) + i tau e_j} over a batch of exponents,
/// lane-parallel. Lane partial sums are folded in index order, so the
/// result is a deterministic function of the inputs.
pub fn sum_cis(energies: &[f64], sigma: f64, tau: f64, base: f64) -> (f64, f64) {
    let mut re = [0.0f64; LANES];
    let mut im = [0.0f64; LANES];
    let mut iter = energies.chunks_exact(LANES);
    for ch in iter.by_ref() {
        let mut x = [0.0; LANES];
        let mut y = [0.0; LANES];
        for l in 0..LANES {
            x[l] = sigma * ch[l] + base;
            y[l] = tau * ch[l];
        }
        let ex = fexp_lanes(&x);
        let (s, c) = fsincos_lanes(&y);
        for l in 0..LANES {
            re[l] += ex[l] * c[l];
            im[l] += ex[l] * s[l];
        }
    }
    let mut re_total: f64 = re.iter().sum();
    let mut im_total: f64 = im.iter().sum();
    for &e in iter.remainder() {
        let (r, i) = cis_exp(sigma * e + base, tau * e);
        re_total += r;
        im_total += i;
    }
    (re_total, im_total)
}

/// Real-exponent counterpart: sum of e^{sigma e_j + base}.
pub fn sum_exp(energies: &[f64], sigma: f64, base: f64) -> f64 {
    let mut acc = [0.0f64; LANES];
    let mut iter = energies.chunks_exact(LANES);
    for ch in iter.by_ref() {
        let mut x = [0.0; LANES];
        for l in 0..LANES {
            x[l] = sigma * ch[l] + base;
        }
        let ex = fexp_lanes(&x);
        for l in 0..LANES {
            acc[l] += ex[l];
        }
    }
    let mut total: f64 = acc.iter().sum();
    for &e in iter.remainder() {
        total += fexp(sigma * e + base);
    }
    total
}

/// Weighted sums (1, e_j) * e^{(sigma e_j + base) + i tau e_j}: the value
/// and derivative accumulators of the zero finder in one pass.
pub fn sum_cis_weighted(
    energies: &[f64],
    sigma: f64,
    tau: f64,
    base: f64,
) -> ((f64, f64), (f64, f64)) {
    let mut re = [0.0f64; LANES];
    let mut im = [0.0f64; LANES];
    let mut dre = [0.0f64; LANES];
    let mut dim = [0.0f64; LANES];
    let mut iter = energies.chunks_exact(LANES);
    for ch in iter.by_ref() {
        let mut x = [0.0; LANES];
        let mut y = [0.0; LANES];
        for l in 0..LANES {
            x[l] = sigma * ch[l] + base;
            y[l] = tau * ch[l];
        }
        let ex = fexp_lanes(&x);
        let (s, c) = fsincos_lanes(&y);
        for l in 0..LANES {
            let wr = ex[l] * c[l];
            let wi = ex[l] * s[l];
            re[l] += wr;
            im[l] += wi;
            dre[l] += ch[l] * wr;
            dim[l] += ch[l] * wi;
        }
    }
    let mut z = (re.iter().sum::<f64>(), im.iter().sum::<f64>());
    let mut dz = (dre.iter().sum::<f64>(), dim.iter().sum::<f64>());
    for &e in iter.remainder() {
        let (r, i) = cis_exp(sigma * e + base, tau * e);
        z.0 += r;
        z.1 += i;
        dz.0 += e * r;
        dz.1 += e * i;
    }
    (z, dz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fexp_matches_libm() {
        let mut x = -700.0;
        let mut worst = 0.0f64;
        while x < 700.0 {
            let a = fexp(x);
            let b = x.exp();
            let rel = if b == 0.0 { a } else { ((a - b) / b).abs() };
            worst = worst.max(rel);
            x += 0.618;
        }
        assert!(worst < 5e-16, "worst rel err {worst}");
        assert_eq!(fexp(1000.0), f64::INFINITY);
        assert_eq!(fexp(-1000.0), 0.0);
    }

    #[test]
    fn batched_sums_match_scalar_reference() {
        let energies: Vec<f64> = (0..1003)
            .map(|i| ((i * 2654435761u64 % 1000) as f64 - 500.0) / 37.0)
            .collect();
        let (sigma, tau, base) = (0.73, -1.21, 0.4);
        let (re, im) = sum_cis(&energies, sigma, tau, base);
        let mut want_re = 0.0;
        let mut want_im = 0.0;
        for &e in &energies {
            let r = (sigma * e + base).exp();
            want_re += r * (tau * e).cos();
            want_im += r * (tau * e).sin();
        }
        assert!((re - want_re).abs() < 1e-10 * want_re.abs().max(1.0));
        assert!((im - want_im).abs() < 1e-10 * want_im.abs().max(1.0));

        let s = sum_exp(&energies, sigma, base);
        let want: f64 = energies.iter().map(|&e| (sigma * e + base).exp()).sum();
        assert!((s - want).abs() < 1e-12 * want);

        let ((zr, zi), (dr, di)) = sum_cis_weighted(&energies, sigma, tau, base);
        assert!((zr - want_re).abs() < 1e-10 * want_re.abs().max(1.0));
        assert!((zi - want_im).abs() < 1e-10 * want_im.abs().max(1.0));
        let mut wdr = 0.0;
        let mut wdi = 0.0;
        for &e in &energies {
            let r = (sigma * e + base).exp();
            wdr += e * r * (tau * e).cos();
            wdi += e * r * (tau * e).sin();
        }
        assert!((dr - wdr).abs() < 1e-10 * wdr.abs().max(1.0));
        assert!((di - wdi).abs() < 1e-10 * wdi.abs().max(1.0));
    }

    #[test]
    fn fsincos_matches_libm() {
        let mut worst = 0.0f64;
        for i in 0..200_000u64 {
            let y = (i as f64 - 100_000.0) * 17.77;
            let (s, c) = fsincos(y);
            worst = worst.max((s - y.sin()).abs()).max((c - y.cos()).abs());
        }
        assert!(worst < 1e-13, "worst abs err {worst}");
        // unit circle identity
        for i in 0..10_000u64 {
            let y = i as f64 * 0.217 - 1000.0;
            let (s, c) = fsincos(y);
            assert!((s * s + c * c - 1.0).abs() < 1e-14);
        }
    }
}
