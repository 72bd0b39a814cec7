//! Exact finite-size moment and correlation formulas via the overlap
//! decomposition, and the truncated Gaussian toolkit they rest on.
//!
//! All sums over overlap classes accumulate in the log domain: the overlap
//! terms behave like e^{b_l n} and leave the f64 range long before the
//! interesting n.

use crate::error::{GremError, Result};
use crate::logc::LogComplex;
use crate::model::{ModelParams, Normalizers};
use crate::special::{phi_bar_log, phi_log};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// E Z_n(beta) = N_n e^{beta^2 a n / 2}, in log form.
pub fn expectation_log(model: &ModelParams, n: u32, beta: Complex64) -> Result<LogComplex> {
    let ln_total: f64 = model.ln_branching(n)?.iter().sum();
    let expo = 0.5 * beta * beta * model.total_a() * n as f64;
    Ok(LogComplex::from_real(1.0)
        .mul_exp(expo)
        .mul_exp(Complex64::new(ln_total, 0.0)))
}

/// E Z_n(beta); overflows to infinity when the exponent leaves f64 range.
pub fn expectation(model: &ModelParams, n: u32, beta: Complex64) -> Result<Complex64> {
    Ok(expectation_log(model, n, beta)?.to_complex())
}

/// ln of the combinatorial factor of the overlap class l:
/// N_n * (N_{l+1} - 1) * N_{l+2} * ... * N_d  (just N_n for l = d).
fn ln_overlap_count(ln_counts: &[f64], l: usize) -> f64 {
    let d = ln_counts.len();
    let mut acc: f64 = ln_counts.iter().sum();
    if l < d {
        // ln(N - 1) = ln N + ln(1 - 1/N); exact to f64 resolution even for
        // counts far beyond integer range.
        acc += ln_counts[l] + (-(-ln_counts[l]).exp()).ln_1p();
        for &c in &ln_counts[l + 1..] {
            acc += c;
        }
    }
    acc
}

/// Exact overlap term of E[Z_n(b1) Z_n(b2)] for paths sharing l edges:
/// class count times exp(n/2 [(b1+b2)^2 A_{1,l} + (b1^2+b2^2) A_{l+1,d}]).
fn cross_term(
    model: &ModelParams,
    ln_counts: &[f64],
    n: u32,
    b1: Complex64,
    b2: Complex64,
    l: usize,
) -> LogComplex {
    let nf = n as f64;
    let s = b1 + b2;
    let shared = model.partial_a(1, l);
    let free = model.partial_a(l + 1, model.d);
    let expo = 0.5 * nf * (s * s * shared + (b1 * b1 + b2 * b2) * free);
    LogComplex {
        ln_mod: ln_overlap_count(ln_counts, l),
        arg: 0.0,
    }
    .mul_exp(expo)
}

/// Exact finite-n second-moment structure at a single beta.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: u32,
    pub beta: Complex64,
    /// E Z_n in log form.
    pub mean: LogComplex,
    /// ln E |Z_n|^2.
    pub ln_second_abs: f64,
    /// ln Var Z_n (NEG_INFINITY at beta = 0 where Z_n is deterministic).
    pub ln_variance: f64,
    /// ln B_{n,l} for l = 0..d (all overlap terms are positive reals).
    pub ln_overlap: Vec<f64>,
    /// ln |B'_{n,0}| where B'_{n,0} = B_{n,0} - |E Z_n|^2 <= 0.
    pub ln_b0_prime_abs: f64,
    /// Asymptotic growth exponents b_l, l = 0..d.
    pub exponents: Vec<f64>,
    /// Index of the overlap term dominating the variance.
    pub dominant: usize,
    /// Whether |beta| sits on a circle sigma_k/sqrt(2) (variance prefactor 2).
    pub on_ring_boundary: bool,
}

impl MomentReport {
    pub fn mean_value(&self) -> Complex64 {
        self.mean.to_complex()
    }

    pub fn variance(&self) -> f64 {
        self.ln_variance.exp()
    }

    pub fn second_abs(&self) -> f64 {
        self.ln_second_abs.exp()
    }
}

/// Exact mean/variance decomposition by overlap class.
pub fn variance_exact(model: &ModelParams, n: u32, beta: Complex64) -> Result<MomentReport> {
    if n == 0 {
        return Err(GremError::InvalidParameter("n must be >= 1".into()));
    }
    let ln_counts = model.ln_branching(n)?;
    let nf = n as f64;
    let d = model.d;
    let sigma2 = beta.re * beta.re;
    let tau2 = beta.im * beta.im;
    let ln_total: f64 = ln_counts.iter().sum();

    // ln B_{n,l} (real positive: the cross exponents are real here).
    let ln_overlap: Vec<f64> = (0..=d)
        .map(|l| {
            ln_overlap_count(&ln_counts, l)
                + nf * (2.0 * sigma2 * model.partial_a(1, l)
                    + (sigma2 - tau2) * model.partial_a(l + 1, d))
        })
        .collect();
     
    // B'_0 = -N_n^2 / N_{n,1} * e^{(sigma^2-tau^2) a n}, exactly.
    let ln_b0_prime_abs =
        2.0 * ln_total - ln_counts[0] + (sigma2 - tau2) * model.total_a() * nf;

    // E|Z|^2 = sum_l B_l and Var = -|B'_0| + sum_{l>=1} B_l via shifted sums.
    let max_all = ln_overlap.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let second: f64 = ln_overlap.iter().map(|&x| (x - max_all).exp()).sum();
    let ln_second_abs = max_all + second.ln();

    let max_var = ln_overlap[1..]
        .iter()
        .cloned()
        .fold(ln_b0_prime_abs, f64::max);
    let mut var_shifted: f64 = ln_overlap[1..]
        .iter()
        .map(|&x| (x - max_var).exp())
        .sum();
    var_shifted -= (ln_b0_prime_abs - max_var).exp();
    let ln_variance = if var_shifted > 0.0 {
        max_var + var_shifted.ln()
    } else {
        f64::NEG_INFINITY
    };

    let log_alpha = model.log_alpha_total();
    let abs2 = sigma2 + tau2;
    let exponents: Vec<f64> = (0..=d)
        .map(|l| {
            let tail: f64 = ((l + 1)..=d)
                .map(|m| model.log_alpha(m) - abs2 * model.a(m))
                .sum();
            log_alpha + 2.0 * sigma2 * model.total_a() + tail
        })
        .collect();

    let r = beta.norm();
    let mut ring = 0usize;
    let mut on_ring_boundary = false;
    for k in 1..=d {
        let crit = model.sigma(k) / std::f64::consts::SQRT_2;
        if (r - crit).abs() <= 1e-12 * (1.0 + crit) {
            ring = k;
            on_ring_boundary = true;
            break;
        }
        if r > crit {
            ring = k;
        }
    }
    let dominant = ring.max(1);

    Ok(MomentReport {
        n,
        beta,
        mean: expectation_log(model, n, beta)?,
        ln_second_abs,
        ln_variance,
        ln_overlap,
        ln_b0_prime_abs,
        exponents,
        dominant,
        on_ring_boundary,
    })
}

/// Exact pair correlations E[Z(b1) conj(Z(b2))] and E[Z(b1) Z(b2)],
/// decomposed over overlap classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub beta1: Complex64,
    pub beta2: Complex64,
    /// Overlap terms of E[Z(b1) conj Z(b2)], l = 0..d.
    pub cross_conj_terms: Vec<LogComplex>,
    /// Overlap terms of E[Z(b1) Z(b2)], l = 0..d.
    pub cross_plain_terms: Vec<LogComplex>,
    pub cross_conj: LogComplex,
    pub cross_plain: LogComplex,
    /// Centered versions: E[(Z1 - EZ1) conj(Z2 - EZ2)] etc.
    pub cross_conj_centered: LogComplex,
    pub cross_plain_centered: LogComplex,
}

pub fn pair_correlation(
    model: &ModelParams,
    n: u32,
    beta1: Complex64,
    beta2: Complex64,
) -> Result<PairCorrelation> {
    if n == 0 {
        return Err(GremError::InvalidParameter("n must be >= 1".into()));
    }
    let ln_counts = model.ln_branching(n)?;
    let conj_terms: Vec<LogComplex> = (0..=model.d)
        .map(|l| cross_term(model, &ln_counts, n, beta1, beta2.conj(), l))
        .collect();
    let plain_terms: Vec<LogComplex> = (0..=model.d)
        .map(|l| cross_term(model, &ln_counts, n, beta1, beta2, l))
        .collect();
    let cross_conj = LogComplex::sum(conj_terms.iter().copied());
    let cross_plain = LogComplex::sum(plain_terms.iter().copied());
    // Centering cancels almost all of the overlap-0 term; subtracting the
    // mean product numerically would lose the remainder entirely once
    // B_{n,0} dominates, so use the exact closed form
    // B'_0 = -N_n^2 / N_{n,1} * e^{a n (b1^2 + v^2)/2}.
    let nf = n as f64;
    let ln_total: f64 = ln_counts.iter().sum();
    let a = model.total_a();
    let b0_prime = |v: Complex64| {
        LogComplex {
            ln_mod: 2.0 * ln_total - ln_counts[0],
            arg: std::f64::consts::PI,
        }
        .mul_exp(0.5 * nf * a * (beta1 * beta1 + v * v))
    };
    let cross_conj_centered = LogComplex::sum(conj_terms[1..].iter().copied())
        .add(&b0_prime(beta2.conj()));
    let cross_plain_centered =
        LogComplex::sum(plain_terms[1..].iter().copied()).add(&b0_prime(beta2));
    Ok(PairCorrelation {
        beta1,
        beta2,
        cross_conj_terms: conj_terms,
        cross_plain_terms: plain_terms,
        cross_conj,
        cross_plain,
        cross_conj_centered,
        cross_plain_centered,
    })
}

/// Window scaling for local pair correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowScale {
    /// beta = beta* + t/sqrt(n), normalized by g_n (rings) or ghat_n (disk).
    SqrtN,
    /// beta = beta* + t/n, normalized on a variance-boundary circle.
    OverN,
}

/// Normalized local second-order structure at window coordinates (t1, t2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowCov {
    pub cross_conj: Complex64,
    pub cross_plain: Complex64,
    pub cross_conj_centered: Complex64,
    pub cross_plain_centered: Complex64,
    pub mean_t1: Complex64,
}

/// Exact finite-n covariances of the window process, normalized by the
/// scaling-adapted sequences so the n -> infinity limits are O(1).
pub fn window_pair_correlation(
    model: &ModelParams,
    n: u32,
    beta_star: Complex64,
    t1: Complex64,
    t2: Complex64,
    scale: WindowScale,
) -> Result<WindowCov> {
    let norms = Normalizers::new(model, n)?;
    let nf = n as f64;
    let (b1, b2, norm1, norm2) = match scale {
        WindowScale::SqrtN => {
            let b1 = beta_star + t1 / nf.sqrt();
            let b2 = beta_star + t2 / nf.sqrt();
            let r = beta_star.norm();
            let below_first = r < model.sigma(1) / std::f64::consts::SQRT_2;
            let (n1, n2) = if below_first {
                (norms.g_hat_n(beta_star, t1), norms.g_hat_n(beta_star, t2))
            } else {
                (norms.g_n(beta_star, t1)?, norms.g_n(beta_star, t2)?)
            };
            (b1, b2, n1, n2)
        }
        WindowScale::OverN => {
            let b1 = beta_star + t1 / nf;
            let b2 = beta_star + t2 / nf;
            let r = beta_star.norm();
            let mut k = 0usize;
            for m in 1..=model.d {
                if (r - model.sigma(m) / std::f64::consts::SQRT_2).abs() < 1e-9 {
                    k = m;
                }
            }
            if k == 0 {
                return Err(GremError::PhaseBoundary(
                    "1/n window scaling requires |beta*| on a circle sigma_k/sqrt(2)".into(),
                ));
            }
            let norm = if k >= 2 {
                let rep = variance_exact(model, n, beta_star)?;
                Complex64::new(0.5 * rep.exponents[k] * nf, 0.0)
            } else {
                // k = 1: N_n^{-1} e^{-beta*^2 a n / 2} per factor.
                let ln_total: f64 = model.ln_branching(n)?.iter().sum();
                Complex64::new(ln_total, 0.0) + 0.5 * beta_star * beta_star * model.total_a() * nf
            };
            (b1, b2, norm, norm)
        }
    };
    let pc = pair_correlation(model, n, b1, b2)?;
    let scale_conj = LogComplex::from_exponent(norm1 + norm2.conj());
    let scale_plain = LogComplex::from_exponent(norm1 + norm2);
    let mean_t1 = expectation_log(model, n, b1)?
        .div(&LogComplex::from_exponent(norm1))
        .to_complex();
    Ok(WindowCov {
        cross_conj: pc.cross_conj.div(&scale_conj).to_complex(),
        cross_plain: pc.cross_plain.div(&scale_plain).to_complex(),
        cross_conj_centered: pc.cross_conj_centered.div(&scale_conj).to_complex(),
        cross_plain_centered: pc.cross_plain_centered.div(&scale_plain).to_complex(),
        mean_t1,
    })
}

/// Which side of the threshold the truncated Gaussian moment keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationSide {
    Above,
    Below,
}

/// E[e^{w xi} 1_{xi > a}] = e^{w^2/2} PhiBar(a - w) (and the mirror image
/// for the lower tail), for standard normal xi and complex w.
pub fn gauss_truncated_moment_log(w: Complex64, a: f64, side: TruncationSide) -> LogComplex {
    let arg = Complex64::new(a, 0.0) - w;
    let tail = match side {
        TruncationSide::Above => phi_bar_log(arg),
        TruncationSide::Below => phi_log(arg),
    };
    tail.mul_exp(0.5 * w * w)
}

pub fn gauss_truncated_moment(w: Complex64, a: f64, side: TruncationSide) -> Complex64 {
    gauss_truncated_moment_log(w, a, side).to_complex()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, BranchingRule};
    use crate::quad;
    use std::collections::BTreeMap;

    fn rem() -> ModelParams {
        build_model(1, vec![2.0], vec![std::f64::consts::E], BranchingRule::Floor).unwrap()
    }

    #[test]
    fn expectation_closed_form() {
        let m = rem();
        // beta = 0: exactly N_n.
        let e0 = expectation(&m, 4, Complex64::new(0.0, 0.0)).unwrap();
        assert!((e0 - Complex64::new(54.0, 0.0)).norm() < 1e-10);
        // beta = 1: 54 e^4.
        let e1 = expectation(&m, 4, Complex64::new(1.0, 0.0)).unwrap();
        assert!((e1.re / (54.0 * 4.0f64.exp()) - 1.0).abs() < 1e-12);
        assert!(e1.im.abs() < 1e-9);
        // beta = i: 54 e^{-4}.
        let ei = expectation(&m, 4, Complex64::new(0.0, 1.0)).unwrap();
        assert!((ei.re / (54.0 * (-4.0f64).exp()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_zero_at_beta_zero() {
        let m = rem();
        let rep = variance_exact(&m, 5, Complex64::new(0.0, 0.0)).unwrap();
        // Exact cancellation: Z_n(0) = N_n deterministically.
        assert!(
            rep.ln_variance == f64::NEG_INFINITY || rep.ln_variance < rep.ln_second_abs - 25.0
        );
    }

    #[test]
    fn overlap_sum_matches_brute_force_tiny_tree() {
        // d = 2, N = (2, 2), n = 2: enumerate all 16 path pairs directly.
        let mut tables = BTreeMap::new();
        tables.insert(2u32, vec![2u64, 2u64]);
        let m = build_model(
            2,
            vec![0.7, 1.3],
            vec![1.4, 2.2],
            BranchingRule::Explicit(tables),
        )
        .unwrap();
        let beta = Complex64::new(0.35, 0.55);
        let n = 2u32;
        let nf = n as f64;
        // paths (i, j), overlap of ((i,j),(i',j')): 2 if same, 1 if i=i', else 0
        let mut direct = Complex64::new(0.0, 0.0);
        for i1 in 0..2u8 {
            for j1 in 0..2u8 {
                for i2 in 0..2u8 {
                    for j2 in 0..2u8 {
                        let l = if i1 == i2 && j1 == j2 {
                            2
                        } else if i1 == i2 {
                            1
                        } else {
                            0
                        };
                        let shared = m.partial_a(1, l);
                        let free = m.partial_a(l + 1, 2);
                        let s = beta + beta.conj();
                        let e = 0.5
                            * nf
                            * (s * s * shared
                                + (beta * beta + beta.conj() * beta.conj()) * free);
                        direct += e.exp();
                    }
                }
            }
        }
        let rep = variance_exact(&m, n, beta).unwrap();
        assert!(
            (rep.ln_second_abs - direct.re.ln()).abs() < 1e-12,
            "overlap {} vs direct {}",
            rep.ln_second_abs,
            direct.re.ln()
        );
        assert!(direct.im.abs() < 1e-10 * direct.re);
    }

    #[test]
    fn variance_log_scale_exponent() {
        // (1/n) log Var approaches b_k on the ring sigma_k/sqrt(2)<|beta|<sigma_{k+1}/sqrt(2).
        let m = build_model(
            2,
            vec![2.0, 2.0],
            vec![std::f64::consts::E, std::f64::consts::E.powi(2)],
            BranchingRule::Floor,
        )
        .unwrap();
        let beta = Complex64::new(0.5, 0.65); // |beta| ~ 0.82 in ring 1 (0.707, 1)
        let mut prev_err = f64::INFINITY;
        for n in [20u32, 40, 80] {
            let rep = variance_exact(&m, n, beta).unwrap();
            let err = (rep.ln_variance / n as f64 - rep.exponents[1]).abs();
            assert!(err < prev_err + 1e-12, "n = {n}: {err} vs {prev_err}");
            prev_err = err;
        }
        assert!(prev_err < 0.05, "final gap {prev_err}");
    }

    #[test]
    fn pair_correlation_consistency() {
        let m = rem();
        let beta = Complex64::new(0.3, 0.4);
        let pc = pair_correlation(&m, 6, beta, beta).unwrap();
        let rep = variance_exact(&m, 6, beta).unwrap();
        assert!((pc.cross_conj.ln_mod - rep.ln_second_abs).abs() < 1e-10);
        assert!(crate::logc::reduce_arg(pc.cross_conj.arg).abs() < 1e-10);
        // centered conj-moment equals the variance
        assert!((pc.cross_conj_centered.ln_mod - rep.ln_variance).abs() < 1e-8);
    }

    #[test]
    fn real_beta_star_cross_moment_relation() {
        // E[Z(t1) Z(t2)] = E[Z(t1) conj Z(conj t2)] exactly for real beta*.
        let m = rem();
        let bs = Complex64::new(0.4, 0.0);
        let t1 = Complex64::new(0.3, 0.7);
        let t2 = Complex64::new(-0.2, 0.5);
        let nf = 9f64;
        let b1 = bs + t1 / nf.sqrt();
        let b2 = bs + t2 / nf.sqrt();
        let plain = pair_correlation(&m, 9, b1, b2).unwrap().cross_plain;
        let conj_of_reflected = pair_correlation(&m, 9, b1, bs + t2.conj() / nf.sqrt())
            .unwrap()
            .cross_conj;
        assert!((plain.ln_mod - conj_of_reflected.ln_mod).abs() < 1e-10);
        assert!(
            crate::logc::reduce_arg(plain.arg - conj_of_reflected.arg).abs() < 1e-10
        );
    }

    #[test]
    fn window_covariance_ring_limit() {
        // Ring k = 1 of the canonical two-level model: normalized
        // E[Z*(t1) conj Z*(t2)] -> exp(-A_{1,1} (t1 - conj t2)^2 / 2).
        let m = build_model(
            2,
            vec![2.0, 2.0],
            vec![std::f64::consts::E, std::f64::consts::E.powi(2)],
            BranchingRule::Floor,
        )
        .unwrap();
        let bs = Complex64::new(0.5, 0.65);
        let t1 = Complex64::new(0.4, -0.3);
        let t2 = Complex64::new(-0.1, 0.2);
        let w = window_pair_correlation(&m, 30, bs, t1, t2, WindowScale::SqrtN).unwrap();
        let dt = t1 - t2.conj();
        let want = (-0.5 * 2.0 * dt * dt).exp();
        assert!(
            (w.cross_conj_centered - want).norm() < 5e-2,
            "got {}, want {want}",
            w.cross_conj_centered
        );
        // plain cross-moment vanishes in the limit for nonreal beta*
        assert!(w.cross_plain_centered.norm() < 5e-2);
    }

    #[test]
    fn window_covariance_disk_limit() {
        // |beta*| < sigma_1/sqrt(2): centered covariance -> e^{-a_1 (t1 - conj t2)^2/2}.
        let m = rem();
        let bs = Complex64::new(0.2, 0.4);
        let t1 = Complex64::new(0.2, 0.1);
        let t2 = Complex64::new(-0.3, 0.4);
        let w = window_pair_correlation(&m, 60, bs, t1, t2, WindowScale::SqrtN).unwrap();
        let dt = t1 - t2.conj();
        let want = (-0.5 * 2.0 * dt * dt).exp();
        assert!(
            (w.cross_conj_centered - want).norm() < 5e-2,
            "got {} want {want}", w.cross_conj_centered
        );
    }

    #[test]
    fn window_covariance_boundary_circle() {
        // |beta*| = sigma_2/sqrt(2) = 1 (canonical model): two-ray structure
        // e^{t1 l_k + conj t2 conj l_k} + e^{t1 l_{k-1} + conj t2 conj l_{k-1}}.
        let m = build_model(
            2,
            vec![2.0, 2.0],
            vec![std::f64::consts::E, std::f64::consts::E.powi(2)],
            BranchingRule::Floor,
        )
        .unwrap();
        let bs = Complex64::from_polar(1.0, 0.9);
        let t1 = Complex64::new(0.5, -0.2);
        let t2 = Complex64::new(0.1, 0.3);
        let w = window_pair_correlation(&m, 400, bs, t1, t2, WindowScale::OverN).unwrap();
        let lam = |l: usize| 2.0 * bs.re * m.partial_a(1, l) + bs * m.partial_a(l + 1, 2);
        let want = (t1 * lam(2) + t2.conj() * lam(2).conj()).exp()
            + (t1 * lam(1) + t2.conj() * lam(1).conj()).exp();
        assert!(
            (w.cross_conj - want).norm() < 0.1 * want.norm(),
            "got {}, want {want}",
            w.cross_conj
        );
    }

    #[test]
    fn truncated_moment_degenerate_cases() {
        // w = 0: the moment is the plain tail probability.
        let v = gauss_truncated_moment(Complex64::new(0.0, 0.0), 1.3, TruncationSide::Above);
        assert!((v.re - crate::special::phi_bar_real(1.3)).abs() < 1e-14);
        let v2 = gauss_truncated_moment(Complex64::new(0.0, 0.0), 1.3, TruncationSide::Below);
        assert!((v2.re - crate::special::phi_real(1.3)).abs() < 1e-14);
        // a -> -inf: the full moment generating function e^{w^2/2}.
        let w = Complex64::new(0.7, -1.1);
        let full = gauss_truncated_moment(w, -40.0, TruncationSide::Above);
        let want = (0.5 * w * w).exp();
        assert!((full - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn truncated_moment_against_quadrature() {
        // E[e^{w xi} 1_{xi > 2}] with w = 1 + i, checked by direct quadrature.
        let w = Complex64::new(1.0, 1.0);
        let got = gauss_truncated_moment(w, 2.0, TruncationSide::Above);
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let want = quad::integrate_to_infinity(
            |t| (w * t - Complex64::new(0.5 * t * t, 0.0)).exp() / norm,
            2.0,
            1e-14,
        );
        assert!((got - want).norm() < 1e-10 * (1.0 + want.norm()), "{got} vs {want}");
        let below = gauss_truncated_moment(w, 2.0, TruncationSide::Below);
        let full = (0.5 * w * w).exp();
        assert!((got + below - full).norm() < 1e-12 * full.norm());
    }
}
