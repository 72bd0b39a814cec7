//! Model parameters of the hierarchical energy tree, derived constants and
//! the normalizing sequences used by every other module.
//!
//! A model has `d` levels; level `k` carries variance `a_k` and branching
//! exponent `alpha_k > 1`, with critical temperatures
//! `sigma_k = sqrt(2 log alpha_k / a_k)` required strictly increasing.
//! Level indices are 1-based on every public surface.

use crate::error::{GremError, Result};
use crate::logc::reduce_arg;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_LEAF_BUDGET: u64 = 10_000_000;

/// Complex inverse temperature beta = sigma + i tau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexTemp {
    pub sigma: f64,
    pub tau: f64,
}

impl ComplexTemp {
    pub fn new(sigma: f64, tau: f64) -> Self {
        ComplexTemp { sigma, tau }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.tau)
    }
}

impl From<Complex64> for ComplexTemp {
    fn from(z: Complex64) -> Self {
        ComplexTemp {
            sigma: z.re,
            tau: z.im,
        }
    }
}

impl std::str::FromStr for ComplexTemp {
    type Err = GremError;

    /// Parses "0.3", "0.3+0.1i", "-0.2-1.5i", "1.2i".
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace(' ', "");
        let bad = || GremError::InvalidParameter(format!("cannot parse complex number `{s}`"));
        if let Some(body) = t.strip_suffix('i') {
            // Find the split between real and imaginary parts: the last
            // +/- that is not part of an exponent and not leading.
            let bytes = body.as_bytes();
            let mut split = None;
            for i in (1..bytes.len()).rev() {
                let c = bytes[i] as char;
                if (c == '+' || c == '-') && !matches!(bytes[i - 1] as char, 'e' | 'E') {
                    split = Some(i);
                    break;
                }
            }
            match split {
                Some(i) => {
                    let re: f64 = body[..i].parse().map_err(|_| bad())?;
                    let im_str = &body[i..];
                    let im: f64 = if im_str == "+" {
                        1.0
                    } else if im_str == "-" {
                        -1.0
                    } else {
                        im_str.parse().map_err(|_| bad())?
                    };
                    Ok(ComplexTemp::new(re, im))
                }
                None => {
                    let im: f64 = match body {
                        "" | "+" => 1.0,
                        "-" => -1.0,
                        other => other.parse().map_err(|_| bad())?,
                    };
                    Ok(ComplexTemp::new(0.0, im))
                }
            }
        } else {
            let re: f64 = t.parse().map_err(|_| bad())?;
            Ok(ComplexTemp::new(re, 0.0))
        }
    }
}

/// How the branching numbers N_{n,k} are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchingRule {
    /// N_{n,k} = floor(alpha_k^n).
    Floor,
    /// User-supplied tables keyed by n (regression fixtures).
    Explicit(BTreeMap<u32, Vec<u64>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub a: Vec<f64>,
    pub alpha: Vec<f64>,
    #[serde(default = "default_branching")]
    pub branching: BranchingRule,
    #[serde(skip)]
    sigma: Vec<f64>,
}

fn default_branching() -> BranchingRule {
    BranchingRule::Floor
}

/// Validates parameters and computes the critical temperatures.
pub fn build_model(
    d: usize,
    a: Vec<f64>,
    alpha: Vec<f64>,
    branching: BranchingRule,
) -> Result<ModelParams> {
    if d == 0 {
        return Err(GremError::InvalidParameter("d must be >= 1".into()));
    }
    if a.len() != d || alpha.len() != d {
        return Err(GremError::InvalidParameter(format!(
            "expected {d} entries in a and alpha, got {} and {}",
            a.len(),
            alpha.len()
        )));
    }
    for (k, &ak) in a.iter().enumerate() {
        if !(ak > 0.0) || !ak.is_finite() {
            return Err(GremError::InvalidParameter(format!(
                "a_{} = {ak} must be positive",
                k + 1
            )));
        }
    }
    for (k, &al) in alpha.iter().enumerate() {
        if !(al > 1.0) || !al.is_finite() {
            return Err(GremError::InvalidParameter(format!(
                "alpha_{} = {al} must exceed 1",
                k + 1
            )));
        }
    }
    let sigma: Vec<f64> = a
        .iter()
        .zip(&alpha)
        .map(|(&ak, &al)| (2.0 * al.ln() / ak).sqrt())
        .collect();
    for k in 1..d {
        if sigma[k] <= sigma[k - 1] {
            return Err(GremError::ConvexityViolation {
                k: k + 1,
                previous: sigma[k - 1],
                current: sigma[k],
            });
        }
    }
    Ok(ModelParams {
        d,
        a,
        alpha,
        branching,
        sigma,
    })
}

impl ModelParams {
    pub fn from_json(s: &str) -> Result<ModelParams> {
        let raw: ModelParams = serde_json::from_str(s)?;
        build_model(raw.d, raw.a, raw.alpha, raw.branching)
    }

    /// Critical inverse temperature of level k (1-based).
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma[k - 1]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigma
    }

    /// Level variance a_k (1-based).
    pub fn a(&self, k: usize) -> f64 {
        self.a[k - 1]
    }

    /// Total variance a = a_1 + ... + a_d.
    pub fn total_a(&self) -> f64 {
        self.a.iter().sum()
    }

    /// Partial variance A_{l,m} = a_l + ... + a_m (1-based, 0 if l > m).
    pub fn partial_a(&self, l: usize, m: usize) -> f64 {
        if l > m {
            return 0.0;
        }
        self.a[l - 1..m].iter().sum()
    }

    pub fn log_alpha(&self, k: usize) -> f64 {
        self.alpha[k - 1].ln()
    }

    pub fn log_alpha_total(&self) -> f64 {
        self.alpha.iter().map(|x| x.ln()).sum()
    }

    /// ln N_{n,k} for all levels. For the floor rule the value is
    /// ln(floor(alpha_k^n)) while that is exactly representable and the
    /// smooth n log(alpha_k) beyond (the floor is then below the f64
    /// resolution of the logarithm). Never overflows, so the exact-moment
    /// layer can run at any n.
    pub fn ln_branching(&self, n: u32) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(GremError::InvalidParameter(
                "tree depth parameter n must be >= 1".into(),
            ));
        }
        match &self.branching {
            BranchingRule::Floor => self
                .alpha
                .iter()
                .enumerate()
                .map(|(k, &al)| {
                    let ln_smooth = al.ln() * n as f64;
                    if ln_smooth < 36.0 {
                        let v = al.powi(n as i32).floor();
                        if v < 2.0 {
                            return Err(GremError::InvalidParameter(format!(
                                "N_{{{n},{}}} = {v} < 2",
                                k + 1
                            )));
                        }
                        Ok(v.ln())
                    } else {
                        Ok(ln_smooth)
                    }
                })
                .collect(),
            BranchingRule::Explicit(_) => Ok(self
                .branching_numbers(n)?
                .iter()
                .map(|&c| (c as f64).ln())
                .collect()),
        }
    }

    /// Branching numbers N_{n,1..d} as integers, for tree materialization.
    pub fn branching_numbers(&self, n: u32) -> Result<Vec<u64>> {
        if n == 0 {
            return Err(GremError::InvalidParameter(
                "tree depth parameter n must be >= 1".into(),
            ));
        }
        let counts: Vec<u64> = match &self.branching {
            BranchingRule::Floor => self
                .alpha
                .iter()
                .map(|&al| {
                    let v = al.powi(n as i32);
                    if v.is_finite() && v < 1.8e19 {
                        Ok(v.floor() as u64)
                    } else {
                        Err(GremError::Overflow(n))
                    }
                })
                .collect::<Result<_>>()?,
            BranchingRule::Explicit(tables) => tables
                .get(&n)
                .cloned()
                .ok_or_else(|| {
                    GremError::InvalidParameter(format!("no explicit branching table for n = {n}"))
                })?
                .to_vec(),
        };
        if counts.len() != self.d {
            return Err(GremError::InvalidParameter(format!(
                "branching table for n = {n} has {} levels, model has {}",
                counts.len(),
                self.d
            )));
        }
        for (k, &c) in counts.iter().enumerate() {
            if c < 2 {
                return Err(GremError::InvalidParameter(format!(
                    "N_{{{n},{}}} = {c} < 2",
                    k + 1
                )));
            }
        }
        Ok(counts)
    }

    /// Total number of leaves N_n, checked against the leaf budget.
    pub fn total_leaves(&self, n: u32) -> Result<u64> {
        let counts = self.branching_numbers(n)?;
        let budget = leaf_budget();
        let mut total: u128 = 1;
        for &c in &counts {
            total = total.saturating_mul(c as u128);
            if total > budget as u128 {
                return Err(GremError::LeafBudgetExceeded {
                    requested: total,
                    budget,
                });
            }
        }
        Ok(total as u64)
    }
}

/// Leaf budget, overridable through the GREM_LEAF_BUDGET environment variable.
pub fn leaf_budget() -> u64 {
    std::env::var("GREM_LEAF_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_LEAF_BUDGET)
}

/// Solves sqrt(2 pi) u e^{u^2/2} = N by Newton iteration in log form,
/// starting from u0 = sqrt(2 log N). Relative residual <= 1e-12.
pub fn solve_u(n_points: f64) -> Result<f64> {
    if !(n_points >= 2.0) {
        return Err(GremError::InvalidParameter(format!(
            "solve_u requires N >= 2, got {n_points}"
        )));
    }
    solve_u_from_ln(n_points.ln())
}

/// Same equation with the target supplied as log N (usable for N beyond
/// f64 range).
pub fn solve_u_from_ln(log_target: f64) -> Result<f64> {
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let g = |u: f64| half_log_2pi + u.ln() + 0.5 * u * u - log_target;
    let mut u = (2.0 * log_target).sqrt();
    for _ in 0..100 {
        let val = g(u);
        if val.abs() < 1e-14 {
            return Ok(u);
        }
        let deriv = 1.0 / u + u;
        let mut step = val / deriv;
        // keep the iterate positive
        while u - step <= 0.0 {
            step *= 0.5;
        }
        u -= step;
    }
    if g(u).abs() < 1e-12 {
        Ok(u)
    } else {
        Err(GremError::NonConvergence(log_target.exp()))
    }
}

/// Which normalizing sequence [`Normalizers::evaluate`] should produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizerKind {
    /// c_n(beta): sum of the per-level phase-adapted normalizers.
    CN,
    /// c_n without the first level.
    CNTilde,
    /// g_n(beta*; t): window normalizer at 1/sqrt(n) scale inside the rings.
    GN,
    /// ghat_n(beta*; t): variant with the first level always on the
    /// fluctuation normalization (disk |beta*| < sigma_1/sqrt(2)).
    GHatN,
    /// h_{n,l}(t): beak-window normalizer.
    HNL(usize),
    /// f_n(beta*; t): arc-window normalizer (needs the phase word of beta*).
    FN,
    /// r_n(beta): vertical-boundary normalizer for sigma = sigma_l/2.
    RN(usize),
    /// d_{n,l}: beak-window offset sequence.
    DNL(usize),
}

impl std::str::FromStr for NormalizerKind {
    type Err = GremError;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_lowercase();
        if let Some(rest) = t.strip_prefix("h_") {
            return Ok(NormalizerKind::HNL(parse_level(rest, s)?));
        }
        if let Some(rest) = t.strip_prefix("d_") {
            return Ok(NormalizerKind::DNL(parse_level(rest, s)?));
        }
        if let Some(rest) = t.strip_prefix("r_") {
            return Ok(NormalizerKind::RN(parse_level(rest, s)?));
        }
        match t.as_str() {
            "c_n" | "c" => Ok(NormalizerKind::CN),
            "c_n_tilde" | "c_tilde" | "ctilde" => Ok(NormalizerKind::CNTilde),
            "g_n" | "g" => Ok(NormalizerKind::GN),
            "g_hat_n" | "ghat" | "g_hat" => Ok(NormalizerKind::GHatN),
            "f_n" | "f" => Ok(NormalizerKind::FN),
            _ => Err(GremError::UnknownKind(s.to_string())),
        }
    }
}

fn parse_level(rest: &str, original: &str) -> Result<usize> {
    rest.parse()
        .map_err(|_| GremError::UnknownKind(original.to_string()))
}

/// Per-(model, n) normalizing data: the exact tail solutions u_{n,k} and all
/// normalizing exponents. Values returned are exponents; the normalizer
/// itself is their exp.
#[derive(Debug, Clone)]
pub struct Normalizers<'m> {
    pub model: &'m ModelParams,
    pub n: u32,
    pub ln_counts: Vec<f64>,
    pub u: Vec<f64>,
}

impl<'m> Normalizers<'m> {
    pub fn new(model: &'m ModelParams, n: u32) -> Result<Self> {
        let ln_counts = model.ln_branching(n)?;
        let u = ln_counts
            .iter()
            .map(|&c| solve_u_from_ln(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Normalizers {
            model,
            n,
            ln_counts,
            u,
        })
    }

    /// u_{n,k}, 1-based.
    pub fn u(&self, k: usize) -> f64 {
        self.u[k - 1]
    }

    pub fn log_count(&self, k: usize) -> f64 {
        self.ln_counts[k - 1]
    }

    /// c_{n,k}(beta) per level; errs on a phase boundary of level k.
    /// The glassy case carries the sign convention sgn(sigma) so negative
    /// real parts are admissible.
    pub fn c_level(&self, k: usize, beta: Complex64) -> Result<Complex64> {
        use crate::phase::{classify_level, LevelPhase};
        let nf = self.n as f64;
        let ak = self.model.a(k);
        match classify_level(self.model, beta, k) {
            LevelPhase::Glassy => {
                let sgn = if beta.re >= 0.0 { 1.0 } else { -1.0 };
                Ok(beta * (sgn * (nf * ak).sqrt() * self.u(k)))
            }
            LevelPhase::Fluctuation => Ok(Complex64::new(
                0.5 * self.log_count(k) + ak * beta.re * beta.re * nf,
                0.0,
            )),
            LevelPhase::Expectation => {
                Ok(Complex64::new(self.log_count(k), 0.0) + 0.5 * ak * beta * beta * nf)
            }
            other => Err(GremError::PhaseBoundary(format!(
                "c_{{n,{k}}} at beta = {beta} ({other:?})"
            ))),
        }
    }

    /// c_n(beta) = sum of c_{n,k}(beta).
    pub fn c_n(&self, beta: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=self.model.d {
            acc += self.c_level(k, beta)?;
        }
        Ok(acc)
    }

    /// c~_n(beta): levels 2..d only.
    pub fn c_n_tilde(&self, beta: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 2..=self.model.d {
            acc += self.c_level(k, beta)?;
        }
        Ok(acc)
    }

    /// g_{n,l}(beta*; t): ring-window normalizer of level l.
    pub fn g_level(&self, l: usize, beta_star: Complex64, t: Complex64) -> Result<Complex64> {
        let nf = self.n as f64;
        let al = self.model.a(l);
        let r = beta_star.norm();
        let crit = self.model.sigma(l) / std::f64::consts::SQRT_2;
        if (r - crit).abs() < 1e-12 {
            return Err(GremError::PhaseBoundary(format!(
                "g_{{n,{l}}} on the circle |beta*| = sigma_{l}/sqrt(2)"
            )));
        }
        if r > crit {
            let s = Complex64::new(nf.sqrt() * beta_star.re, 0.0) + t;
            Ok(Complex64::new(0.5 * self.log_count(l), 0.0) + al * s * s)
        } else {
            let s = nf.sqrt() * beta_star + t;
            Ok(Complex64::new(self.log_count(l), 0.0) + 0.5 * al * s * s)
        }
    }

    /// g_n(beta*; t) = sum of g_{n,l}.
    pub fn g_n(&self, beta_star: Complex64, t: Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for l in 1..=self.model.d {
            acc += self.g_level(l, beta_star, t)?;
        }
        Ok(acc)
    }

    /// ghat_n(beta*; t): first level forced to the fluctuation form,
    /// remaining levels on the expectation form.
    pub fn g_hat_n(&self, beta_star: Complex64, t: Complex64) -> Complex64 {
        let nf = self.n as f64;
        let s1 = Complex64::new(nf.sqrt() * beta_star.re, 0.0) + t;
        let mut acc = Complex64::new(0.5 * self.log_count(1), 0.0) + self.model.a(1) * s1 * s1;
        for l in 2..=self.model.d {
            let s = nf.sqrt() * beta_star + t;
            acc += Complex64::new(self.log_count(l), 0.0) + 0.5 * self.model.a(l) * s * s;
        }
        acc
    }

    /// d_{n,l}: the canonical O(log n) member of the 2 pi i Z coset
    /// d + beta* log(4 pi n log alpha_l)/(2 sigma_l) - i n a_l tau*^2.
    pub fn d_n_l(&self, l: usize, beta_star: Complex64) -> Result<Complex64> {
        check_beak_point(self.model, l, beta_star)?;
        let nf = self.n as f64;
        let sl = self.model.sigma(l);
        let al = self.model.a(l);
        let tau = beta_star.im;
        let lognorm = (4.0 * std::f64::consts::PI * nf * self.model.log_alpha(l)).ln();
        let w = -beta_star * (lognorm / (2.0 * sl)) + Complex64::new(0.0, nf * al * tau * tau);
        let two_pi = 2.0 * std::f64::consts::PI;
        let k = (w.im / two_pi).round();
        Ok(w - Complex64::new(0.0, two_pi * k))
    }

    /// The beak-window coordinate map
    /// beta_{n,l}(t) = beta* + e^{-3 pi i/4} (d_{n,l} + t) / (sqrt(2) a_l tau* n).
    pub fn beak_window(&self, l: usize, beta_star: Complex64, t: Complex64) -> Result<Complex64> {
        let d = self.d_n_l(l, beta_star)?;
        let al = self.model.a(l);
        let tau = beta_star.im;
        let nf = self.n as f64;
        let dir = Complex64::from_polar(1.0, -3.0 * std::f64::consts::FRAC_PI_4);
        Ok(beta_star + dir * (d + t) / (std::f64::consts::SQRT_2 * al * tau * nf))
    }

    /// h_{n,l}(t): normalizer paired with [`Self::beak_window`].
    pub fn h_n_l(&self, l: usize, beta_star: Complex64, t: Complex64) -> Result<Complex64> {
        let b = self.beak_window(l, beta_star, t)?;
        let nf = self.n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=l {
            acc += b * ((nf * self.model.a(j)).sqrt() * self.u(j));
        }
        for j in (l + 1)..=self.model.d {
            acc += Complex64::new(self.log_count(j), 0.0) + 0.5 * b * b * nf * self.model.a(j);
        }
        Ok(acc)
    }

    /// hhat_{n,l}(beta*): the exactly-on-the-boundary normalizer with levels
    /// 1..l-1 glassy and levels l..d on expectation.
    pub fn h_hat_n_l(&self, l: usize, beta_star: Complex64) -> Result<Complex64> {
        check_beak_point(self.model, l, beta_star)?;
        let nf = self.n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..l {
            acc += beta_star * ((nf * self.model.a(j)).sqrt() * self.u(j));
        }
        for j in l..=self.model.d {
            acc += Complex64::new(self.log_count(j), 0.0)
                + 0.5 * beta_star * beta_star * nf * self.model.a(j);
        }
        Ok(acc)
    }

    /// f_n(beta*; t): arc-window normalizer, linear in t, with the phase
    /// word (d1, d2) of beta* supplied by the caller since beta* sits on the
    /// boundary between F_{d1+d2} and E_{d1+d2}.
    pub fn f_n(&self, d1: usize, d2: usize, beta_star: Complex64, t: Complex64) -> Complex64 {
        let nf = self.n as f64;
        let sigma_star = beta_star.re;
        let mut acc = Complex64::new(0.0, 0.0);
        let shifted = beta_star + t / nf;
        for j in 1..=d1 {
            acc += shifted * ((nf * self.model.a(j)).sqrt() * self.u(j));
        }
        for j in (d1 + 1)..=(d1 + d2) {
            acc += Complex64::new(
                0.5 * self.log_count(j) + self.model.a(j) * sigma_star * sigma_star * nf,
                0.0,
            );
        }
        for j in (d1 + d2 + 1)..=self.model.d {
            acc += Complex64::new(self.log_count(j), 0.0)
                + 0.5 * self.model.a(j) * beta_star * beta_star * nf;
        }
        acc
    }

    /// r_n(beta) for sigma = sigma_l/2, tau >= sigma_l/2: levels 1..l-1
    /// glassy, levels l..k fluctuation, levels k+1..d expectation, where k
    /// is the variance-dominant ring index of |beta|. On a ring boundary
    /// |beta| = sigma_k/sqrt(2), k > l, adds log(2)/2.
    pub fn r_n(&self, l: usize, beta: Complex64) -> Result<Complex64> {
        let sl = self.model.sigma(l);
        if (beta.re - sl / 2.0).abs() > 1e-9 || beta.im < sl / 2.0 - 1e-9 {
            return Err(GremError::GeometryError(format!(
                "r_n expects sigma = sigma_{l}/2 and tau >= sigma_{l}/2, got beta = {beta}"
            )));
        }
        let nf = self.n as f64;
        let r = beta.norm();
        let mut k = l;
        let mut half_log2 = 0.0;
        for m in (l + 1)..=self.model.d {
            let cm = self.model.sigma(m) / std::f64::consts::SQRT_2;
            if (r - cm).abs() < 1e-12 {
                k = m;
                half_log2 = 0.5 * 2.0_f64.ln();
                break;
            }
            if r > cm {
                k = m;
            }
        }
        let sigma = beta.re;
        let mut acc = Complex64::new(half_log2, 0.0);
        for j in 1..l {
            acc += beta * ((nf * self.model.a(j)).sqrt() * self.u(j));
        }
        for j in l..=k {
            acc += Complex64::new(
                0.5 * self.log_count(j) + self.model.a(j) * sigma * sigma * nf,
                0.0,
            );
        }
        for j in (k + 1)..=self.model.d {
            acc += Complex64::new(self.log_count(j), 0.0)
                + 0.5 * beta * beta * nf * self.model.a(j);
        }
        Ok(acc)
    }

    /// Dispatch for the CLI `normalizer` surface.
    pub fn evaluate(
        &self,
        kind: NormalizerKind,
        beta: Complex64,
        t: Option<Complex64>,
        word: Option<(usize, usize)>,
    ) -> Result<Complex64> {
        let t = t.unwrap_or(Complex64::new(0.0, 0.0));
        match kind {
            NormalizerKind::CN => self.c_n(beta),
            NormalizerKind::CNTilde => self.c_n_tilde(beta),
            NormalizerKind::GN => self.g_n(beta, t),
            NormalizerKind::GHatN => Ok(self.g_hat_n(beta, t)),
            NormalizerKind::HNL(l) => self.h_n_l(l, beta, t),
            NormalizerKind::DNL(l) => self.d_n_l(l, beta),
            NormalizerKind::RN(l) => self.r_n(l, beta),
            NormalizerKind::FN => {
                let (d1, d2) = word.ok_or_else(|| {
                    GremError::InvalidParameter("f_n requires the phase word (d1, d2)".into())
                })?;
                Ok(self.f_n(d1, d2, beta, t))
            }
        }
    }
}

/// Validates that beta* sits on the beak boundary of level l:
/// sigma* > sigma_l/2, tau* > 0, sigma* + tau* = sigma_l.
pub fn check_beak_point(model: &ModelParams, l: usize, beta_star: Complex64) -> Result<()> {
    let sl = model.sigma(l);
    let ok = beta_star.re > sl / 2.0
        && beta_star.im > 0.0
        && (beta_star.re + beta_star.im - sl).abs() < 1e-9;
    if ok {
        Ok(())
    } else {
        Err(GremError::GeometryError(format!(
            "beta* = {beta_star} is not on the beak boundary of level {l} (sigma_{l} = {sl})"
        )))
    }
}

/// Checks the defining relation of d_{n,l} up to 2 pi i Z.
pub fn d_n_l_residual(norms: &Normalizers, l: usize, beta_star: Complex64) -> Result<f64> {
    let d = norms.d_n_l(l, beta_star)?;
    let nf = norms.n as f64;
    let sl = norms.model.sigma(l);
    let al = norms.model.a(l);
    let lognorm = (4.0 * std::f64::consts::PI * nf * norms.model.log_alpha(l)).ln();
    let expr = d + beta_star * (lognorm / (2.0 * sl))
        - Complex64::new(0.0, nf * al * beta_star.im * beta_star.im);
    Ok(expr.re.abs() + reduce_arg(expr.im).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rem_model() -> ModelParams {
        // d = 1, a = 2, alpha = e: sigma_1 = 1.
        build_model(1, vec![2.0], vec![std::f64::consts::E], BranchingRule::Floor).unwrap()
    }

    #[test]
    fn sigma_from_definition() {
        let m = rem_model();
        assert!((m.sigma(1) - 1.0).abs() < 1e-15);

        let m2 = build_model(
            2,
            vec![2.0, 2.0],
            vec![std::f64::consts::E, std::f64::consts::E.powi(2)],
            BranchingRule::Floor,
        )
        .unwrap();
        assert!((m2.sigma(1) - 1.0).abs() < 1e-15);
        assert!((m2.sigma(2) - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonincreasing_sigma() {
        // sigma_1 ~ 1.6651 > sigma_2 ~ 1.1774
        let err = build_model(2, vec![1.0, 1.0], vec![4.0, 2.0], BranchingRule::Floor).unwrap_err();
        match err {
            GremError::ConvexityViolation { previous, current, .. } => {
                assert!((previous - (2.0 * 4.0f64.ln()).sqrt()).abs() < 1e-12);
                assert!((current - (2.0 * 2.0f64.ln()).sqrt()).abs() < 1e-12);
            }
            other => panic!("expected ConvexityViolation, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_model(1, vec![0.0], vec![2.0], BranchingRule::Floor).is_err());
        assert!(build_model(1, vec![1.0], vec![1.0], BranchingRule::Floor).is_err());
        assert!(build_model(0, vec![], vec![], BranchingRule::Floor).is_err());
    }

    #[test]
    fn floor_branching_numbers() {
        let m = rem_model();
        // floor(e^4) = floor(54.598) = 54
        assert_eq!(m.branching_numbers(4).unwrap(), vec![54]);

        let m2 = build_model(
            2,
            vec![2.0, 2.0],
            vec![std::f64::consts::E, std::f64::consts::E.powi(2)],
            BranchingRule::Floor,
        )
        .unwrap();
        assert_eq!(m2.branching_numbers(2).unwrap(), vec![7, 54]);
        assert_eq!(m2.total_leaves(2).unwrap(), 378);
        assert!(m2.branching_numbers(0).is_err());
    }

    #[test]
    fn explicit_branching_tables() {
        let mut tables = BTreeMap::new();
        tables.insert(3u32, vec![5u64, 9u64]);
        let m = build_model(
            2,
            vec![1.0, 1.0],
            vec![1.5, 2.5],
            BranchingRule::Explicit(tables),
        )
        .unwrap();
        assert_eq!(m.branching_numbers(3).unwrap(), vec![5, 9]);
        assert!(m.branching_numbers(4).is_err());
    }

    #[test]
    fn leaf_budget_enforced() {
        let m = build_model(1, vec![2.0], vec![20.0], BranchingRule::Floor).unwrap();
        match m.total_leaves(8).unwrap_err() {
            GremError::LeafBudgetExceeded { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn solve_u_residuals() {
        for n in [2.0, 54.0, 1e3, 1e7, 1e12] {
            let u = solve_u(n).unwrap();
            let rel = ((2.0 * std::f64::consts::PI).sqrt() * u * (0.5 * u * u).exp() / n - 1.0)
                .abs();
            assert!(rel < 1e-12, "N = {n}: residual {rel}");
        }
        // N = 54: bisection oracle gave u in [2.0, 2.2]; tighter: 2.15 +/- 0.01
        let u54 = solve_u(54.0).unwrap();
        assert!((u54 - 2.15).abs() < 0.01, "u(54) = {u54}");
        // leading-order: u / sqrt(2 log N) -> 1
        let u_big = solve_u(1e15).unwrap();
        assert!((u_big / (2.0 * 1e15f64.ln()).sqrt() - 1.0).abs() < 0.05);
        assert!(solve_u(1.0).is_err());
    }

    #[test]
    fn c_level_matches_case_formulas() {
        let m = rem_model();
        let norms = Normalizers::new(&m, 4).unwrap();
        // beta = 0 is in E_1: c = log N.
        let c0 = norms.c_level(1, Complex64::new(0.0, 0.0)).unwrap();
        assert!((c0 - Complex64::new(54.0f64.ln(), 0.0)).norm() < 1e-12);
        // beta = 0.2 in E_1: log N + a beta^2 n / 2.
        let b = Complex64::new(0.2, 0.0);
        let c = norms.c_level(1, b).unwrap();
        let want = Complex64::new(54.0f64.ln() + 0.5 * 2.0 * 0.04 * 4.0, 0.0);
        assert!((c - want).norm() < 1e-12);
        // glassy side: beta = 2 -> beta sqrt(n a) u.
        let cg = norms.c_level(1, Complex64::new(2.0, 0.0)).unwrap();
        let want_g = 2.0 * (4.0 * 2.0f64).sqrt() * norms.u(1);
        assert!((cg.re - want_g).abs() < 1e-12);
        // negative real part uses sgn(sigma).
        let cg_neg = norms.c_level(1, Complex64::new(-2.0, 0.0)).unwrap();
        assert!((cg_neg.re - want_g).abs() < 1e-12);
    }

    #[test]
    fn d_n_l_lies_in_coset_and_is_small() {
        // d = 1, a = 2, sigma_1 = 1; beak point 0.6 + 0.4i.
        let m = rem_model();
        for n in [8u32, 16, 32] {
            let norms = Normalizers::new(&m, n).unwrap();
            let b = Complex64::new(0.6, 0.4);
            let res = d_n_l_residual(&norms, 1, b).unwrap();
            assert!(res < 1e-9, "n = {n}: residual {res}");
            let d = norms.d_n_l(1, b).unwrap();
            assert!(d.norm() < 4.0 * ((n as f64).ln() + 4.0), "d = {d}");
        }
    }

    #[test]
    fn beak_point_validation() {
        let m = rem_model();
        let norms = Normalizers::new(&m, 8).unwrap();
        assert!(norms.d_n_l(1, Complex64::new(0.3, 0.7)).is_err());
        assert!(norms.h_hat_n_l(1, Complex64::new(0.6, 0.4)).is_ok());
    }

    #[test]
    fn partial_variance_additivity() {
        let m = build_model(
            3,
            vec![1.0, 2.0, 3.0],
            vec![1.5, 3.0, 9.0],
            BranchingRule::Floor,
        )
        .unwrap();
        assert_eq!(m.partial_a(1, 3), m.total_a());
        assert_eq!(m.partial_a(3, 2), 0.0);
        assert!((m.partial_a(2, 3) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn complex_temp_parsing() {
        let cases = [
            ("0.3", (0.3, 0.0)),
            ("0.3+0.1i", (0.3, 0.1)),
            ("-0.2-1.5i", (-0.2, -1.5)),
            ("1.2i", (0.0, 1.2)),
            ("-i", (0.0, -1.0)),
            ("1e-3+2e-2i", (1e-3, 2e-2)),
        ];
        for (s, (re, im)) in cases {
            let c: ComplexTemp = s.parse().unwrap();
            assert_eq!((c.sigma, c.tau), (re, im), "parsing {s}");
        }
        assert!("foo".parse::<ComplexTemp>().is_err());
    }
}
