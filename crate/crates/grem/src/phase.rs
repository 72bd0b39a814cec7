//! Phase classification in the complex temperature plane, the limiting
//! log-partition function, the limiting zero-density measure and its
//! distributional-Laplacian verification, and the continuum-hierarchy limit.
//!
//! Level k has three open phases:
//!   G_k: 2|sigma| > sigma_k and |sigma| + |tau| > sigma_k   (extremes)
//!   F_k: 2|sigma| < sigma_k and 2|beta|^2 > sigma_k^2       (fluctuations)
//!   E_k: complement of the closure of the union              (expectation)
//! Composite phases follow the ordering G before F before E down the tree.

use crate::error::{GremError, Result};
use crate::model::ModelParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tolerance on the defining expressions below which a point is reported as
/// a boundary label. Callers integrating over regions treat boundary labels
/// as measure zero.
pub const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LevelPhase {
    Glassy,
    Fluctuation,
    Expectation,
    BoundaryEF,
    BoundaryEG,
    BoundaryFG,
    TriplePoint,
}

impl LevelPhase {
    pub fn is_open(self) -> bool {
        matches!(
            self,
            LevelPhase::Glassy | LevelPhase::Fluctuation | LevelPhase::Expectation
        )
    }

    pub fn letter(self) -> char {
        match self {
            LevelPhase::Glassy => 'G',
            LevelPhase::Fluctuation => 'F',
            LevelPhase::Expectation => 'E',
            LevelPhase::BoundaryEF => 'f',
            LevelPhase::BoundaryEG => 'g',
            LevelPhase::BoundaryFG => 'x',
            LevelPhase::TriplePoint => 't',
        }
    }
}

/// Per-level labels plus, when all labels are open, the word exponents
/// (d1, d2, d3) of G^{d1} F^{d2} E^{d3}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositePhase {
    pub labels: Vec<LevelPhase>,
    pub word: Option<(usize, usize, usize)>,
}

impl CompositePhase {
    pub fn is_open(&self) -> bool {
        self.word.is_some()
    }

    /// The G-before-F-before-E ordering: no E ahead of an F or G, no F
    /// ahead of a G (only meaningful constraints among open labels).
    pub fn ordering_holds(&self) -> bool {
        let mut seen_f = false;
        let mut seen_e = false;
        for &l in &self.labels {
            match l {
                LevelPhase::Glassy => {
                    if seen_f || seen_e {
                        return false;
                    }
                }
                LevelPhase::Fluctuation => {
                    if seen_e {
                        return false;
                    }
                    seen_f = true;
                }
                LevelPhase::Expectation => seen_e = true,
                _ => {}
            }
        }
        true
    }
}

/// Classifies a single level (1-based).
pub fn classify_level(model: &ModelParams, beta: Complex64, k: usize) -> LevelPhase {
    let sk = model.sigma(k);
    let s = beta.re.abs();
    let t = beta.im.abs();
    let e1 = 2.0 * s - sk;
    let e2 = s + t - sk;
    let e3 = 2.0 * (s * s + t * t) - sk * sk;
    let eps = BOUNDARY_EPS * (1.0 + sk);
    let eps3 = BOUNDARY_EPS * (1.0 + sk * sk);
    if e1.abs() <= eps && e2.abs() <= eps {
        return LevelPhase::TriplePoint;
    }
    if e2.abs() <= eps && e1 > eps {
        return LevelPhase::BoundaryEG;
    }
    if e1.abs() <= eps && e2 > eps {
        return LevelPhase::BoundaryFG;
    }
    if e3.abs() <= eps3 && e1 < -eps {
        return LevelPhase::BoundaryEF;
    }
    if e1 > eps && e2 > eps {
        return LevelPhase::Glassy;
    }
    if e1 < -eps && e3 > eps3 {
        return LevelPhase::Fluctuation;
    }
    LevelPhase::Expectation
}

/// Classifies all levels and derives the word exponents.
pub fn classify(model: &ModelParams, beta: Complex64) -> CompositePhase {
    let labels: Vec<LevelPhase> = (1..=model.d)
        .map(|k| classify_level(model, beta, k))
        .collect();
    let word = if labels.iter().all(|l| l.is_open()) {
        let d1 = labels.iter().filter(|&&l| l == LevelPhase::Glassy).count();
        let d2 = labels
            .iter()
            .filter(|&&l| l == LevelPhase::Fluctuation)
            .count();
        let d3 = labels
            .iter()
            .filter(|&&l| l == LevelPhase::Expectation)
            .count();
        Some((d1, d2, d3))
    } else {
        None
    };
    let phase = CompositePhase { labels, word };
    debug_assert!(phase.ordering_holds());
    phase
}

/// Contribution p_k of level k to the limiting log-partition function,
/// evaluated from the case formula by closure membership (the case formulas
/// agree on shared boundaries, so any adjacent one may be used there).
pub fn level_log_partition(model: &ModelParams, beta: Complex64, k: usize) -> f64 {
    let sk = model.sigma(k);
    let ak = model.a(k);
    let la = model.log_alpha(k);
    let s = beta.re.abs();
    let t = beta.im.abs();
    let eps = BOUNDARY_EPS * (1.0 + sk);
    let in_closure_g = 2.0 * s - sk >= -eps && s + t - sk >= -eps;
    if in_closure_g {
        return s * (2.0 * ak * la).sqrt();
    }
    let in_closure_f =
        2.0 * s - sk <= eps && 2.0 * (s * s + t * t) - sk * sk >= -eps * (1.0 + sk);
    if in_closure_f {
        return 0.5 * la + ak * beta.re * beta.re;
    }
    la + 0.5 * ak * (beta.re * beta.re - beta.im * beta.im)
}

/// Limiting log-partition function p(beta) = sum_k p_k(beta).
pub fn log_partition_limit(model: &ModelParams, beta: Complex64) -> f64 {
    (1..=model.d)
        .map(|k| level_log_partition(model, beta, k))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    EF,
    EG,
    FG,
}

/// A line component of the limiting zero measure near a query point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineComponent {
    pub level: usize,
    pub kind: BoundaryKind,
    /// Euclidean distance from the query point to the curve.
    pub distance: f64,
    /// Nearest point of the curve.
    pub at: ComplexPair,
    /// Linear density of the zero measure on the curve at that point.
    pub linear_density: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexPair {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexPair {
    fn from(z: Complex64) -> Self {
        ComplexPair { re: z.re, im: z.im }
    }
}

/// Evaluation of the limiting zero measure at a point: the absolutely
/// continuous density plus nearby one-dimensional components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroDensity {
    /// Density of the area part w.r.t. Lebesgue measure: sum of 2 a_k over
    /// levels whose open fluctuation phase contains the point.
    pub area_density: f64,
    pub lines: Vec<LineComponent>,
}

/// Evaluates the limiting zero-density measure at beta.
pub fn zero_density(model: &ModelParams, beta: Complex64) -> ZeroDensity {
    let mut area = 0.0;
    let mut lines = Vec::new();
    let s = beta.re.abs();
    let t = beta.im.abs();
    let qs = beta.re.signum();
    let qt = if beta.im == 0.0 { 1.0 } else { beta.im.signum() };
    for k in 1..=model.d {
        let sk = model.sigma(k);
        let ak = model.a(k);
        if classify_level(model, beta, k) == LevelPhase::Fluctuation {
            area += 2.0 * ak;
        }
        // EF arcs: |beta| = sigma_k/sqrt(2) with |sigma| < sigma_k/2.
        let r = sk / std::f64::consts::SQRT_2;
        let radius = beta.norm();
        if radius > 0.0 {
            let proj = beta / radius * r;
            if proj.re.abs() < sk / 2.0 {
                lines.push(LineComponent {
                    level: k,
                    kind: BoundaryKind::EF,
                    distance: (radius - r).abs(),
                    at: proj.into(),
                    linear_density: (ak * model.log_alpha(k)).sqrt(),
                });
            }
        }
        // EG segments: |sigma| + |tau| = sigma_k with sigma_k/2 < |sigma| < sigma_k.
        // Work in the quadrant of beta, project onto the segment.
        {
            let u = (s + sk - t) / 2.0; // |sigma| coordinate of the foot point
            let uc = u.clamp(sk / 2.0, sk);
            let foot = Complex64::new(qs * uc, qt * (sk - uc));
            let dist = (beta - foot).norm();
            lines.push(LineComponent {
                level: k,
                kind: BoundaryKind::EG,
                distance: dist,
                at: foot.into(),
                linear_density: std::f64::consts::SQRT_2 * ak * (sk - uc),
            });
        }
        // FG half-lines: |sigma| = sigma_k/2, |tau| > sigma_k/2. Zero density.
        if t > sk / 2.0 {
            let foot = Complex64::new(qs * sk / 2.0, beta.im);
            lines.push(LineComponent {
                level: k,
                kind: BoundaryKind::FG,
                distance: (s - sk / 2.0).abs(),
                at: foot.into(),
                linear_density: 0.0,
            });
        }
    }
    lines.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    ZeroDensity {
        area_density: area,
        lines,
    }
}

/// Axis-aligned rectangle in the beta plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Rect {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    pub fn contains_margin(&self, z: Complex64, m: f64) -> bool {
        z.re >= self.re_min + m
            && z.re <= self.re_max - m
            && z.im >= self.im_min + m
            && z.im <= self.im_max - m
    }

    pub fn area(&self) -> f64 {
        (self.re_max - self.re_min) * (self.im_max - self.im_min)
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteriorCheck {
    pub at: ComplexPair,
    pub fd_laplacian: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JumpCheck {
    pub at: ComplexPair,
    pub level: usize,
    pub kind: BoundaryKind,
    pub fd_jump: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaplacianReport {
    pub interior: Vec<InteriorCheck>,
    pub jumps: Vec<JumpCheck>,
    pub max_interior_error: f64,
    pub max_jump_error: f64,
}

/// Verifies the distributional identity "Laplacian of p = zero measure":
/// five-point Laplacians against the area density at interior grid points,
/// and jumps of the normal derivative against the line densities at sampled
/// boundary points inside the rectangle.
pub fn laplacian_check(
    model: &ModelParams,
    rect: Rect,
    grid_h: f64,
    grid_points: usize,
) -> Result<LaplacianReport> {
    if !(grid_h > 0.0) {
        return Err(GremError::InvalidParameter("grid_h must be positive".into()));
    }
    if rect.contains(Complex64::new(0.0, 0.0)) {
        return Err(GremError::InvalidParameter(
            "rectangle must avoid the origin".into(),
        ));
    }
    let p = |z: Complex64| log_partition_limit(model, z);
    let mut interior = Vec::new();
    let m = grid_points.max(2);
    for i in 0..m {
        for j in 0..m {
            let z = Complex64::new(
                rect.re_min + (rect.re_max - rect.re_min) * (i as f64 + 0.5) / m as f64,
                rect.im_min + (rect.im_max - rect.im_min) * (j as f64 + 0.5) / m as f64,
            );
            // Keep the whole stencil inside one open composite phase.
            let stencil = [
                z,
                z + Complex64::new(grid_h, 0.0),
                z - Complex64::new(grid_h, 0.0),
                z + Complex64::new(0.0, grid_h),
                z - Complex64::new(0.0, grid_h),
            ];
            let base = classify(model, z);
            if !base.is_open() || stencil.iter().any(|&w| classify(model, w) != base) {
                continue;
            }
            let lap = (p(stencil[1]) + p(stencil[2]) + p(stencil[3]) + p(stencil[4])
                - 4.0 * p(z))
                / (grid_h * grid_h);
            interior.push(InteriorCheck {
                at: z.into(),
                fd_laplacian: lap,
                expected: zero_density(model, z).area_density,
            });
        }
    }

    // One-sided second-order directional derivative at z along dir.
    let one_sided = |z: Complex64, dir: Complex64| -> f64 {
        (-3.0 * p(z) + 4.0 * p(z + grid_h * dir) - p(z + 2.0 * grid_h * dir)) / (2.0 * grid_h)
    };
    let mut jumps = Vec::new();
    let mut push_jump = |z: Complex64, normal: Complex64, level, kind, expected: f64| {
        if !rect.contains_margin(z, 2.5 * grid_h) {
            return;
        }
        let fd = one_sided(z, normal) + one_sided(z, -normal);
        jumps.push(JumpCheck {
            at: z.into(),
            level,
            kind,
            fd_jump: fd,
            expected,
        });
    };
    let samples = 9usize;
    for k in 1..=model.d {
        let sk = model.sigma(k);
        let ak = model.a(k);
        // EF arcs: theta in (pi/4, 3 pi/4) and mirrors; radial normal.
        for i in 0..samples {
            let theta = std::f64::consts::FRAC_PI_4 * (1.0 + 2.0 * (i as f64 + 0.5) / samples as f64);
            for quad in [1.0, -1.0] {
                let z = Complex64::from_polar(sk / std::f64::consts::SQRT_2, quad * theta);
                let normal = z / z.norm();
                push_jump(z, normal, k, BoundaryKind::EF, (ak * model.log_alpha(k)).sqrt());
            }
        }
        // EG segments: |sigma| + |tau| = sigma_k, sigma in (sigma_k/2, sigma_k).
        for i in 0..samples {
            let s = sk / 2.0 + (sk / 2.0) * (i as f64 + 0.5) / samples as f64;
            let t = sk - s;
            for (qs, qt) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let z = Complex64::new(qs * s, qt * t);
                let normal = Complex64::new(qs, qt) / std::f64::consts::SQRT_2;
                push_jump(
                    z,
                    normal,
                    k,
                    BoundaryKind::EG,
                    std::f64::consts::SQRT_2 * ak * t,
                );
            }
        }
        // FG half-lines: sigma = +/- sigma_k/2, |tau| > sigma_k/2; zero jump.
        for i in 0..samples {
            let t = sk / 2.0 * (1.2 + (i as f64 + 0.5) / samples as f64 * 3.0);
            for (qs, qt) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let z = Complex64::new(qs * sk / 2.0, qt * t);
                let normal = Complex64::new(qs, 0.0);
                push_jump(z, normal, k, BoundaryKind::FG, 0.0);
            }
        }
    }
    let max_interior_error = interior
        .iter()
        .map(|c| (c.fd_laplacian - c.expected).abs())
        .fold(0.0, f64::max);
    let max_jump_error = jumps
        .iter()
        .map(|c| (c.fd_jump - c.expected).abs())
        .fold(0.0, f64::max);
    Ok(LaplacianReport {
        interior,
        jumps,
        max_interior_error,
        max_jump_error,
    })
}

/// Census of open composite phases over a classification grid.
pub fn phase_census(
    model: &ModelParams,
    rect: Rect,
    nx: usize,
    ny: usize,
) -> (BTreeMap<(usize, usize, usize), usize>, bool) {
    let mut words = BTreeMap::new();
    let mut ordering_ok = true;
    for i in 0..nx {
        for j in 0..ny {
            let z = Complex64::new(
                rect.re_min + (rect.re_max - rect.re_min) * i as f64 / (nx - 1) as f64,
                rect.im_min + (rect.im_max - rect.im_min) * j as f64 / (ny - 1) as f64,
            );
            let phase = classify(model, z);
            ordering_ok &= phase.ordering_holds();
            if let Some(w) = phase.word {
                *words.entry(w).or_insert(0) += 1;
            }
        }
    }
    (words, ordering_ok)
}

// ---------------------------------------------------------------------------
// Continuum hierarchy limit
// ---------------------------------------------------------------------------

/// Concave variance profile A on [0,1], piecewise linear with A(0) = 0,
/// plus the single branching scalar alpha > 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CremProfile {
    /// Knots (t_i, A(t_i)), t_0 = 0 < ... < t_m = 1, A(0) = 0.
    pub knots: Vec<(f64, f64)>,
    pub alpha: f64,
}

impl CremProfile {
    pub fn new(knots: Vec<(f64, f64)>, alpha: f64) -> Result<Self> {
        if alpha <= 1.0 {
            return Err(GremError::InvalidParameter("alpha must exceed 1".into()));
        }
        if knots.len() < 2 {
            return Err(GremError::InvalidParameter(
                "profile needs at least two knots".into(),
            ));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(GremError::InvalidParameter(
                "profile must start at (0, 0)".into(),
            ));
        }
        if (knots.last().unwrap().0 - 1.0).abs() > 1e-12 {
            return Err(GremError::InvalidParameter("profile must end at t = 1".into()));
        }
        let mut prev_slope = f64::INFINITY;
        for w in knots.windows(2) {
            let dt = w[1].0 - w[0].0;
            let da = w[1].1 - w[0].1;
            if dt <= 0.0 {
                return Err(GremError::InvalidParameter(
                    "knot abscissae must increase".into(),
                ));
            }
            let slope = da / dt;
            if slope <= 0.0 {
                return Err(GremError::DegenerateProfile(format!(
                    "A' = {slope} on [{}, {}]",
                    w[0].0, w[1].0
                )));
            }
            if slope > prev_slope + 1e-12 {
                return Err(GremError::InvalidParameter(
                    "profile must be concave (A' nonincreasing)".into(),
                ));
            }
            prev_slope = slope;
        }
        Ok(CremProfile { knots, alpha })
    }

    pub fn value(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        for w in self.knots.windows(2) {
            if t <= w[1].0 || w[1].0 == 1.0 {
                let frac = (t - w[0].0) / (w[1].0 - w[0].0);
                if t <= w[1].0 {
                    return w[0].1 + frac * (w[1].1 - w[0].1);
                }
            }
        }
        self.knots.last().unwrap().1
    }

    /// Continuum critical temperature on piece i.
    fn sigma_piece(&self, i: usize) -> f64 {
        let (t0, a0) = self.knots[i];
        let (t1, a1) = self.knots[i + 1];
        let slope = (a1 - a0) / (t1 - t0);
        (2.0 * self.alpha.ln() / slope).sqrt()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CremEval {
    pub p: f64,
    pub p_glassy: f64,
    pub p_fluctuation: f64,
    pub p_expectation: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

/// Continuum-limit log-partition function. The glassy fraction gamma_1 is
/// the measure of levels whose continuum critical temperature lies below
/// min(2|sigma|, |sigma|+|tau|); gamma_1 + gamma_2 marks where the
/// expectation regime takes over. Both are exact on the piecewise-linear
/// table, as is the integral of sqrt(A').
pub fn crem_log_partition(profile: &CremProfile, beta: Complex64) -> CremEval {
    let s = beta.re.abs();
    let t = beta.im.abs();
    let s_glassy = (2.0 * s).min(s + t);
    let s_expect = if t >= s {
        std::f64::consts::SQRT_2 * beta.norm()
    } else {
        s + t
    };
    let log_alpha = profile.alpha.ln();
    let mut gamma1 = 0.0;
    let mut gamma12 = 0.0;
    let mut int_sqrt = 0.0; // integral of sqrt(A') over [0, gamma1]
    for i in 0..profile.knots.len() - 1 {
        let (t0, a0) = profile.knots[i];
        let (t1, a1) = profile.knots[i + 1];
        let len = t1 - t0;
        let slope = (a1 - a0) / len;
        let sig = profile.sigma_piece(i);
        if sig < s_glassy {
            gamma1 += len;
            int_sqrt += slope.sqrt() * len;
        }
        if sig <= s_expect {
            gamma12 += len;
        }
    }
    // The glassy prefix is nested inside the non-expectation prefix.
    gamma12 = gamma12.max(gamma1);
    let gamma2 = gamma12 - gamma1;
    let gamma3 = 1.0 - gamma12;
    let a_g1 = profile.value(gamma1);
    let a_g12 = profile.value(gamma12);
    let a_1 = profile.value(1.0);
    let p_glassy = s * (2.0 * log_alpha).sqrt() * int_sqrt;
    let p_fluctuation = 0.5 * gamma2 * log_alpha + (a_g12 - a_g1) * beta.re * beta.re;
    let p_expectation =
        gamma3 * log_alpha + 0.5 * (beta.re * beta.re - beta.im * beta.im) * (a_1 - a_g12);
    CremEval {
        p: p_glassy + p_fluctuation + p_expectation,
        p_glassy,
        p_fluctuation,
        p_expectation,
        gamma1,
        gamma2,
        gamma3,
    }
}
