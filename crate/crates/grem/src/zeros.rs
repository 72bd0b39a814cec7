//! Argument-principle zero finder for a sampled partition function, plus
//! empirical zero statistics (densities, boundary spacings).
//!
//! The engine tracks the unwrapped phase of Z_n along rectangle boundaries
//! (refining wherever the phase step exceeds pi/4 or the modulus jumps),
//! rounds the winding number, quadrisects until each cell holds one zero,
//! and polishes with Newton on the exact derivative. Z_n is evaluated in
//! log form throughout, so overflow cannot corrupt a winding count.

use crate::error::{GremError, Result};
use crate::logc::reduce_arg;
use crate::model::ModelParams;
use crate::phase::{log_partition_limit, Rect};
use crate::simulate::LeafField;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Zero {
    pub position: Complex64,
    pub multiplicity: u32,
    /// |Z_n| at the reported position relative to the local scale e^{n p}.
    pub residual: f64,
    pub cell_depth: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellAudit {
    pub rect: Rect,
    pub winding: i64,
    pub depth: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZeroSet {
    pub rect: Rect,
    pub zeros: Vec<Zero>,
    pub audit: Vec<CellAudit>,
}

impl ZeroSet {
    pub fn total_multiplicity(&self) -> u64 {
        self.zeros.iter().map(|z| z.multiplicity as u64).sum()
    }
}

struct Engine<'a> {
    field: &'a LeafField,
    model: &'a ModelParams,
    tol_z: f64,
    evals_left: i64,
    /// sup_j |E_j|: a global bound on |d/d beta log Z| away from zeros,
    /// used to size the initial contour sampling.
    phase_rate: f64,
    /// Phase increments of already-walked segments, keyed by endpoints;
    /// quadrisection children share their cross edges with siblings.
    segment_cache: std::collections::HashMap<(u64, u64, u64, u64), f64>,
}

fn segment_key(a: Complex64, b: Complex64) -> (u64, u64, u64, u64) {
    (
        a.re.to_bits(),
        a.im.to_bits(),
        b.re.to_bits(),
        b.im.to_bits(),
    )
}

const PHASE_STEP_LIMIT: f64 = std::f64::consts::FRAC_PI_4;
const MODULUS_STEP_LIMIT: f64 = 1.0;
const MAX_REFINE_DEPTH: u32 = 26;
const MAX_CELL_DEPTH: u32 = 42;
const WINDING_TOL: f64 = 1e-3;

impl<'a> Engine<'a> {
    fn local_ln_scale(&self, z: Complex64) -> f64 {
        self.field.n as f64 * log_partition_limit(self.model, z)
    }

    fn eval(&mut self, z: Complex64) -> Result<(f64, f64)> {
        self.evals_left -= 1;
        if self.evals_left < 0 {
            return Err(GremError::NonIntegerWinding(f64::NAN));
        }
        let v = self.field.eval(z);
        Ok((v.ln_mod, v.arg))
    }

    /// Accumulated phase increment along the segment [a, b], refining until
    /// every step is small in both phase and log-modulus. `floor_ln` flags a
    /// near-zero on the contour.
    fn segment_phase(&mut self, a: Complex64, b: Complex64, floor_ln: f64) -> Result<f64> {
        if let Some(&v) = self.segment_cache.get(&segment_key(a, b)) {
            return Ok(v);
        }
        if let Some(&v) = self.segment_cache.get(&segment_key(b, a)) {
            return Ok(-v);
        }
        let len = (b - a).norm();
        let init = ((len * self.phase_rate * 1.3 / PHASE_STEP_LIMIT).ceil() as usize)
            .clamp(16, 768);
        let step = (b - a) / init as f64;
        self.evals_left -= init as i64 + 1;
        if self.evals_left < 0 {
            return Err(GremError::NonIntegerWinding(f64::NAN));
        }
        let samples = self.field.eval_segment(a, step, init + 1);
        let mut total = 0.0;
        for m in 0..init {
            let (l0, p0) = (samples[m].ln_mod, samples[m].arg);
            let (l1, p1) = (samples[m + 1].ln_mod, samples[m + 1].arg);
            if l0 < floor_ln || l1 < floor_ln {
                return Err(GremError::BoundaryZero(0));
            }
            total += self.refine_phase(
                a + step * m as f64,
                a + step * (m + 1) as f64,
                (l0, p0),
                (l1, p1),
                floor_ln,
                0,
            )?;
        }
        self.segment_cache.insert(segment_key(a, b), total);
        Ok(total)
    }

    fn refine_phase(
        &mut self,
        a: Complex64,
        b: Complex64,
        va: (f64, f64),
        vb: (f64, f64),
        floor_ln: f64,
        depth: u32,
    ) -> Result<f64> {
        let dphi = reduce_arg(vb.1 - va.1);
        let dln = vb.0 - va.0;
        if dphi.abs() <= PHASE_STEP_LIMIT && dln.abs() <= MODULUS_STEP_LIMIT {
            return Ok(dphi);
        }
        if depth >= MAX_REFINE_DEPTH {
            // unresolvable phase step: a zero is pinned to the contour
            return Err(GremError::BoundaryZero(0));
        }
        let mid = 0.5 * (a + b);
        let vm = self.eval(mid)?;
        if vm.0 < floor_ln {
            return Err(GremError::BoundaryZero(0));
        }
        Ok(self.refine_phase(a, mid, va, vm, floor_ln, depth + 1)?
            + self.refine_phase(mid, b, vm, vb, floor_ln, depth + 1)?)
    }

    /// Winding number of Z_n around the rectangle (counterclockwise).
    fn winding(&mut self, rect: Rect) -> Result<i64> {
        let corners = [
            Complex64::new(rect.re_min, rect.im_min),
            Complex64::new(rect.re_max, rect.im_min),
            Complex64::new(rect.re_max, rect.im_max),
            Complex64::new(rect.re_min, rect.im_max),
        ];
        let mut total = 0.0;
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            // Contour samples whose |Z_n| collapses far below the local
            // scale e^{n p} sit numerically on a zero; their phase is
            // meaningless and the rectangle needs a jitter.
            let floor_ln = self
                .local_ln_scale(a)
                .min(self.local_ln_scale(b))
                .min(self.local_ln_scale(0.5 * (a + b)))
                - 30.0;
            total += self.segment_phase(a, b, floor_ln)?;
        }
        let w = total / (2.0 * std::f64::consts::PI);
        let rounded = w.round();
        if (w - rounded).abs() > WINDING_TOL {
            return Err(GremError::NonIntegerWinding(w));
        }
        Ok(rounded as i64)
    }

    /// Winding with boundary-zero jitter: grow the rectangle slightly and
    /// retry when a contour point sits on a zero.
    fn winding_jittered(&mut self, rect: Rect) -> Result<(i64, Rect)> {
        let mut r = rect;
        for attempt in 0..6 {
            match self.winding(r) {
                Ok(w) => return Ok((w, r)),
                Err(GremError::BoundaryZero(_)) => {
                    let pad = 1e-4
                        * (1.0 + attempt as f64)
                        * (r.re_max - r.re_min).max(r.im_max - r.im_min);
                    r = Rect::new(r.re_min - pad, r.re_max + pad, r.im_min - pad, r.im_max + pad);
                }
                Err(e) => return Err(e),
            }
        }
        Err(GremError::BoundaryZero(6))
    }

    fn newton(&mut self, cell: Rect, depth: u32) -> Option<Zero> {
        let c = cell.center();
        let (hw, hh) = (
             0.25 * (cell.re_max - cell.re_min),
            0.25 * (cell.im_max - cell.im_min),
        );
        let starts = [
            c,
            c + Complex64::new(hw, hh),
            c + Complex64::new(-hw, hh),
            c + Complex64::new(hw, -hh),
            c + Complex64::new(-hw, -hh),
        ];
        for start in starts {
            if let Some(z) = self.newton_from(start, cell, depth) {
                return Some(z);
            }
        }
        None
    }

    fn newton_from(&mut self, start: Complex64, cell: Rect, depth: u32) -> Option<Zero> {
        let mut z = start;
        let diam = (cell.re_max - cell.re_min).hypot(cell.im_max - cell.im_min);
        let margin = Rect::new(
            cell.re_min - 0.75 * diam,
            cell.re_max + 0.75 * diam,
            cell.im_min - 0.75 * diam,
            cell.im_max + 0.75 * diam,
        );
        for _ in 0..30 {
            let (val, dval) = self.field.eval_with_derivative(z);
            self.evals_left -= 2;
            if val.is_zero() {
                break;
            }
            let step = val.div(&dval).to_complex();
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            z -= step;
            if !margin.contains(z) {
                return None;
            }
            if step.norm() < 1e-13 * (1.0 + z.norm()) {
                break;
            }
        }
        let residual = (self.field.eval(z).ln_mod - self.local_ln_scale(z)).exp();
        self.evals_left -= 1;
        if residual <= self.tol_z && cell.contains(z) {
            Some(Zero {
                position: z,
                multiplicity: 1,
                residual,
                cell_depth: depth,
            })
        } else {
            None
        }
    }

    fn subdivide(
        &mut self,
        rect: Rect,
        winding: i64,
        depth: u32,
        zeros: &mut Vec<Zero>,
        audit: &mut Vec<CellAudit>,
    ) -> Result<()> {
        audit.push(CellAudit {
            rect,
            winding,
            depth,
        });
        if winding == 0 {
            return Ok(());
        }
        let diam = (rect.re_max - rect.re_min).hypot(rect.im_max - rect.im_min);
        if winding == 1 && depth > 0 {
            if let Some(z) = self.newton(rect, depth) {
                zeros.push(z);
                return Ok(());
            }
        }
        if depth >= MAX_CELL_DEPTH || diam < 1e-10 {
            // Inseparable cluster (or a genuine multiple zero): report the
            // center with the full winding as multiplicity.
            let center = rect.center();
            let residual =
                (self.field.eval(center).ln_mod - self.local_ln_scale(center)).exp();
            zeros.push(Zero {
                position: center,
                multiplicity: winding.unsigned_abs() as u32,
                residual,
                cell_depth: depth,
            });
            return Ok(());
        }
        // Quadrisect; nudge the split lines if a child contour hits a zero.
        'split: for attempt in 0..5 {
            let f = 0.5 + 0.013 * attempt as f64;
            let xm = rect.re_min + f * (rect.re_max - rect.re_min);
            let ym = rect.im_min + f * (rect.im_max - rect.im_min);
            let children = [
                Rect::new(rect.re_min, xm, rect.im_min, ym),
                Rect::new(xm, rect.re_max, rect.im_min, ym),
                Rect::new(rect.re_min, xm, ym, rect.im_max),
                Rect::new(xm, rect.re_max, ym, rect.im_max),
            ];
            let mut ws = [0i64; 4];
            for (i, child) in children.iter().enumerate() {
                match self.winding(*child) {
                    Ok(w) => ws[i] = w,
                    Err(GremError::BoundaryZero(_)) => continue 'split,
                    Err(e) => return Err(e),
                }
            }
            if ws.iter().sum::<i64>() != winding {
                // phase-tracking artifact on the shared edges; retry shifted
                continue 'split;
            }
            for (child, w) in children.iter().zip(ws) {
                self.subdivide(*child, w, depth + 1, zeros, audit)?;
            }
            return Ok(());
        }
        Err(GremError::BoundaryZero(5))
    }
}

/// Finds all zeros of the sampled Z_n inside the rectangle.
///
/// `tol_z` is the acceptance threshold on |Z_n| at a refined zero, relative
/// to the local scale e^{n p(beta)} (default 1e-9 when NaN is passed).
pub fn find_zeros(
    field: &LeafField,
    model: &ModelParams,
    rect: Rect,
    tol_z: f64,
) -> Result<ZeroSet> {
    let tol_z = if tol_z.is_nan() { 1e-9 } else { tol_z };
    let mut engine = Engine {
        field,
        model,
        tol_z,
        evals_left: 400_000,
        phase_rate: field.max_abs_energy(),
        segment_cache: std::collections::HashMap::new(),
    };
    let (w, outer) = engine.winding_jittered(rect)?;
    let mut zeros = Vec::new();
    let mut audit = Vec::new();
    engine.subdivide(outer, w, 0, &mut zeros, &mut audit)?;
    Ok(ZeroSet {
        rect: outer,
        zeros,
        audit,
    })
}

/// Winding number of the sampled Z_n around a rectangle (no subdivision).
pub fn winding_number(field: &LeafField, model: &ModelParams, rect: Rect) -> Result<i64> {
    let mut engine = Engine {
        field,
        model,
        tol_z: 1e-9,
        evals_left: 400_000,
        phase_rate: field.max_abs_energy(),
        segment_cache: std::collections::HashMap::new(),
    };
    Ok(engine.winding_jittered(rect)?.0)
}

// ---------------------------------------------------------------------------
// Statistics over collections of zero sets
// ---------------------------------------------------------------------------

/// Observed versus predicted zero density in a window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityReport {
    pub rect: Rect,
    pub replicates: usize,
    pub total_zeros: u64,
    /// Empirical (2 pi / n) count / (area replicates).
    pub empirical_density: f64,
    /// Predicted area density of the limiting measure at the window center.
    pub predicted_density: f64,
}

pub fn density_report(sets: &[ZeroSet], model: &ModelParams, n: u32, rect: Rect) -> DensityReport {
    let total: u64 = sets
        .iter()
        .flat_map(|s| &s.zeros)
        .filter(|z| rect.contains(z.position))
        .map(|z| z.multiplicity as u64)
        .sum();
    let empirical = 2.0 * std::f64::consts::PI * total as f64
        / (n as f64 * rect.area() * sets.len() as f64);
    let predicted = crate::phase::zero_density(model, rect.center()).area_density;
    DensityReport {
        rect,
        replicates: sets.len(),
        total_zeros: total,
        empirical_density: empirical,
        predicted_density: predicted,
    }
}

/// One observed spacing between consecutive boundary zeros, paired with the
/// local prediction of the limit theory.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpacingSample {
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacingReport {
    pub samples: Vec<SpacingSample>,
    /// Mean of observed/predicted.
    pub mean_ratio: f64,
}

fn summarize(samples: Vec<SpacingSample>) -> SpacingReport {
    let mean_ratio = if samples.is_empty() {
        f64::NAN
    } else {
        samples.iter().map(|s| s.observed / s.predicted).sum::<f64>() / samples.len() as f64
    };
    SpacingReport {
        samples,
        mean_ratio,
    }
}

/// Spacings along the beak boundary |sigma| + |tau| = sigma_l (first
/// quadrant) of level l. Keeps zeros within the perpendicular band
/// [-band_in, band_out] of the segment and with tau inside (tau_lo, tau_hi);
/// consecutive zeros within one replicate yield spacing samples compared to
/// the local prediction sqrt(2) pi / (a_l tau n).
pub fn beak_spacings(
    sets: &[ZeroSet],
    model: &ModelParams,
    n: u32,
    level: usize,
    band_in: f64,
    band_out: f64,
    tau_range: (f64, f64),
) -> SpacingReport {
    let sl = model.sigma(level);
    let al = model.a(level);
    let mut samples = Vec::new();
    for set in sets {
        let mut on_band: Vec<Complex64> = set
            .zeros
            .iter()
            .map(|z| z.position)
            .filter(|z| {
                let perp = z.re.abs() + z.im.abs() - sl;
                perp >= -band_in
                    && perp <= band_out
                    && z.im.abs() > tau_range.0
                    && z.im.abs() < tau_range.1
            })
            .collect();
        // tangential coordinate along the segment direction (1, -1)/sqrt(2)
        on_band.sort_by(|a, b| {
            (a.re - a.im)
                .partial_cmp(&(b.re - b.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for pair in on_band.windows(2) {
            let observed = (pair[1] - pair[0]).norm();
            let tau_mid = 0.5 * (pair[0].im.abs() + pair[1].im.abs());
            let predicted =
                std::f64::consts::SQRT_2 * std::f64::consts::PI / (al * tau_mid * n as f64);
            samples.push(SpacingSample {
                observed,
                predicted,
            });
        }
    }
    summarize(samples)
}

/// Spacings along the arc |beta| = sigma_k/sqrt(2) (upper arc) of level k.
/// The fluctuation-phase sea of area zeros begins immediately outside the
/// arc, so within each angular slot of one predicted spacing only the zero
/// closest to the arc (the front row) is kept.
pub fn arc_spacings(
    sets: &[ZeroSet],
    model: &ModelParams,
    n: u32,
    level: usize,
    band: f64,
) -> SpacingReport {
    let radius = model.sigma(level) / std::f64::consts::SQRT_2;
    let ak = model.a(level);
    let predicted = 2.0 * std::f64::consts::PI / (ak * radius * n as f64);
    let slot = predicted / radius; // angular width of one spacing
    let mut samples = Vec::new();
    for set in sets {
        let mut front: Vec<(i64, f64, Complex64)> = Vec::new(); // (bin, radial dist, z)
        for z in set.zeros.iter().map(|z| z.position) {
            let r = z.norm();
            if (r - radius).abs() > band {
                continue;
            }
            let theta = z.im.atan2(z.re);
            if !(std::f64::consts::FRAC_PI_4 + 0.05..=3.0 * std::f64::consts::FRAC_PI_4 - 0.05)
                .contains(&theta)
            {
                continue;
            }
            let bin = (theta / slot).floor() as i64;
            let dist = (r - radius).abs();
            match front.iter_mut().find(|(b, _, _)| *b == bin) {
                Some(entry) => {
                    if dist < entry.1 {
                        *entry = (bin, dist, z);
                    }
                }
                None => front.push((bin, dist, z)),
            }
        }
        front.sort_by(|a, b| {
            a.2.im
                .atan2(a.2.re)
                .partial_cmp(&b.2.im.atan2(b.2.re))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for pair in front.windows(2) {
            // only adjacent bins form a genuine nearest-neighbor pair
            if pair[1].0 - pair[0].0 == 1 {
                samples.push(SpacingSample {
                    observed: (pair[1].2 - pair[0].2).norm(),
                    predicted,
                });
            }
        }
    }
    summarize(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, BranchingRule};

    /// Two-leaf field: Z(beta) = e^{c1 beta} + e^{c2 beta}, zeros at
    /// beta = (2k+1) pi i / (c1 - c2).
    fn two_leaf_field(c1: f64, c2: f64) -> (LeafField, ModelParams) {
        let m = build_model(1, vec![1.0], vec![2.0], BranchingRule::Floor).unwrap();
        (
            LeafField {
                n: 1,
                energies: vec![c1, c2],
            },
            m,
        )
    }

    #[test]
    fn recovers_two_term_exponential_zeros() {
        let (field, model) = two_leaf_field(1.3, -0.9);
        let gap = 1.3 - (-0.9);
        let spacing = 2.0 * std::f64::consts::PI / gap;
        // zeros at i pi (2k+1)/gap: pick a window holding k = 0, 1, 2
        let rect = Rect::new(-0.8, 0.9, 0.2, 3.2 * spacing / 2.0 + 0.6);
        let zs = find_zeros(&field, &model, rect, f64::NAN).unwrap();
        let mut found: Vec<f64> = zs.zeros.iter().map(|z| z.position.im).collect();
        found.sort_by(f64::total_cmp);
        let want: Vec<f64> = (0..)
            .map(|k| (2 * k + 1) as f64 * std::f64::consts::PI / gap)
            .take_while(|&y| rect.contains(Complex64::new(0.0, y)))
            .collect();
        assert_eq!(found.len(), want.len(), "{found:?} vs {want:?}");
        for (f, w) in found.iter().zip(&want) {
            assert!((f - w).abs() < 1e-9, "zero at {f}, want {w}");
        }
        for z in &zs.zeros {
            assert!(z.position.re.abs() < 1e-9);
            assert_eq!(z.multiplicity, 1);
            assert!(z.residual < 1e-9);
        }
    }

    #[test]
    fn winding_zero_in_zero_free_window() {
        let (field, model) = two_leaf_field(0.8, -0.5);
        // no zeros off the imaginary axis
        let rect = Rect::new(0.4, 1.6, -0.9, 0.9);
        assert_eq!(winding_number(&field, &model, rect).unwrap(), 0);
        let zs = find_zeros(&field, &model, rect, f64::NAN).unwrap();
        assert!(zs.zeros.is_empty());
    }

    #[test]
    fn winding_additivity_under_quadrisection() {
        let (field, model) = two_leaf_field(1.1, -1.0);
        let rect = Rect::new(-1.0, 1.0, 0.5, 4.0);
        let parent = winding_number(&field, &model, rect).unwrap();
        assert!(parent >= 1);
        let xm = 0.5 * (rect.re_min + rect.re_max) + 0.0137;
        let ym = 0.5 * (rect.im_min + rect.im_max) + 0.0071;
        let mut child_sum = 0;
        for child in [
            Rect::new(rect.re_min, xm, rect.im_min, ym),
            Rect::new(xm, rect.re_max, rect.im_min, ym),
            Rect::new(rect.re_min, xm, ym, rect.im_max),
            Rect::new(xm, rect.re_max, ym, rect.im_max),
        ] {
            child_sum += winding_number(&field, &model, child).unwrap();
        }
        assert_eq!(parent, child_sum);
    }

    #[test]
    fn jitters_around_boundary_zero() {
        let (field, model) = two_leaf_field(1.0, -1.0);
        // zero exactly при pi/2 on the imaginary axis; put it on the contour
        let y0 = std::f64::consts::FRAC_PI_2;
        let rect = Rect::new(-0.5, 0.5, y0 - 0.4, y0);
        let zs = find_zeros(&field, &model, rect, f64::NAN).unwrap();
        assert_eq!(zs.zeros.len(), 1);
        assert!((zs.zeros[0].position.im - y0).abs() < 1e-9);
    }

    #[test]
    fn zeros_of_sampled_field_match_conjugate_symmetry() {
        // For a real field realization, zeros of Z come in conjugate pairs:
        // find zeros in a window and its mirror image.
        let m = build_model(1, vec![2.0], vec![1.6], BranchingRule::Floor).unwrap();
        let field = crate::simulate::leaf_field(&m, 9, 5, 0).unwrap();
        let rect = Rect::new(0.1, 0.6, 0.3, 1.1);
        let mirror = Rect::new(0.1, 0.6, -1.1, -0.3);
        let a = find_zeros(&field, &m, rect, f64::NAN).unwrap();
        let b = find_zeros(&field, &m, mirror, f64::NAN).unwrap();
        assert_eq!(a.zeros.len(), b.zeros.len());
        let mut ya: Vec<f64> = a.zeros.iter().map(|z| z.position.im).collect();
        let mut yb: Vec<f64> = b.zeros.iter().map(|z| -z.position.im).collect();
        ya.sort_by(f64::total_cmp);
        yb.sort_by(f64::total_cmp);
        for (p, q) in ya.iter().zip(&yb) {
            assert!((p - q).abs() < 1e-8);
        }
    }
}
