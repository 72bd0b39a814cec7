//! Monte Carlo sampling of the partition function over the hierarchical
//! Gaussian field: replicate ensembles at one or many beta values, the
//! empirical log-partition function, normalized fluctuation ensembles, and
//! a flat per-leaf view of one realization for the zero finder.
//!
//! Determinism contract: every Gaussian is a pure function of
//! (seed, replicate, edge path), replicates are farmed out to rayon whole,
//! and within-replicate arithmetic is sequential, so ensembles are
//! bit-identical for any worker count.

use crate::error::{GremError, Result};
use crate::logc::LogComplex;
use crate::model::{ModelParams, Normalizers};
use crate::moments::{expectation_log, variance_exact};
use crate::rng::Prf;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Replicate stream tags keep the edge-Gaussian, cascade and auxiliary
/// streams disjoint under one seed.
const TAG_TREE: u64 = 0x7472_6565; // "tree"

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelParams,
    pub n: u32,
    pub seed: u64,
    pub replicates: usize,
    pub betas: Vec<Complex64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<u64> {
        if self.replicates == 0 {
            return Err(GremError::InvalidParameter("replicates must be >= 1".into()));
        }
        if self.betas.is_empty() {
            return Err(GremError::InvalidParameter("beta set is empty".into()));
        }
        self.model.total_leaves(self.n)
    }
}

/// Z_n evaluated at each beta of the config, for one noise realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Replicate {
    pub index: usize,
    pub values: Vec<LogComplex>,
}

struct TreeWalk<'m> {
    model: &'m ModelParams,
    counts: Vec<u64>,
    sqrt_na: Vec<f64>, // sqrt(n a_k) per level
    betas: Vec<Complex64>,
    prf: Prf,
}

impl<'m> TreeWalk<'m> {
    fn new(model: &'m ModelParams, n: u32, betas: &[Complex64], prf: Prf) -> Result<Self> {
        let counts = model.branching_numbers(n)?;
        let sqrt_na = (1..=model.d)
            .map(|k| (n as f64 * model.a(k)).sqrt())
            .collect();
        Ok(TreeWalk {
            model,
            counts,
            sqrt_na,
            betas: betas.to_vec(),
            prf,
        })
    }

    /// Log-domain leaf fold for exponent ranges beyond f64.
    fn sum_log(&self, level: usize, prefix: Prf, energy: f64, acc: &mut [LogComplex]) {
        let k = level - 1;
        let last = level == self.model.d;
        for child in 1..=self.counts[k] {
            let node = prefix.derive(child);
            let e = energy + self.sqrt_na[k] * crate::special::normal_quantile(
                crate::rng::u64_to_unit(node.value()),
            );
            if last {
                for (b, slot) in self.betas.iter().zip(acc.iter_mut()) {
                    *slot = slot.add(&LogComplex::from_exponent(b * e));
                }
            } else {
                self.sum_log(level + 1, node, e, acc);
            }
        }
    }

    fn run(&self, replicate: usize, n: u32) -> Vec<LogComplex> {
        let root = self.prf.derive(TAG_TREE).derive(replicate as u64);
        let nf = n as f64;
        let needs_log = self
            .betas
            .iter()
            .any(|b| nf * self.model.total_a() * b.norm_sqr() > 500.0);
        if needs_log {
            let mut acc = vec![LogComplex::ZERO; self.betas.len()];
            self.sum_log(1, root, 0.0, &mut acc);
            return acc;
        }
        // Exponents fit in f64 here (the quantile map bounds |xi| by ~8.3),
        // so materialize the leaf exponents once and run the lane-batched
        // kernels per beta.
        let total: u64 = self.counts.iter().product();
        let mut energies = Vec::with_capacity(total as usize);
        collect_energies(1, self.model.d, &self.counts, &self.sqrt_na, root, 0.0, &mut energies);
        self.betas
            .iter()
            .map(|b| {
                if b.im == 0.0 {
                    LogComplex::from_real(crate::fastmath::sum_exp(&energies, b.re, 0.0))
                } else {
                    let (re, im) = crate::fastmath::sum_cis(&energies, b.re, b.im, 0.0);
                    LogComplex::from_complex(Complex64::new(re, im))
                }
            })
            .collect()
    }
}

/// Depth-first materialization of the leaf exponents sqrt(n) X_leaf, in a
/// fixed traversal order shared by every evaluation path.
fn collect_energies(
    level: usize,
    d: usize,
    counts: &[u64],
    sqrt_na: &[f64],
    prefix: Prf,
    energy: f64,
    out: &mut Vec<f64>,
) {
    let k = level - 1;
    for child in 1..=counts[k] {
        let node = prefix.derive(child);
        let e = energy
            + sqrt_na[k] * crate::special::normal_quantile(crate::rng::u64_to_unit(node.value()));
        if level == d {
            out.push(e);
        } else {
            collect_energies(level + 1, d, counts, sqrt_na, node, e, out);
        }
    }
}

/// Samples the configured replicate ensemble; the same noise drives every
/// beta within a replicate (common random numbers).
pub fn sample_partition(config: &SimConfig) -> Result<Vec<Replicate>> {
    config.validate()?;
    let walk = TreeWalk::new(&config.model, config.n, &config.betas, Prf::new(config.seed))?;
    Ok((0..config.replicates)
        .into_par_iter()
        .map(|index| Replicate {
            index,
            values: walk.run(index, config.n),
        })
        .collect())
}

/// Per-beta summary of the empirical log-partition function
/// F_n = (1/n) log |Z_n|.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogPartitionTable {
    pub beta: Complex64,
    pub samples: Vec<f64>,
    pub median: f64,
    pub iqr: f64,
    /// Replicates where |Z_n| was exactly zero (excluded from samples).
    pub zero_values: usize,
}

pub fn empirical_log_partition(config: &SimConfig) -> Result<Vec<LogPartitionTable>> {
    let ensemble = sample_partition(config)?;
    let nf = config.n as f64;
    Ok(config
        .betas
        .iter()
        .enumerate()
        .map(|(j, &beta)| {
            let mut samples: Vec<f64> = Vec::with_capacity(ensemble.len());
            let mut zero_values = 0usize;
            for rep in &ensemble {
                let v = rep.values[j];
                if v.is_zero() {
                    zero_values += 1;
                } else {
                    samples.push(v.ln_mod / nf);
                }
            }
            samples.sort_by(f64::total_cmp);
            let median = quantile_sorted(&samples, 0.5);
            let iqr = quantile_sorted(&samples, 0.75) - quantile_sorted(&samples, 0.25);
            LogPartitionTable {
                beta,
                samples,
                median,
                iqr,
                zero_values,
            }
        })
        .collect())
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// How a fluctuation ensemble is normalized before distributional testing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluctNormalization {
    /// (Z - E Z) / sqrt(Var Z), exact finite-n moments.
    MeanVar,
    /// Z / e^{c_n(beta)}; fails on phase boundaries where c_n is undefined.
    ExpCn,
    /// Boundary resolution sigma(n) = sigma_1/2 - u/(2 sqrt(n a_1)) at fixed
    /// tau; mean/variance normalization at the drifting beta.
    Boundary { u: f64 },
}

/// Returns M normalized fluctuation samples at one beta.
pub fn fluctuation_ensemble(
    model: &ModelParams,
    n: u32,
    beta: Complex64,
    seed: u64,
    replicates: usize,
    normalization: FluctNormalization,
) -> Result<Vec<Complex64>> {
    let beta_eff = match normalization {
        FluctNormalization::Boundary { u } => {
            let nf = n as f64;
            Complex64::new(
                model.sigma(1) / 2.0 - u / (2.0 * (nf * model.a(1)).sqrt()),
                beta.im,
            )
        }
        _ => beta,
    };
    let config = SimConfig {
        model: model.clone(),
        n,
        seed,
        replicates,
        betas: vec![beta_eff],
    };
    let ensemble = sample_partition(&config)?;
    match normalization {
        FluctNormalization::MeanVar | FluctNormalization::Boundary { .. } => {
            let mean = expectation_log(model, n, beta_eff)?;
            let rep = variance_exact(model, n, beta_eff)?;
            let half_ln_var = 0.5 * rep.ln_variance;
            if half_ln_var == f64::NEG_INFINITY {
                return Err(GremError::InvalidParameter(
                    "variance vanishes at beta = 0; nothing to normalize".into(),
                ));
            }
            Ok(ensemble
                .iter()
                .map(|r| {
                    let centered = r.values[0].sub(&mean);
                    Complex64::from_polar(
                        (centered.ln_mod - half_ln_var).exp(),
                        centered.arg,
                    )
                })
                .collect())
        }
        FluctNormalization::ExpCn => {
            let norms = Normalizers::new(model, n)?;
            let cn = norms.c_n(beta_eff)?;
            Ok(ensemble
                .iter()
                .map(|r| r.values[0].mul_exp(-cn).to_complex())
                .collect())
        }
    }
}

/// Flat view of one replicate: the leaf exponents E_j = sqrt(n) X_leaf, so
/// Z_n(beta) = sum_j exp(beta E_j). This is the zero finder's evaluation
/// backend; chunked reductions keep results independent of thread count.
#[derive(Debug, Clone)]
pub struct LeafField {
    pub n: u32,
    pub energies: Vec<f64>,
}

const CHUNK: usize = 1 << 16;

pub fn leaf_field(model: &ModelParams, n: u32, seed: u64, replicate: usize) -> Result<LeafField> {
    let total = model.total_leaves(n)? as usize;
    let counts = model.branching_numbers(n)?;
    let sqrt_na: Vec<f64> = (1..=model.d)
        .map(|k| (n as f64 * model.a(k)).sqrt())
        .collect();
    let mut energies = Vec::with_capacity(total);
    let root = Prf::new(seed).derive(TAG_TREE).derive(replicate as u64);
    collect_energies(1, model.d, &counts, &sqrt_na, root, 0.0, &mut energies);
    Ok(LeafField { n, energies })
}

impl LeafField {
    /// Largest |E_j|; bounds exponents for overflow-safety decisions.
    pub fn max_abs_energy(&self) -> f64 {
        self.energies.iter().fold(0.0, |m, &e| m.max(e.abs()))
    }

    pub fn eval(&self, beta: Complex64) -> LogComplex {
        let partials: Vec<(f64, Complex64)> = self
            .energies
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut max_re = f64::NEG_INFINITY;
                for &e in chunk {
                    let re = beta.re * e;
                    if re > max_re {
                        max_re = re;
                    }
                }
                let (re, im) = crate::fastmath::sum_cis(chunk, beta.re, beta.im, -max_re);
                (max_re, Complex64::new(re, im))
            })
            .collect();
        combine_shifted(&partials)
    }

    /// Z and its beta-derivative sum E_j e^{beta E_j} in one pass.
    pub fn eval_with_derivative(&self, beta: Complex64) -> (LogComplex, LogComplex) {
        let partials: Vec<(f64, Complex64, Complex64)> = self
            .energies
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut max_re = f64::NEG_INFINITY;
                for &e in chunk {
                    let re = beta.re * e;
                    if re > max_re {
                        max_re = re;
                    }
                }
                let ((zr, zi), (dr, di)) =
                    crate::fastmath::sum_cis_weighted(chunk, beta.re, beta.im, -max_re);
                (max_re, Complex64::new(zr, zi), Complex64::new(dr, di))
            })
            .collect();
        let z: Vec<(f64, Complex64)> = partials.iter().map(|&(m, a, _)| (m, a)).collect();
        let dz: Vec<(f64, Complex64)> = partials.iter().map(|&(m, _, d)| (m, d)).collect();
        (combine_shifted(&z), combine_shifted(&dz))
    }

    /// Z on the uniform segment beta = start + m*step, m = 0..count, via a
    /// per-leaf geometric recurrence (one exp + sincos per leaf, then one
    /// complex multiply per point).
    pub fn eval_segment(&self, start: Complex64, step: Complex64, count: usize) -> Vec<LogComplex> {
        let end = start + step * (count.max(1) - 1) as f64;
        let bound = self.max_abs_energy() * start.re.abs().max(end.re.abs());
        if bound > 600.0 {
            // exponent range too wide for the plain recurrence
            return (0..count)
                .map(|m| self.eval(start + step * m as f64))
                .collect();
        }
        // Blocks of 8 leaves advance together, split into re/im planes, so
        // the per-point complex multiplies vectorize across lanes instead of
        // serializing on one latency chain.
        const B: usize = 8;
        let partials: Vec<Vec<Complex64>> = self
            .energies
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![Complex64::new(0.0, 0.0); count];
                let mut blocks = chunk.chunks_exact(B);
                for block in blocks.by_ref() {
                    let mut wre = [0.0f64; B];
                    let mut wim = [0.0f64; B];
                    let mut qre = [0.0f64; B];
                    let mut qim = [0.0f64; B];
                    for l in 0..B {
                        let e = block[l];
                        let (r, i) = crate::fastmath::cis_exp(start.re * e, start.im * e);
                        wre[l] = r;
                        wim[l] = i;
                        let (r, i) = crate::fastmath::cis_exp(step.re * e, step.im * e);
                        qre[l] = r;
                        qim[l] = i;
                    }
                    for slot in acc.iter_mut() {
                        let mut sre = 0.0;
                        let mut sim = 0.0;
                        for l in 0..B {
                            sre += wre[l];
                            sim += wim[l];
                            let t = wre[l] * qre[l] - wim[l] * qim[l];
                            wim[l] = wre[l] * qim[l] + wim[l] * qre[l];
                            wre[l] = t;
                        }
                        *slot += Complex64::new(sre, sim);
                    }
                }
                for &e in blocks.remainder() {
                    let (wr, wi) = crate::fastmath::cis_exp(start.re * e, start.im * e);
                    let mut w = Complex64::new(wr, wi);
                    let (qr, qi) = crate::fastmath::cis_exp(step.re * e, step.im * e);
                    let q = Complex64::new(qr, qi);
                    for slot in acc.iter_mut() {
                        *slot += w;
                        w *= q;
                    }
                }
                acc
            })
            .collect();
        (0..count)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for part in &partials {
                    acc += part[m];
                }
                LogComplex::from_complex(acc)
            })
            .collect()
    }
}

fn combine_shifted(parts: &[(f64, Complex64)]) -> LogComplex {
    let global = parts
        .iter()
        .filter(|(_, a)| *a != Complex64::new(0.0, 0.0))
        .map(|&(m, _)| m)
        .fold(f64::NEG_INFINITY, f64::max);
    if global == f64::NEG_INFINITY {
        return LogComplex::ZERO;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &(m, a) in parts {
        acc += a * (m - global).exp();
    }
    if acc == Complex64::new(0.0, 0.0) {
        return LogComplex::ZERO;
    }
    LogComplex {
        ln_mod: global + acc.norm().ln(),
        arg: acc.arg(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, BranchingRule};

    fn small_model() -> ModelParams {
        build_model(
            2,
            vec![1.0, 1.0],
            vec![1.8, 2.6],
            BranchingRule::Floor,
        )
        .unwrap()
    }

    #[test]
    fn beta_zero_gives_leaf_count() {
        let m = small_model();
        let cfg = SimConfig {
            model: m.clone(),
            n: 5,
            seed: 11,
            replicates: 3,
            betas: vec![Complex64::new(0.0, 0.0)],
        };
        let total = m.total_leaves(5).unwrap() as f64;
        for rep in sample_partition(&cfg).unwrap() {
            let z = rep.values[0].to_complex();
            assert!((z.re - total).abs() < 1e-6 * total && z.im.abs() < 1e-9 * total);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let m = small_model();
        let cfg = SimConfig {
            model: m,
            n: 6,
            seed: 99,
            replicates: 16,
            betas: vec![Complex64::new(0.4, 0.3), Complex64::new(-0.2, 0.9)],
        };
        let pool1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = pool1.install(|| sample_partition(&cfg).unwrap());
        let b = pool4.install(|| sample_partition(&cfg).unwrap());
        for (ra, rb) in a.iter().zip(&b) {
            for (va, vb) in ra.values.iter().zip(&rb.values) {
                assert_eq!(va.ln_mod.to_bits(), vb.ln_mod.to_bits());
                assert_eq!(va.arg.to_bits(), vb.arg.to_bits());
            }
        }
    }

    #[test]
    fn conjugation_symmetry_exact_with_shared_noise() {
        let m = small_model();
        let beta = Complex64::new(0.35, 0.8);
        let cfg = SimConfig {
            model: m,
            n: 6,
            seed: 5,
            replicates: 8,
            betas: vec![beta, beta.conj()],
        };
        for rep in sample_partition(&cfg).unwrap() {
            let z = rep.values[0].to_complex();
            let zc = rep.values[1].to_complex();
            assert!((z.conj() - zc).norm() < 1e-10 * z.norm());
        }
    }

    #[test]
    fn two_leaf_closed_form() {
        // d = 1 with an explicit two-leaf table: Z = e^{b c x1} + e^{b c x2}.
        let mut tables = std::collections::BTreeMap::new();
        tables.insert(3u32, vec![2u64]);
        let m = build_model(1, vec![0.9], vec![1.5], BranchingRule::Explicit(tables)).unwrap();
        let beta = Complex64::new(0.7, -1.1);
        let field = leaf_field(&m, 3, 17, 0).unwrap();
        assert_eq!(field.energies.len(), 2);
        let want = (beta * field.energies[0]).exp() + (beta * field.energies[1]).exp();
        let cfg = SimConfig {
            model: m,
            n: 3,
            seed: 17,
            replicates: 1,
            betas: vec![beta],
        };
        let got = sample_partition(&cfg).unwrap()[0].values[0].to_complex();
        assert!((got - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn sample_mean_matches_expectation() {
        let m = small_model();
        let beta = Complex64::new(0.3, 0.2);
        let n = 6;
        let cfg = SimConfig {
            model: m.clone(),
            n,
            seed: 2024,
            replicates: 8_000,
            betas: vec![beta],
        };
        let ens = sample_partition(&cfg).unwrap();
        let mut mean = Complex64::new(0.0, 0.0);
        for r in &ens {
            mean += r.values[0].to_complex();
        }
        mean /= ens.len() as f64;
        let want = crate::moments::expectation(&m, n, beta).unwrap();
        let sd = variance_exact(&m, n, beta).unwrap().variance().sqrt();
        let se = sd / (ens.len() as f64).sqrt();
        assert!(
            (mean - want).norm() < 4.0 * se * std::f64::consts::SQRT_2,
            "mean {mean}, want {want}, se {se}"
        );
    }

    #[test]
    fn empirical_log_partition_at_beta_zero() {
        let m = small_model();
        let cfg = SimConfig {
            model: m.clone(),
            n: 7,
            seed: 1,
            replicates: 4,
            betas: vec![Complex64::new(0.0, 0.0)],
        };
        let t = &empirical_log_partition(&cfg).unwrap()[0];
        let want = (m.total_leaves(7).unwrap() as f64).ln() / 7.0;
        assert!((t.median - want).abs() < 1e-9);
        assert!(t.iqr.abs() < 1e-9);
        assert_eq!(t.zero_values, 0);
    }

    #[test]
    fn leaf_field_eval_agrees_with_tree_walk() {
        let m = small_model();
        let beta = Complex64::new(0.5, 1.2);
        let field = leaf_field(&m, 6, 123, 2).unwrap();
        let direct = field.eval(beta);
        let cfg = SimConfig {
            model: m,
            n: 6,
            seed: 123,
            replicates: 3,
            betas: vec![beta],
        };
        let walk = &sample_partition(&cfg).unwrap()[2].values[0];
        assert!((direct.ln_mod - walk.ln_mod).abs() < 1e-9);
        assert!(
            crate::logc::reduce_arg(direct.arg - walk.arg).abs() < 1e-9
        );
    }

    #[test]
    fn segment_eval_matches_pointwise() {
        let m = small_model();
        let field = leaf_field(&m, 6, 9, 0).unwrap();
        let start = Complex64::new(0.1, 0.7);
        let step = Complex64::new(0.01, -0.005);
        let seg = field.eval_segment(start, step, 24);
        for (i, v) in seg.iter().enumerate() {
            let direct = field.eval(start + step * i as f64);
            assert!(
                (v.ln_mod - direct.ln_mod).abs() < 1e-9,
                "i = {i}: {} vs {}",
                v.ln_mod,
                direct.ln_mod
            );
            assert!(crate::logc::reduce_arg(v.arg - direct.arg).abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = small_model();
        let field = leaf_field(&m, 6, 31, 1).unwrap();
        let beta = Complex64::new(0.4, 0.6);
        let h = 1e-6;
        let (_, dz) = field.eval_with_derivative(beta);
        let fd = (field.eval(beta + Complex64::new(h, 0.0)).to_complex()
            - field.eval(beta - Complex64::new(h, 0.0)).to_complex())
            / (2.0 * h);
        assert!((dz.to_complex() - fd).norm() < 1e-4 * fd.norm());
    }

    #[test]
    fn fluctuation_mean_var_ensemble_is_standardized() {
        let m = small_model();
        let beta = Complex64::new(0.2, 0.5);
        let ws =
            fluctuation_ensemble(&m, 8, beta, 7, 4000, FluctNormalization::MeanVar).unwrap();
        let mean: Complex64 = ws.iter().sum::<Complex64>() / ws.len() as f64;
        let second: f64 = ws.iter().map(|w| w.norm_sqr()).sum::<f64>() / ws.len() as f64;
        assert!(mean.norm() < 0.1, "mean {mean}");
        assert!((second - 1.0).abs() < 0.25, "E|W|^2 = {second}");
    }

    #[test]
    fn exp_cn_rejects_boundary() {
        let m = build_model(1, vec![2.0], vec![std::f64::consts::E], BranchingRule::Floor)
            .unwrap();
        // triple point of level 1 is a boundary for c_{n,1}
        let err = fluctuation_ensemble(
            &m,
            4,
            Complex64::new(0.5, 0.5),
            1,
            2,
            FluctNormalization::ExpCn,
        )
        .unwrap_err();
        assert!(matches!(err, GremError::PhaseBoundary(_)));
    }
}
