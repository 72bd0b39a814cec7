use grem::model::{build_model, BranchingRule, ModelParams};
use grem::phase::{log_partition_limit, Rect};
use grem::simulate::{self, SimConfig};
use num_complex::Complex64;
use std::time::Instant;

fn c2_model() -> ModelParams {
    build_model(2, vec![1.0, 0.2], vec![1.72, 1.28], BranchingRule::Floor).unwrap()
}

fn probe_c2() {
    let m = c2_model();
    eprintln!("sigma = {:?}", m.sigmas());
    let betas = vec![
        ("EE", Complex64::new(0.3, 0.0)),
        ("FE", Complex64::new(0.2, 0.75)),
        ("FF", Complex64::new(0.2, 1.2)),
        ("GE", Complex64::new(1.2, 0.0)),
        ("GF", Complex64::new(0.65, 0.95)),
        ("EGbd", Complex64::new(0.75, m.sigma(1) - 0.75)),
    ];
    for (name, b) in &betas {
        eprintln!("{name}: word {:?}", grem::phase::classify(&m, *b).word);
    }
    let t0 = Instant::now();
    for n in [8u32, 12, 16, 20] {
        let cfg = SimConfig {
            model: m.clone(),
            n,
            seed: 7,
            replicates: 48,
            betas: betas.iter().map(|(_, b)| *b).collect(),
        };
        let tables = simulate::empirical_log_partition(&cfg).unwrap();
        print!("n={n:2}: ");
        for ((name, b), t) in betas.iter().zip(&tables) {
            let p = log_partition_limit(&m, *b);
            print!("{name}:{:+.3} ", t.median - p);
        }
        eprintln!("  [{:.1?}]", t0.elapsed());
    }
}

fn probe_c7() {
    // boundary CLT
    let m1 = build_model(1, vec![2.0], vec![1.3], BranchingRule::Floor).unwrap();
    eprintln!("d=1 sigma1 = {}", m1.sigma(1));
    let tau: f64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(0.9);
    eprintln!("tau = {tau}");
    for n in [40u32] {
        for u in [-1.0f64, 0.0, 1.0] {
            let t1 = Instant::now();
            let w = simulate::fluctuation_ensemble(
                &m1, n, Complex64::new(0.0, tau), 5, 20_000,
                simulate::FluctNormalization::Boundary { u },
            )
            .unwrap();
            let v_robust = grem::stats::robust_complex_variance(&w);
            let v_plain: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>() / w.len() as f64;
            let phi_u = grem::special::phi_real(u);
            // low-quantile estimator: q25(|W|^2)/(-ln 0.75)
            let mut sq: Vec<f64> = w.iter().map(|x| x.norm_sqr()).collect();
            sq.sort_by(f64::total_cmp);
            let v_q25 = grem::simulate::quantile_sorted(&sq, 0.25) / 0.2876820724517809;
            let v_q10 = grem::simulate::quantile_sorted(&sq, 0.10) / 0.10536051565782628;
            // IQR of Re: N(0, v/2): IQR = 1.34898 sqrt(v/2)
            let mut re: Vec<f64> = w.iter().map(|x| x.re).collect();
            re.sort_by(f64::total_cmp);
            let iqr = grem::simulate::quantile_sorted(&re, 0.75) - grem::simulate::quantile_sorted(&re, 0.25);
            let v_iqr = 2.0 * (iqr / 1.3489795003921634).powi(2);
            let sd_sq = {
                let mean = v_plain;
                (sq.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (sq.len() - 1) as f64)
                    .sqrt()
            };
            let se_plain = sd_sq / (sq.len() as f64).sqrt();
            eprintln!(
                "boundary n={n} u={u}: med {v_robust:.4} plain {v_plain:.4}+-{se_plain:.4} (3se {:.4}) gap {:.4} target {phi_u:.4} [{:.1?}]",
                3.0 * se_plain, (v_plain - phi_u).abs(), t1.elapsed()
            );
        }
    }
}

fn probe_c5() {
    let m = build_model(1, vec![2.0], vec![std::f64::consts::E], BranchingRule::Floor).unwrap();
    let n = 16u32;
    let f_window = Rect::new(0.05, 0.35, 0.85, 1.35);
    let e_window = Rect::new(0.05, 0.35, 0.10, 0.60);
    let reps = 6usize; // probe subset
    let t0 = Instant::now();
    let mut f_count = 0u64;
    let mut e_count = 0u64;
    for rep in 0..reps {
        let field = simulate::leaf_field(&m, n, 3, rep).unwrap();
        let zf = grem::zeros::find_zeros(&field, &m, f_window, f64::NAN).unwrap();
        f_count += zf.total_multiplicity();
        let ze = grem::zeros::find_zeros(&field, &m, e_window, f64::NAN).unwrap();
        e_count += ze.total_multiplicity();
        eprintln!(
            "rep {rep}: F zeros {} E zeros {} [{:.1?}]",
            zf.total_multiplicity(),
            ze.total_multiplicity(),
            t0.elapsed()
        );
    }
    let emp = 2.0 * std::f64::consts::PI * f_count as f64
        / (n as f64 * f_window.area() * reps as f64);
    eprintln!("density: empirical {emp:.3} target 4; E-count {e_count}");
}

fn probe_c6() {
    let m = build_model(1, vec![2.0], vec![2.0], BranchingRule::Floor).unwrap();
    let n = 20u32;
    let s1 = m.sigma(1);
    eprintln!("sigma1 = {s1}");
    // beak band: G side of the segment sigma+tau = s1
    let beak_rect = Rect::new(0.45 * s1, 1.25 * s1, 0.04 * s1, 0.58 * s1);
    // arc band around |beta| = s1/sqrt2
    let r = s1 / std::f64::consts::SQRT_2;
    let arc_rect = Rect::new(-0.78 * r, 0.78 * r, 0.60 * r, 1.45 * r);
    let beak_rect_neg = Rect::new(-1.25 * s1, -0.45 * s1, 0.04 * s1, 0.58 * s1);
    let reps = 12usize;
    let t0 = Instant::now();
    let mut beak_sets = Vec::new();
    let mut arc_sets = Vec::new();
    for rep in 0..reps {
        let field = simulate::leaf_field(&m, n, 13, rep).unwrap();
        let zb = grem::zeros::find_zeros(&field, &m, beak_rect, f64::NAN).unwrap();
        let mut zn = grem::zeros::find_zeros(&field, &m, beak_rect_neg, f64::NAN).unwrap();
        // mirror the negative-sigma segment onto the first quadrant
        for z in &mut zn.zeros {
            z.position = num_complex::Complex64::new(-z.position.re, z.position.im);
        }
        let za = grem::zeros::find_zeros(&field, &m, arc_rect, f64::NAN).unwrap();
        eprintln!(
            "rep {rep}: beak+ {} beak- {} arc {} [{:.1?}]",
            zb.zeros.len(),
            zn.zeros.len(),
            za.zeros.len(),
            t0.elapsed()
        );
        beak_sets.push(zb);
        beak_sets.push(zn);
        arc_sets.push(za);
    }
    let beak = grem::zeros::beak_spacings(
        &beak_sets, &m, n, 1, 0.02 * s1, 0.50 * s1, (0.04 * s1, 0.55 * s1),
    );
    eprintln!(
        "beak spacings: {} samples, mean ratio {:.3}",
        beak.samples.len(),
        beak.mean_ratio
    );
    let arc = grem::zeros::arc_spacings(&arc_sets, &m, n, 1, 0.35 * r);
    eprintln!(
        "arc spacings: {} samples, mean ratio {:.3}",
        arc.samples.len(),
        arc.mean_ratio
    );
}

fn probe_c9() {
    let m = build_model(2, vec![2.0, 0.08], vec![1.3634, 1.5370], BranchingRule::Floor).unwrap();
    eprintln!("sigma = {:?}", m.sigmas());
    let n = 20u32;
    eprintln!("leaves at n={n}: {:?}", m.total_leaves(n));
    let reps: usize = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(2000);
    let cases = [
        ("i/EE", Complex64::new(0.02, 0.02)),
        ("ii/FE", Complex64::new(0.1, 0.45)),
        ("iii/GE", Complex64::new(0.60, 0.0)),
        ("iv/GF", Complex64::new(0.8, 2.3)),
    ];
    for (name, b) in &cases {
        eprintln!("{name}: word {:?}", grem::phase::classify(&m, *b).word);
    }
    let t0 = Instant::now();
    let cfg = SimConfig {
        model: m.clone(),
        n,
        seed: 3,
        replicates: reps,
        betas: cases.iter().map(|(_, b)| *b).collect(),
    };
    let ens = simulate::sample_partition(&cfg).unwrap();
    eprintln!("ensemble: {:.1?}", t0.elapsed());
    let norms = grem::model::Normalizers::new(&m, n).unwrap();
    // (i): W = Z / e^{c_n} -> 1
    let cn = norms.c_n(cases[0].1).unwrap();
    let w0: Vec<Complex64> = ens.iter().map(|r| r.values[0].mul_exp(-cn).to_complex()).collect();
    let max_dev = w0.iter().map(|x| (x - Complex64::new(1.0, 0.0)).norm()).fold(0.0, f64::max);
    eprintln!("(i) max_dev = {max_dev:.4}");
    // (ii): mean-var normalized complex normal
    let mean = grem::moments::expectation_log(&m, n, cases[1].1).unwrap();
    let vrep = grem::moments::variance_exact(&m, n, cases[1].1).unwrap();
    let w1: Vec<Complex64> = ens.iter().map(|r| {
        let c = r.values[1].sub(&mean);
        Complex64::from_polar((c.ln_mod - 0.5 * vrep.ln_variance).exp(), c.arg)
    }).collect();
    let rep = grem::stats::test_complex_normal(&w1, 1.0);
    eprintln!("(ii) re={:.4} im={:.4} |EW2|={:.4}<{:.4} arg={:.4}",
        rep.ks_re.p_value, rep.ks_im.p_value, rep.mean_square_abs, rep.mean_square_bound, rep.arg_uniformity.p_value);
    // (iii): cascade zeta with finite-size tilted reference
    let cn3 = norms.c_n(cases[2].1).unwrap();
    let w2: Vec<Complex64> = ens.iter().map(|r| r.values[2].mul_exp(-cn3).to_complex()).collect();
    let law = grem::stats::select_law(&m, n, cases[2].1).unwrap();
    let reference = grem::stats::CascadeReference {
        seed: 999, t_max: f64::INFINITY,
        tilts: grem::stats::finite_size_tilts(&m, n, 1).unwrap(),
        count_matched: true,
        replicates: 4 * reps,
    };
    let rep = grem::stats::test_against_law(&w2, &law, Some(&reference)).unwrap();
    eprintln!("(iii) {rep:?} [{:.1?}]", t0.elapsed());
    // (iv): stable tail + isotropy
    let cn4 = norms.c_n(cases[3].1).unwrap();
    let w3: Vec<Complex64> = ens.iter().map(|r| r.values[3].mul_exp(-cn4).to_complex()).collect();
    let law = grem::stats::select_law(&m, n, cases[3].1).unwrap();
    eprintln!("law (iv) = {law:?}");
    let reference4 = grem::stats::CascadeReference {
        seed: 777, t_max: f64::INFINITY,
        tilts: grem::stats::finite_size_tilts(&m, n, 1).unwrap(),
        count_matched: true,
        replicates: 4 * reps,
    };
    let rep = grem::stats::test_against_law(&w3, &law, Some(&reference4)).unwrap();
    eprintln!("(iv) {rep:?} [{:.1?}]", t0.elapsed());
}

fn main() {
    use std::io::Write;
    let _ = std::io::stdout().flush();
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "c2" => probe_c2(),
        "c5" => probe_c5(),
        "c6" => probe_c6(),
        "c7" => probe_c7(),
        "c8" => probe_c8(),
        "c9" => probe_c9(),
        _ => eprintln!("usage: probe_tmp c2|c5|c6|c7|c9"),
    }
}

#[allow(dead_code)]
fn probe_c8() {
    use num_complex::Complex64 as C;
    let t0 = Instant::now();
    let s1 = grem::cascade::stability_test(1, &[C::new(0.8, 0.0)], 3, 5000, 200.0, 21).unwrap();
    eprintln!("stability d=1 z=0.8 m=3: |.| p={:.4} arg p={:.4} log p={:.4} [{:.1?}]",
        s1.ks_modulus_p, s1.ks_argument_p, s1.ks_log_modulus_p, t0.elapsed());
    let s2 = grem::cascade::stability_test(2, &[C::new(0.9, 0.0), C::new(0.7, 0.0)], 2, 5000, 200.0, 22).unwrap();
    eprintln!("stability d=2 z=(0.9,0.7) m=2: |.| p={:.4} arg p={:.4} log p={:.4} [{:.1?}]",
        s2.ks_modulus_p, s2.ks_argument_p, s2.ks_log_modulus_p, t0.elapsed());
    let tail = grem::cascade::tail_index(1, &[C::new(0.8, 0.0)], 20_000, 200.0, 23).unwrap();
    eprintln!("tail d=1 z=0.8: {:.4} vs {:.4} (k={}) [{:.1?}]",
        tail.estimated_index, tail.predicted_index, tail.order_statistics_used, t0.elapsed());
    // moment dichotomy: truncated p-moment at p = 0.3 across an M-ladder
    for m in [5000usize, 10000, 20000] {
        let stats = grem::cascade::sample_zeta_statistics(1, &[C::new(2.0, 0.0)], 200.0, 29, 0, m).unwrap();
        let p_mom: f64 = stats.iter().map(|w| w.norm().powf(0.3)).sum::<f64>() / m as f64;
        eprintln!("p-moment(0.3) at M={m}: {p_mom:.4} [{:.1?}]", t0.elapsed());
    }
    // intensity at d=2 is in unit tests; quick re-check at d=1
    let mut total = 0u64;
    for rep in 0..30000 {
        total += grem::cascade::sample_cascade(1, 1.0, 31, rep).unwrap().count_box(1.0);
    }
    eprintln!("d=1 unit-box intensity: {:.4} [{:.1?}]", total as f64 / 30000.0, t0.elapsed());
}
