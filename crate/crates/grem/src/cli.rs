//! Command-line experiment runner: file-driven, reproducible runs over the
//! library. Every run writes a manifest (full configuration + version +
//! seed) beside its outputs; `rerun` replays a manifest bit-identically.
//!
//! Exit codes: 0 success, 2 validation error, 3 numeric failure.

use crate::cascade;
use crate::error::{GremError, Result};
use crate::logc::{reduce_arg, LogComplex};
use crate::model::{ComplexTemp, ModelParams, Normalizers};
use crate::phase::{self, Rect};
use crate::simulate::{self, SimConfig};
use crate::stats;
use crate::zeros;
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser, Serialize, Deserialize, Clone)]
#[command(name = "grem", version, about = "hierarchical random energy model laboratory")]
pub struct Cli {
    /// Worker thread cap (default: available parallelism). Results are
    /// bit-identical for any value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize, Deserialize, Clone)]
pub enum Command {
    /// Classify a grid of complex temperatures; emits CSV.
    Phase(PhaseArgs),
    /// Exact finite-n moment report at one beta; emits JSON.
    Moments(MomentsArgs),
    /// Sample a replicate ensemble; emits the binary ensemble format.
    Simulate(SimulateArgs),
    /// Find zeros of one sampled partition function in a rectangle; CSV.
    Zeros(ZerosArgs),
    /// Normalized fluctuation ensemble tested against a limit law; JSON.
    Fluct(FluctArgs),
    /// Poisson cascade zeta statistics; JSON.
    Zeta(ZetaArgs),
    /// Continuum-profile log-partition function; JSON.
    Crem(CremArgs),
    /// Finite-difference check of the Laplacian identity; JSON.
    Laplacian(LaplacianArgs),
    /// Replay a previously written manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct PhaseArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// xmin,xmax,ymin,ymax,nx,ny
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct MomentsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub beta: String,
    /// Optional second beta: also emit the exact pair correlation.
    #[arg(long)]
    pub beta2: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: u32,
    /// JSON file: array of betas ("0.3+0.1i" or [re, im]) or
    /// {"grid": [xmin,xmax,ymin,ymax,nx,ny]}.
    #[arg(long)]
    pub betas: PathBuf,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Payload format: auto | complex | log.
    #[arg(long, default_value = "auto")]
    pub format: String,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct ZerosArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replicate index of the sampled field.
    #[arg(long, default_value_t = 0)]
    pub replicate: usize,
    /// xmin,xmax,ymin,ymax
    #[arg(long)]
    pub rect: String,
    /// Residual tolerance relative to the local scale e^{n p}.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct FluctArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: u32,
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// auto | const1 | complex-normal | real-normal | cascade-zeta | stable
    #[arg(long, default_value = "auto")]
    pub law: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct ZetaArgs {
    #[arg(long)]
    pub d: usize,
    /// Comma-separated components, e.g. 0.9,0.7 or 0.9+0.1i,0.7
    #[arg(long)]
    pub z: String,
    #[arg(long, default_value_t = 200.0, name = "T")]
    pub t: f64,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also run the operator-stability two-sample test at this m.
    #[arg(long)]
    pub stability_m: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct CremArgs {
    /// JSON profile {"knots": [[t, A], ...]}.
    #[arg(long, name = "A")]
    pub profile: PathBuf,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct LaplacianArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// xmin,xmax,ymin,ymax
    #[arg(long)]
    pub rect: String,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    #[arg(long, default_value_t = 12)]
    pub grid_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize, Deserialize, Clone)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

/// Run manifest: enough to replay the run exactly.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// Wall-clock stamp; excluded from reproducibility comparisons.
    pub timestamp_unix_s: u64,
}

fn exit_code(err: &GremError) -> i32 {
    match err {
        GremError::InvalidParameter(_)
        | GremError::ConvexityViolation { .. }
        | GremError::LeafBudgetExceeded { .. }
        | GremError::DomainError(_)
        | GremError::GeometryError(_)
        | GremError::UnknownKind(_)
        | GremError::UnknownLaw(_)
        | GremError::DegenerateProfile(_)
        | GremError::PhaseBoundary(_)
        | GremError::Io(_)
        | GremError::Json(_) => 2,
        GremError::Overflow(_)
        | GremError::NonConvergence(_)
        | GremError::PoleProximity(_)
        | GremError::BoundaryZero(_)
        | GremError::NonIntegerWinding(_)
        | GremError::ZeroValue(_) => 3,
    }
}

/// Library entry point for the thin binary.
pub fn main_from_args<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(k) = cli.threads {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("grem: {e}");
            exit_code(&e)
        }
    }
}

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Phase(a) => cmd_phase(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Zeros(a) => cmd_zeros(a),
        Command::Fluct(a) => cmd_fluct(a),
        Command::Zeta(a) => cmd_zeta(a),
        Command::Crem(a) => cmd_crem(a),
        Command::Laplacian(a) => cmd_laplacian(a),
        Command::Rerun(a) => cmd_rerun(a),
    }
}

fn load_model(path: &Path) -> Result<ModelParams> {
    ModelParams::from_json(&std::fs::read_to_string(path)?)
}

fn parse_beta(s: &str) -> Result<Complex64> {
    Ok(s.parse::<ComplexTemp>()?.to_complex())
}

fn parse_floats(s: &str, expect: usize, what: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| GremError::InvalidParameter(format!("cannot parse {what}: `{s}`")))?;
    if vals.len() != expect {
        return Err(GremError::InvalidParameter(format!(
            "{what} needs {expect} comma-separated numbers, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn parse_rect(s: &str) -> Result<Rect> {
    let v = parse_floats(s, 4, "rect")?;
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

fn write_manifest(command: &Command, out: &Path) -> Result<()> {
    let manifest = Manifest {
        tool: "grem".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.clone(),
        timestamp_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let path = out.with_extension(match out.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.manifest.json"),
        None => "manifest.json".to_string(),
    });
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, command: &Command) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => {
            std::fs::write(path, &text)?;
            write_manifest(command, path)?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

// -------------------------------------------------------------------------
// subcommands
// -------------------------------------------------------------------------

fn cmd_phase(args: &PhaseArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let g = parse_floats(&args.grid, 6, "grid")?;
    let (nx, ny) = (g[4] as usize, g[5] as usize);
    if nx < 2 || ny < 2 {
        return Err(GremError::InvalidParameter("grid needs nx, ny >= 2".into()));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    writeln!(f, "sigma,tau,labels,d1,d2,d3,p,area_density")?;
    for i in 0..nx {
        for j in 0..ny {
            let z = Complex64::new(
                g[0] + (g[1] - g[0]) * i as f64 / (nx - 1) as f64,
                g[2] + (g[3] - g[2]) * j as f64 / (ny - 1) as f64,
            );
            let ph = phase::classify(&model, z);
            let word: String = ph.labels.iter().map(|l| l.letter()).collect();
            let (d1, d2, d3) = ph.word.map_or((-1i64, -1, -1), |(a, b, c)| {
                (a as i64, b as i64, c as i64)
            });
            let p = phase::log_partition_limit(&model, z);
            let dens = phase::zero_density(&model, z).area_density;
            writeln!(f, "{},{},{word},{d1},{d2},{d3},{p},{dens}", z.re, z.im)?;
        }
    }
    f.flush()?;
    write_manifest(&Command::Phase(args.clone()), &args.out)
}

#[derive(Serialize)]
struct MomentsOutput {
    report: crate::moments::MomentReport,
    mean: ComplexTemp,
    variance: f64,
    second_abs: f64,
    pair: Option<crate::moments::PairCorrelation>,
}

fn cmd_moments(args: &MomentsArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let beta = parse_beta(&args.beta)?;
    let report = crate::moments::variance_exact(&model, args.n, beta)?;
    let pair = match &args.beta2 {
        Some(b2) => Some(crate::moments::pair_correlation(
            &model,
            args.n,
            beta,
            parse_beta(b2)?,
        )?),
        None => None,
    };
    let out = MomentsOutput {
        mean: report.mean_value().into(),
        variance: report.variance(),
        second_abs: report.second_abs(),
        report,
        pair,
    };
    emit_json(&out, args.out.as_deref(), &Command::Moments(args.clone()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BetaSpecEntry {
    Text(String),
    Pair([f64; 2]),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BetaSpec {
    List(Vec<BetaSpecEntry>),
    Grid { grid: [f64; 6] },
}

fn load_betas(path: &Path) -> Result<Vec<Complex64>> {
    let spec: BetaSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    match spec {
        BetaSpec::List(entries) => entries
            .iter()
            .map(|e| match e {
                BetaSpecEntry::Text(s) => parse_beta(s),
                BetaSpecEntry::Pair([re, im]) => Ok(Complex64::new(*re, *im)),
            })
            .collect(),
        BetaSpec::Grid { grid } => {
            let (nx, ny) = (grid[4] as usize, grid[5] as usize);
            let mut betas = Vec::with_capacity(nx * ny);
            for i in 0..nx {
                for j in 0..ny {
                    betas.push(Complex64::new(
                        grid[0] + (grid[1] - grid[0]) * i as f64 / (nx.max(2) - 1) as f64,
                        grid[2] + (grid[3] - grid[2]) * j as f64 / (ny.max(2) - 1) as f64,
                    ));
                }
            }
            Ok(betas)
        }
    }
}

pub const ENSEMBLE_MAGIC: &[u8; 4] = b"GREM";
pub const FORMAT_COMPLEX: u32 = 1;
pub const FORMAT_LOG: u32 = 2;

/// Binary ensemble layout (little-endian): magic "GREM", version u32
/// (1 = complex64 pairs, 2 = log-domain triples), M u64 replicates,
/// B u64 betas, then M*B records. A complex record is (re, im); a
/// log-domain record is (ln_mod, reduced arg, whole phase turns).
pub fn write_ensemble(
    path: &Path,
    replicates: &[simulate::Replicate],
    betas: usize,
    format: u32,
) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(ENSEMBLE_MAGIC)?;
    f.write_all(&format.to_le_bytes())?;
    f.write_all(&(replicates.len() as u64).to_le_bytes())?;
    f.write_all(&(betas as u64).to_le_bytes())?;
    for rep in replicates {
        for v in &rep.values {
            match format {
                FORMAT_COMPLEX => {
                    let z = v.to_complex();
                    f.write_all(&z.re.to_le_bytes())?;
                    f.write_all(&z.im.to_le_bytes())?;
                }
                FORMAT_LOG => {
                    let turns = ((v.arg + std::f64::consts::PI)
                        / (2.0 * std::f64::consts::PI))
                        .floor();
                    f.write_all(&v.ln_mod.to_le_bytes())?;
                    f.write_all(&reduce_arg(v.arg).to_le_bytes())?;
                    f.write_all(&turns.to_le_bytes())?;
                }
                other => {
                    return Err(GremError::InvalidParameter(format!(
                        "unknown ensemble format {other}"
                    )))
                }
            }
        }
    }
    f.flush()?;
    Ok(())
}

pub fn read_ensemble(path: &Path) -> Result<(u32, usize, Vec<Vec<LogComplex>>)> {
    let data = std::fs::read(path)?;
    let bad = || GremError::InvalidParameter(format!("malformed ensemble file {path:?}"));
    if data.len() < 24 || &data[0..4] != ENSEMBLE_MAGIC {
        return Err(bad());
    }
    let fmt = u32::from_le_bytes(data[4..8].try_into().unwrap());
    let m = u64::from_le_bytes(data[8..16].try_into().unwrap()) as usize;
    let b = u64::from_le_bytes(data[16..24].try_into().unwrap()) as usize;
    let record = match fmt {
        FORMAT_COMPLEX => 16,
        FORMAT_LOG => 24,
        _ => return Err(bad()),
    };
    if data.len() != 24 + m * b * record {
        return Err(bad());
    }
    let mut reps = Vec::with_capacity(m);
    let mut off = 24;
    let f64_at = |data: &[u8], off: usize| {
        f64::from_le_bytes(data[off..off + 8].try_into().unwrap())
    };
    for _ in 0..m {
        let mut row = Vec::with_capacity(b);
        for _ in 0..b {
            let v = if fmt == FORMAT_COMPLEX {
                LogComplex::from_complex(Complex64::new(
                    f64_at(&data, off),
                    f64_at(&data, off + 8),
                ))
            } else {
                let turns = f64_at(&data, off + 16);
                LogComplex {
                    ln_mod: f64_at(&data, off),
                    arg: f64_at(&data, off + 8) + 2.0 * std::f64::consts::PI * turns,
                }
            };
            row.push(v);
            off += record;
        }
        reps.push(row);
    }
    Ok((fmt, b, reps))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let betas = load_betas(&args.betas)?;
    let config = SimConfig {
        model,
        n: args.n,
        seed: args.seed,
        replicates: args.reps,
        betas: betas.clone(),
    };
    let ensemble = simulate::sample_partition(&config)?;
    let format = match args.format.as_str() {
        "complex" => FORMAT_COMPLEX,
        "log" => FORMAT_LOG,
        "auto" => {
            let huge = ensemble
                .iter()
                .flat_map(|r| &r.values)
                .any(|v| v.ln_mod.abs() > 700.0);
            if huge {
                FORMAT_LOG
            } else {
                FORMAT_COMPLEX
            }
        }
        other => {
            return Err(GremError::InvalidParameter(format!(
                "unknown format `{other}` (auto | complex | log)"
            )))
        }
    };
    write_ensemble(&args.out, &ensemble, betas.len(), format)?;
    write_manifest(&Command::Simulate(args.clone()), &args.out)
}

fn cmd_zeros(args: &ZerosArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let rect = parse_rect(&args.rect)?;
    let field = simulate::leaf_field(&model, args.n, args.seed, args.replicate)?;
    let set = zeros::find_zeros(&field, &model, rect, args.tol)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    writeln!(f, "re,im,multiplicity,residual,cell_depth")?;
    for z in &set.zeros {
        writeln!(
            f,
            "{},{},{},{},{}",
            z.position.re, z.position.im, z.multiplicity, z.residual, z.cell_depth
        )?;
    }
    f.flush()?;
    write_manifest(&Command::Zeros(args.clone()), &args.out)
}

#[derive(Serialize)]
struct FluctOutput {
    beta: ComplexTemp,
    n: u32,
    law: String,
    normalization: String,
    report: stats::LawReport,
}

fn cmd_fluct(args: &FluctArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let beta = parse_beta(&args.beta)?;
    let law = match args.law.as_str() {
        "auto" => stats::select_law(&model, args.n, beta)?,
        "const1" => stats::LimitLaw::Const1,
        "complex-normal" => stats::LimitLaw::ComplexNormal { variance: 1.0 },
        "real-normal" => stats::LimitLaw::RealNormal { variance: 1.0 },
        "cascade-zeta" => {
            let (d1, _, _) = phase::classify(&model, beta).word.ok_or_else(|| {
                GremError::PhaseBoundary("beta on a boundary".into())
            })?;
            stats::LimitLaw::CascadeZeta {
                z: (1..=d1).map(|k| beta / model.sigma(k)).collect(),
            }
        }
        "stable" => {
            let (d1, _, _) = phase::classify(&model, beta).word.ok_or_else(|| {
                GremError::PhaseBoundary("beta on a boundary".into())
            })?;
            let norms = Normalizers::new(&model, args.n)?;
            stats::LimitLaw::SubgaussianStable {
                index: norms.u(1) / (args.n as f64 * model.a(1)).sqrt() / beta.re.abs(),
                mixing: (1..=d1)
                    .map(|k| 2.0 * beta.re.abs() / model.sigma(k))
                    .collect(),
            }
        }
        other => return Err(GremError::UnknownLaw(other.into())),
    };
    let (normalization, samples) = match &law {
        stats::LimitLaw::Const1 | stats::LimitLaw::CascadeZeta { .. } => (
            "exp_cn",
            simulate::fluctuation_ensemble(
                &model,
                args.n,
                beta,
                args.seed,
                args.reps,
                simulate::FluctNormalization::ExpCn,
            )?,
        ),
        stats::LimitLaw::SubgaussianStable { .. } => (
            "exp_cn",
            simulate::fluctuation_ensemble(
                &model,
                args.n,
                beta,
                args.seed,
                args.reps,
                simulate::FluctNormalization::ExpCn,
            )?,
        ),
        _ => (
            "mean_var",
            simulate::fluctuation_ensemble(
                &model,
                args.n,
                beta,
                args.seed,
                args.reps,
                simulate::FluctNormalization::MeanVar,
            )?,
        ),
    };
    let reference = match &law {
        stats::LimitLaw::CascadeZeta { z } => Some(stats::CascadeReference {
            seed: args.seed ^ 0xface_feed,
            t_max: f64::INFINITY,
            tilts: stats::finite_size_tilts(&model, args.n, z.len())?,
            count_matched: true,
            replicates: 4 * args.reps,
        }),
        stats::LimitLaw::SubgaussianStable { mixing, .. } => Some(stats::CascadeReference {
            seed: args.seed ^ 0xface_feed,
            t_max: f64::INFINITY,
            tilts: stats::finite_size_tilts(&model, args.n, mixing.len())?,
            count_matched: true,
            replicates: 4 * args.reps,
        }),
        _ => None,
    };
    let report = stats::test_against_law(&samples, &law, reference.as_ref())?;
    let out = FluctOutput {
        beta: beta.into(),
        n: args.n,
        law: report.law.clone(),
        normalization: normalization.into(),
        report,
    };
    emit_json(&out, args.out.as_deref(), &Command::Fluct(args.clone()))
}

#[derive(Serialize)]
struct ZetaOutput {
    d: usize,
    z: Vec<ComplexTemp>,
    t: f64,
    reps: usize,
    seed: u64,
    /// deciles of log |(z_d - 1) zeta|
    log_modulus_deciles: Vec<f64>,
    tail: cascade::TailReport,
    median_cauchy_increment: f64,
    stability: Option<cascade::StabilityReport>,
}

fn cmd_zeta(args: &ZetaArgs) -> Result<()> {
    let z: Vec<Complex64> = args
        .z
        .split(',')
        .map(parse_beta)
        .collect::<Result<_>>()?;
    if z.len() != args.d {
        return Err(GremError::InvalidParameter(format!(
            "--z has {} components, --d is {}",
            z.len(),
            args.d
        )));
    }
    let stats_samples =
        cascade::sample_zeta_statistics(args.d, &z, args.t, args.seed, 0, args.reps)?;
    let mut logs: Vec<f64> = stats_samples.iter().map(|w| w.norm().ln()).collect();
    logs.sort_by(f64::total_cmp);
    let deciles: Vec<f64> = (1..10)
        .map(|q| simulate::quantile_sorted(&logs, q as f64 / 10.0))
        .collect();
    let mut increments: Vec<f64> = (0..64.min(args.reps))
        .map(|rep| {
            let s = cascade::sample_cascade(args.d, args.t, args.seed, rep)?;
            Ok(cascade::zeta_eval(&s, &z, cascade::ZetaMode::Continued)?.cauchy_increment)
        })
        .collect::<Result<_>>()?;
    increments.sort_by(f64::total_cmp);
    let tail = cascade::tail_index(args.d, &z, args.reps, args.t, args.seed)?;
    let stability = match args.stability_m {
        Some(m) => Some(cascade::stability_test(
            args.d, &z, m, args.reps, args.t, args.seed,
        )?),
        None => None,
    };
    let out = ZetaOutput {
        d: args.d,
        z: z.iter().map(|&w| w.into()).collect(),
        t: args.t,
        reps: args.reps,
        seed: args.seed,
        log_modulus_deciles: deciles,
        tail,
        median_cauchy_increment: simulate::quantile_sorted(&increments, 0.5),
        stability,
    };
    emit_json(&out, args.out.as_deref(), &Command::Zeta(args.clone()))
}

#[derive(Deserialize)]
struct ProfileFile {
    knots: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct CremOutput {
    p_infty: f64,
    p_glassy: f64,
    p_fluctuation: f64,
    p_expectation: f64,
    gamma1: f64,
    gamma2: f64,
    gamma3: f64,
}

fn cmd_crem(args: &CremArgs) -> Result<()> {
    let file: ProfileFile = serde_json::from_str(&std::fs::read_to_string(&args.profile)?)?;
    let profile = phase::CremProfile::new(file.knots, args.alpha)?;
    let beta = parse_beta(&args.beta)?;
    let ev = phase::crem_log_partition(&profile, beta);
    let out = CremOutput {
        p_infty: ev.p,
        p_glassy: ev.p_glassy,
        p_fluctuation: ev.p_fluctuation,
        p_expectation: ev.p_expectation,
        gamma1: ev.gamma1,
        gamma2: ev.gamma2,
        gamma3: ev.gamma3,
    };
    emit_json(&out, args.out.as_deref(), &Command::Crem(args.clone()))
}

fn cmd_laplacian(args: &LaplacianArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let rect = parse_rect(&args.rect)?;
    let report = phase::laplacian_check(&model, rect, args.h, args.grid_points)?;
    emit_json(&report, args.out.as_deref(), &Command::Laplacian(args.clone()))
}

fn cmd_rerun(args: &RerunArgs) -> Result<()> {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(&args.manifest)?)?;
    dispatch(&manifest.command)
}
