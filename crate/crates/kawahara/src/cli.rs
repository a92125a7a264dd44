//! Command-line entry point and the golden reproduction suite.
//!
//! Exit codes: 0 success, 1 usage error, 2 computation failure, 3 golden
//! suite failure. Grid defaults can be overridden per run with
//! `--half-length` / `--num-points` or the `GKW_HALF_LENGTH` /
//! `GKW_NUM_POINTS` environment variables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::continuation::{self, coercivity_check, newton_continue};
use crate::error::{Error, Result};
use crate::evolution::{self, Branch, ExperimentConfig, PerturbationShape};
use crate::grid::GridSpec;
use crate::groundstate::{self, MinimizationProblem};
use crate::index;
use crate::linop::{albert_criterion, log_curvature_bracket, LinearizedOperator};
use crate::solitons::{
    explicit_gkw_soliton, explicit_gkw_soliton_speed_one, explicit_speed, gkdv_soliton,
};

/// Atomic file write: temp sibling plus rename, so no partial artifact is
/// ever visible at the target path.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}tmp",
        path.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Parsed invocation: subcommand plus global grid/output configuration.
#[derive(Debug, Parser)]
#[command(
    name = "gkw",
    version,
    about = "Solitary waves of the generalized Kawahara equation: profiles, spectra, stability index, ground states, evolution"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Override the default grid half-length.
    #[arg(long, global = true, env = "GKW_HALF_LENGTH")]
    pub half_length: Option<f64>,
    /// Override the default number of grid points (even, >= 16).
    #[arg(long, global = true, env = "GKW_NUM_POINTS")]
    pub num_points: Option<usize>,
    /// Output file; stdout when omitted. Files are written atomically.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format for the primary artifact.
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form solitary-wave profiles and their residuals.
    Soliton(SolitonArgs),
    /// Bottom spectrum of the linearized operator around an explicit soliton.
    Spectrum(SpectrumArgs),
    /// Transform positivity / log-concavity verdicts (spectral sufficient condition).
    Albert(AlbertArgs),
    /// Stability index J_p by the half-line BVP and/or spectral inversion.
    Index(IndexArgs),
    /// Newton continuation of the even branch in the speed parameter.
    Continue(ContinueArgs),
    /// Constrained ground states at small dispersion mu.
    Groundstate(GroundstateArgs),
    /// Perturbed-soliton evolution experiment.
    Evolve(EvolveArgs),
    /// Run the full golden table and report pass/fail per item.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolitonFamily {
    Gkw,
    Gkdv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Normalization {
    /// mu = 1, speed c_p.
    MuOne,
    /// c = 1, mu = mu_p.
    SpeedOne,
}

#[derive(Debug, Args)]
pub struct SolitonArgs {
    /// Nonlinearity power (real, >= 1).
    #[arg(long)]
    pub p: f64,
    /// Speed (gkdv family only; the gkw family speed is fixed by the normalization).
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, value_enum, default_value = "gkw")]
    pub family: SolitonFamily,
    #[arg(long, value_enum, default_value = "mu-one")]
    pub normalization: Normalization,
    /// Fail (exit 2) unless the profile-equation residual is below 1e-8.
    #[arg(long)]
    pub check_residual: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub p: f64,
    /// Number of bottom eigenvalues.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "speed-one")]
    pub normalization: Normalization,
}

#[derive(Debug, Args)]
pub struct AlbertArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 50.0)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IndexMethodArg {
    Bvp,
    Spectral,
    Both,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Nonlinearity power (real); required unless --scan or --critical.
    #[arg(long, required_unless_present_any = ["scan", "critical"])]
    pub p: Option<f64>,
    /// Truncation radius of the half-line BVP.
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub method: IndexMethodArg,
    /// p-scan "lo:hi:count" emitting CSV rows (p, j_half, j_full).
    #[arg(long, conflicts_with = "p")]
    pub scan: Option<String>,
    /// Bisect for the sign change of J(p) on [4, 5].
    #[arg(long, conflicts_with_all = ["p", "scan"])]
    pub critical: bool,
    /// Bisection bracket "lo:hi" for --critical.
    #[arg(long, default_value = "4:5")]
    pub bracket: String,
    /// Bisection tolerance in p.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub c_from: f64,
    #[arg(long)]
    pub c_to: f64,
    #[arg(long)]
    pub steps: usize,
    /// Directory for per-point profile CSV files.
    #[arg(long)]
    pub profiles_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GroundstateArgs {
    #[arg(long)]
    pub p: u32,
    /// Dispersion coefficient (required unless --mu-scan).
    #[arg(long, required_unless_present = "mu_scan")]
    pub mu: Option<f64>,
    /// Constraint level (defaults to beta_p of the gKdV soliton).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Run the minimization from N randomized starts and report the spread.
    #[arg(long)]
    pub probe_uniqueness: Option<usize>,
    /// Geometric mu scan "hi:lo:count" emitting CSV (mu, alpha, i_value, h1_distance_to_gkdv).
    #[arg(long)]
    pub mu_scan: Option<String>,
    /// Random seed for the uniqueness probe.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Also write the rescaled profile phi as CSV to this path.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
    /// Allow p = 4 (outside the covered range; prints a warning).
    #[arg(long)]
    pub allow_supercritical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Explicit,
    Slow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbationArg {
    Gaussian,
    NegativeDirection,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long)]
    pub p: u32,
    #[arg(long, value_enum)]
    pub branch: BranchArg,
    /// Speed c (explicit branch) or dispersion mu (slow branch).
    #[arg(long)]
    pub param: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    #[arg(long, default_value_t = 100.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 2e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sample_every: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub perturbation: PerturbationArg,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Skip the long evolution items (debug aid; the golden table is then incomplete).
    #[arg(long, hide = true)]
    pub skip_evolution: bool,
}

/// One golden-table row. `pass == (|computed - paper| <= tolerance * max(1, |paper|))`.
#[derive(Debug, Clone, Serialize)]
pub struct ReproductionReport {
    pub item: String,
    pub paper_value: f64,
    pub computed_value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ReproductionReport {
    pub fn new(item: impl Into<String>, paper_value: f64, computed_value: f64, tolerance: f64) -> Self {
        let pass = computed_value.is_finite()
            && (computed_value - paper_value).abs() <= tolerance * paper_value.abs().max(1.0);
        ReproductionReport { item: item.into(), paper_value, computed_value, tolerance, pass }
    }

    /// Boolean verdict encoded numerically (1 = ok).
    pub fn verdict(item: impl Into<String>, ok: bool) -> Self {
        ReproductionReport {
            item: item.into(),
            paper_value: 1.0,
            computed_value: if ok { 1.0 } else { 0.0 },
            tolerance: 0.0,
            pass: ok,
        }
    }
}

fn parse_scan(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("expected lo:hi:count, got {text}")));
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
    let count: usize = parts[2].trim().parse().map_err(|e| Error::Parse(format!("{e}")))?;
    if count < 2 {
        return Err(Error::Parse("scan count must be >= 2".into()));
    }
    Ok((lo, hi, count))
}

fn geometric_scan(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (hi.ln() * (1.0 - t) + lo.ln() * t).exp()
        })
        .collect()
}

fn emit(config: &RunConfig, text: &str) -> Result<()> {
    match &config.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            if text.ends_with('\n') {
                print!("{text}");
            } else {
                println!("{text}");
            }
            Ok(())
        }
    }
}

fn grid_or(config: &RunConfig, default_l: f64, default_n: usize) -> Result<GridSpec> {
    GridSpec::new(
        config.half_length.unwrap_or(default_l),
        config.num_points.unwrap_or(default_n),
    )
}

/// Half-length putting the explicit mu = 1 profile below 1e-12 at the boundary.
fn explicit_half_length(p: f64) -> f64 {
    let rate = 2.0 / (p * p + 4.0 * p + 8.0).sqrt();
    GridSpec::suggested_half_length(rate).max(60.0)
}

/// Run the parsed command. `Ok(0)` on success, `Ok(3)` when the golden suite
/// ran and failed; computation errors bubble up as `Err` (exit 2 in `main`).
pub fn dispatch(config: &RunConfig) -> Result<i32> {
    match &config.command {
        Command::Soliton(args) => {
            let profile = match args.family {
                SolitonFamily::Gkw => match args.normalization {
                    Normalization::MuOne => {
                        let grid = grid_or(config, explicit_half_length(args.p), 2048)?;
                        explicit_gkw_soliton(args.p, grid)?
                    }
                    Normalization::SpeedOne => {
                        let grid = grid_or(config, 40.0, 2048)?;
                        explicit_gkw_soliton_speed_one(args.p, grid)?
                    }
                },
                SolitonFamily::Gkdv => {
                    let c = args.c.unwrap_or(1.0);
                    let grid = grid_or(config, 60.0, 2048)?;
                    gkdv_soliton(c, args.p, grid)?
                }
            };
            let report = profile.report();
            if args.check_residual && report.residual_l2 >= 1e-8 {
                return Err(Error::ProfileRejected(format!(
                    "residual {:.3e} >= 1e-8",
                    report.residual_l2
                )));
            }
            match config.format {
                OutputFormat::Json => emit(config, &serde_json::to_string_pretty(&report)?)?,
                OutputFormat::Csv => emit(config, &profile.field.to_csv())?,
            }
            Ok(0)
        }
        Command::Spectrum(args) => {
            let profile = match args.normalization {
                Normalization::SpeedOne => {
                    let grid = grid_or(config, 40.0, 1024)?;
                    explicit_gkw_soliton_speed_one(args.p, grid)?
                }
                Normalization::MuOne => {
                    let grid = grid_or(config, explicit_half_length(args.p), 1024)?;
                    explicit_gkw_soliton(args.p, grid)?
                }
            };
            let op = LinearizedOperator::assemble(&profile)?;
            let report = op.bottom_spectrum(args.k)?;
            match config.format {
                OutputFormat::Json => emit(config, &serde_json::to_string_pretty(&report)?)?,
                OutputFormat::Csv => {
                    let mut text = String::from("index,eigenvalue\n");
                    for (i, ev) in report.eigenvalues.iter().enumerate() {
                        let _ = writeln!(text, "{i},{ev:.17e}");
                    }
                    emit(config, &text)?;
                }
            }
            Ok(0)
        }
        Command::Albert(args) => {
            let report = albert_criterion(args.p, args.omega_max, args.samples)?;
            match config.format {
                OutputFormat::Json => emit(config, &serde_json::to_string_pretty(&report)?)?,
                OutputFormat::Csv => {
                    let text = format!(
                        "p,positivity_ok,logconcavity_ok,worst_margin\n{},{},{},{:.17e}\n",
                        report.p, report.positivity_ok, report.logconcavity_ok, report.worst_margin
                    );
                    emit(config, &text)?;
                }
            }
            Ok(0)
        }
        Command::Index(args) => {
            if args.critical {
                let (lo, hi) = {
                    let parts: Vec<&str> = args.bracket.split(':').collect();
                    if parts.len() != 2 {
                        return Err(Error::Parse("bracket must be lo:hi".into()));
                    }
                    (
                        parts[0].parse::<f64>().map_err(|e| Error::Parse(format!("{e}")))?,
                        parts[1].parse::<f64>().map_err(|e| Error::Parse(format!("{e}")))?,
                    )
                };
                let grid = grid_or(config, 40.0, 512)?;
                let p_crit = index::critical_exponent_on(lo, hi, args.tol, grid)?;
                emit(config, &serde_json::to_string_pretty(&serde_json::json!({
                    "p_crit": p_crit,
                    "bracket": [lo, hi],
                    "tol": args.tol,
                }))?)?;
                return Ok(0);
            }
            if let Some(scan) = &args.scan {
                let (lo, hi, count) = parse_scan(scan)?;
                let grid = grid_or(config, 40.0, 512)?;
                let rows = index::scan(lo, hi, count, grid)?;
                match config.format {
                    OutputFormat::Json => emit(config, &serde_json::to_string_pretty(&rows)?)?,
                    OutputFormat::Csv => {
                        let mut text = String::from("p,j_half,j_full\n");
                        for r in &rows {
                            let _ = writeln!(text, "{:.6},{:.17e},{:.17e}", r.p, r.j_half, r.j_full);
                        }
                        emit(config, &text)?;
                    }
                }
                return Ok(0);
            }
            let p = args.p.expect("clap enforces presence");
            let r_max = args.r_max.unwrap_or_else(|| index::default_r_max(p));
            let grid = grid_or(config, 40.0, 1024)?;
            let report = match args.method {
                IndexMethodArg::Bvp => index::index_bvp(p, r_max)?,
                IndexMethodArg::Spectral => index::index_spectral(p, grid)?,
                IndexMethodArg::Both => index::index_both(p, r_max, grid)?,
            };
            emit(config, &serde_json::to_string_pretty(&report)?)?;
            Ok(0)
        }
        Command::Continue(args) => {
            if !(args.c_from > 0.0 && args.c_to > 0.0) {
                return Err(Error::InvalidParameter("speeds must be positive".into()));
            }
            let grid = grid_or(config, 100.0, 512)?;
            let p = args.p as f64;
            let c_p = explicit_speed(p);
            let seed = explicit_gkw_soliton(p, grid)?;
            let start = if (args.c_from - c_p).abs() < 1e-12 {
                seed.clone()
            } else {
                let run = newton_continue(&seed, args.c_from, 5)?;
                if let Some(f) = run.failure {
                    return Err(Error::NotConverged(format!(
                        "could not reach c_from = {}: {}",
                        args.c_from, f.reason
                    )));
                }
                run.points.into_iter().last().expect("nonempty").profile
            };
            let run = newton_continue(&start, args.c_to, args.steps)?;
            let mut text = String::from("c,residual,coercivity_margin,gamma\n");
            for pt in &run.points {
                let gamma = continuation::almost_orthogonality_margin(&pt.profile, &seed)?;
                let _ = writeln!(
                    text,
                    "{:.17e},{:.17e},{:.17e},{:.17e}",
                    pt.params.c, pt.newton_residual, pt.coercivity_margin, gamma
                );
                if let Some(dir) = &args.profiles_dir {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join(format!("profile_c_{:.6}.csv", pt.params.c));
                    pt.profile.field.write_csv(&path)?;
                }
            }
            emit(config, &text)?;
            if let Some(f) = run.failure {
                eprintln!("warning: branch stopped early at c = {}: {}", f.c_failed, f.reason);
                return Err(Error::NotConverged(f.reason));
            }
            Ok(0)
        }
        Command::Groundstate(args) => {
            let grid = grid_or(config, 40.0, 1024)?;
            if let Some(scan) = &args.mu_scan {
                let (hi, lo, count) = parse_scan(scan)?;
                let gkdv = gkdv_soliton(1.0, args.p as f64, grid)?;
                let mut text = String::from("mu,alpha,i_value,h1_distance_to_gkdv\n");
                for mu in geometric_scan(hi, lo, count) {
                    let problem = MinimizationProblem::new(args.p, mu, grid)?;
                    let res = groundstate::minimize(&problem, &problem.default_guess()?)?;
                    let h1 = res.phi.sub(&gkdv.field).sobolev_norm(1)?;
                    let _ = writeln!(text, "{mu:.6e},{:.12},{:.12},{:.12}", res.alpha, res.i_value, h1);
                }
                emit(config, &text)?;
                return Ok(0);
            }
            let mu = args.mu.expect("clap enforces presence");
            let problem = match (args.p, args.beta) {
                (4, _) if args.allow_supercritical => {
                    eprintln!(
                        "warning: p = 4 is outside the covered slow-branch range; results are exploratory"
                    );
                    MinimizationProblem::new_supercritical(4, mu, grid)?
                }
                (p, Some(beta)) => MinimizationProblem::with_beta(p, mu, grid, beta)?,
                (p, None) => MinimizationProblem::new(p, mu, grid)?,
            };
            let res = groundstate::minimize(&problem, &problem.default_guess()?)?;
            let gkdv = gkdv_soliton(1.0, args.p as f64, grid)?;
            let h1 = res.phi.sub(&gkdv.field).sobolev_norm(1)?;
            let probe = match args.probe_uniqueness {
                Some(n) => Some(groundstate::empirical_uniqueness_probe(&problem, n, args.seed)?),
                None => None,
            };
            if let Some(path) = &args.profile_out {
                res.phi.write_csv(path)?;
            }
            match config.format {
                OutputFormat::Json => {
                    let doc = serde_json::json!({
                        "p": problem.p,
                        "mu": problem.mu,
                        "beta_target": problem.beta_target,
                        "alpha": res.alpha,
                        "i_value": res.i_value,
                        "iterations": res.iterations,
                        "phi_residual_l2": res.phi_residual_l2,
                        "h1_distance_to_gkdv": h1,
                        "uniqueness_probe": probe,
                        "phi": res.phi,
                    });
                    emit(config, &serde_json::to_string_pretty(&doc)?)?;
                }
                OutputFormat::Csv => emit(config, &res.phi.to_csv())?,
            }
            Ok(0)
        }
        Command::Evolve(args) => {
            let branch = match args.branch {
                BranchArg::Explicit => Branch::Explicit,
                BranchArg::Slow => Branch::Slow,
            };
            if args.p >= 5 {
                eprintln!(
                    "note: p = {} is outside the proven stability regime; the run is exploratory",
                    args.p
                );
            }
            let cfg = ExperimentConfig {
                dt: args.dt,
                sample_every: args.sample_every,
                grid: match (config.half_length, config.num_points) {
                    (Some(l), Some(n)) => Some(GridSpec::new(l, n)?),
                    (None, None) => None,
                    _ => {
                        return Err(Error::InvalidParameter(
                            "grid overrides require both --half-length and --num-points".into(),
                        ))
                    }
                },
                perturbation: match args.perturbation {
                    PerturbationArg::Gaussian => PerturbationShape::GaussianBump,
                    PerturbationArg::NegativeDirection => PerturbationShape::NegativeDirection,
                },
            };
            let trace = evolution::stability_experiment(
                args.p,
                branch,
                args.param,
                args.delta,
                args.horizon,
                &cfg,
            )?;
            match config.format {
                OutputFormat::Csv => emit(config, &trace.to_csv())?,
                OutputFormat::Json => emit(config, &serde_json::to_string_pretty(&trace)?)?,
            }
            Ok(0)
        }
        Command::Reproduce(args) => {
            let start = Instant::now();
            let items = reproduce_all(!args.skip_evolution)?;
            let elapsed = start.elapsed().as_secs_f64();
            let all_pass = items.iter().all(|i| i.pass);
            let mut table = String::new();
            let _ = writeln!(
                table,
                "{:<6} {:<58} {:>14} {:>14} {:>9}",
                "status", "item", "paper", "computed", "tol"
            );
            for item in &items {
                let _ = writeln!(
                    table,
                    "{:<6} {:<58} {:>14.6} {:>14.6} {:>9.1e}",
                    if item.pass { "PASS" } else { "FAIL" },
                    item.item,
                    item.paper_value,
                    item.computed_value,
                    item.tolerance
                );
            }
            let _ = writeln!(
                table,
                "{} items, {} failed, {:.1} s",
                items.len(),
                items.iter().filter(|i| !i.pass).count(),
                elapsed
            );
            match config.format {
                OutputFormat::Json => {
                    let doc = serde_json::json!({
                        "items": items,
                        "passed": all_pass,
                    });
                    emit(config, &serde_json::to_string_pretty(&doc)?)?;
                }
                OutputFormat::Csv => {
                    let mut text = String::from("item,paper_value,computed_value,tolerance,pass\n");
                    for i in &items {
                        let _ = writeln!(
                            text,
                            "\"{}\",{:.10e},{:.10e},{:.1e},{}",
                            i.item, i.paper_value, i.computed_value, i.tolerance, i.pass
                        );
                    }
                    emit(config, &text)?;
                }
            }
            eprint!("{table}");
            Ok(if all_pass { 0 } else { 3 })
        }
    }
}

// ---- the golden table --------------------------------------------------------

const PAPER_J: [f64; 5] = [-10.0787, -1.9325, -0.5649, -0.1443, 0.0252];
const PAPER_P_CRIT: f64 = 4.84;

fn progress(msg: &str) {
    eprintln!("[reproduce] {msg}");
}

/// Run every golden item (stability-index table, critical exponent, spectral
/// properties, Albert criterion, closed-form residuals, continuation
/// coercivity, ground states, evolution experiments) and return the
/// pass/fail rows. Individual failures are recorded as failed rows rather
/// than aborting the suite.
pub fn reproduce_all(include_evolution: bool) -> Result<Vec<ReproductionReport>> {
    let mut items: Vec<ReproductionReport> = Vec::new();
    let guard = |items: &mut Vec<ReproductionReport>,
                     name: &str,
                     f: &mut dyn FnMut() -> Result<Vec<ReproductionReport>>| {
        match f() {
            Ok(mut rows) => items.append(&mut rows),
            Err(e) => {
                progress(&format!("{name} FAILED: {e}"));
                items.push(ReproductionReport::verdict(format!("{name} (errored: {e})"), false));
            }
        }
    };

    // 1. stability-index table
    for pi in 1..=5usize {
        let p = pi as f64;
        guard(&mut items, &format!("index table p={pi}"), &mut || {
            progress(&format!("index table p = {pi}"));
            let grid = GridSpec::new(40.0, 1024)?;
            let bvp = index::index_bvp(p, index::default_r_max(p))?;
            let spectral = index::index_spectral(p, grid)?;
            let fine = index::index_spectral(p, GridSpec::new(40.0, 2048)?)?;
            let agreement = (bvp.j_half - spectral.j_half).abs() / spectral.j_half.abs();
            let grid_rel = (spectral.j_full - fine.j_full).abs() / fine.j_full.abs();
            let paper = PAPER_J[pi - 1];
            Ok(vec![
                ReproductionReport::new(format!("J_{pi} half-line value"), paper, bvp.j_half, 0.02),
                ReproductionReport::verdict(
                    format!("J_{pi} sign ({})", if paper < 0.0 { "-" } else { "+" }),
                    bvp.j_half.signum() == paper.signum()
                        && spectral.j_half.signum() == paper.signum(),
                ),
                ReproductionReport::new(
                    format!("J_{pi} BVP/spectral agreement"),
                    0.0,
                    agreement,
                    1e-3,
                ),
                ReproductionReport::new(
                    format!("J_{pi} grid convergence (N vs 2N)"),
                    0.0,
                    grid_rel,
                    5e-4,
                ),
            ])
        });
    }

    // 2. critical exponent
    guard(&mut items, "critical exponent", &mut || {
        progress("critical exponent bisection on [4, 5]");
        let pc = index::critical_exponent(4.0, 5.0, 1e-3)?;
        Ok(vec![ReproductionReport::new(
            "p_crit (window 0.05)",
            PAPER_P_CRIT,
            pc,
            0.05 / PAPER_P_CRIT,
        )])
    });

    // 3. spectral properties at the speed-one explicit soliton
    for pi in 1..=5usize {
        guard(&mut items, &format!("spectrum p={pi}"), &mut || {
            progress(&format!("spectrum p = {pi}"));
            let grid = GridSpec::new(40.0, 512)?;
            let profile = explicit_gkw_soliton_speed_one(pi as f64, grid)?;
            let op = LinearizedOperator::assemble(&profile)?;
            let rep = op.bottom_spectrum(6)?;
            Ok(vec![
                ReproductionReport::new(
                    format!("one negative eigenvalue p={pi}"),
                    1.0,
                    rep.negative_count as f64,
                    0.0,
                ),
                ReproductionReport::new(
                    format!("kernel alignment with phi' p={pi}"),
                    1.0,
                    rep.kernel_alignment,
                    1e-3,
                ),
                ReproductionReport::new(
                    format!("potential-free floor = c p={pi}"),
                    1.0,
                    rep.essential_floor,
                    1e-10,
                ),
            ])
        });
    }

    // 4. Albert criterion
    for pi in 1..=5usize {
        guard(&mut items, &format!("albert p={pi}"), &mut || {
            let rep = albert_criterion(pi as f64, 50.0, 2000)?;
            Ok(vec![ReproductionReport::verdict(
                format!("transform positivity & log-concavity p={pi}"),
                rep.positivity_ok && rep.logconcavity_ok,
            )])
        });
    }
    items.push(ReproductionReport::new(
        "log-curvature bracket at omega=1",
        -0.92600,
        log_curvature_bracket(1.0),
        1e-4,
    ));

    // 5. closed-form residuals at N = 2048
    for pi in 1..=5usize {
        let p = pi as f64;
        guard(&mut items, &format!("residual p={pi}"), &mut || {
            let grid = GridSpec::new(explicit_half_length(p), 2048)?;
            let gkw = explicit_gkw_soliton(p, grid)?;
            let grid_kdv = GridSpec::new(60.0, 2048)?;
            let kdv = gkdv_soliton(1.0, p, grid_kdv)?;
            Ok(vec![
                ReproductionReport::new(
                    format!("explicit profile residual p={pi}"),
                    0.0,
                    gkw.residual_l2(),
                    1e-8,
                ),
                ReproductionReport::new(
                    format!("gKdV profile residual p={pi}"),
                    0.0,
                    kdv.residual_l2(),
                    1e-8,
                ),
            ])
        });
    }

    // 6. continuation with coercivity along the branch
    for pi in 1..=4usize {
        guard(&mut items, &format!("continuation p={pi}"), &mut || {
            progress(&format!("continuation branch p = {pi}"));
            let grid = GridSpec::new(100.0, 512)?;
            let seed = explicit_gkw_soliton(pi as f64, grid)?;
            let c_p = seed.params.c;
            let mut max_res = 0.0f64;
            let mut min_margin = f64::INFINITY;
            for target in [0.9 * c_p, 1.1 * c_p] {
                let run = newton_continue(&seed, target, 10)?;
                if let Some(f) = run.failure {
                    return Err(Error::NotConverged(format!(
                        "branch to {target} failed: {}",
                        f.reason
                    )));
                }
                for pt in &run.points {
                    max_res = max_res.max(pt.newton_residual);
                    min_margin = min_margin.min(pt.coercivity_margin);
                }
            }
            Ok(vec![
                ReproductionReport::new(
                    format!("branch max Newton residual p={pi}"),
                    0.0,
                    max_res,
                    1e-9,
                ),
                ReproductionReport::verdict(
                    format!("coercivity margin positive along branch p={pi}"),
                    min_margin > 0.0,
                ),
            ])
        });
    }
    guard(&mut items, "coercivity p=5", &mut || {
        progress("coercivity margin p = 5 at c_5");
        let grid = GridSpec::new(100.0, 512)?;
        let seed = explicit_gkw_soliton(5.0, grid)?;
        let margin = coercivity_check(&seed)?;
        Ok(vec![ReproductionReport::verdict(
            "coercivity margin negative p=5 at c_5",
            margin < 0.0,
        )])
    });

    // 7. ground states
    for p in 1..=3u32 {
        guard(&mut items, &format!("groundstate p={p}"), &mut || {
            progress(&format!("ground states p = {p}, mu scan"));
            let grid = groundstate::default_groundstate_grid();
            let gkdv = gkdv_soliton(1.0, p as f64, grid)?;
            let mut alphas = Vec::new();
            let mut dists = Vec::new();
            let mut max_constraint_dev = 0.0f64;
            let mut beta_p = 0.0;
            for mu in [1e-1, 1e-2, 1e-3, 1e-4] {
                let problem = MinimizationProblem::new(p, mu, grid)?;
                beta_p = problem.beta_target;
                let res = groundstate::minimize(&problem, &problem.default_guess()?)?;
                let (_, kp) = groundstate::functionals(&res.psi, mu, p);
                max_constraint_dev =
                    max_constraint_dev.max((kp - beta_p).abs() / beta_p);
                alphas.push(res.alpha);
                dists.push(res.phi.sub(&gkdv.field).sobolev_norm(1)?);
            }
            let alpha_monotone = alphas.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs())
                && alphas.iter().all(|&a| a >= 1.0 - 1e-9);
            let dist_monotone = dists.windows(2).all(|w| w[1] <= w[0]);
            let scaling_dev = groundstate::scaling_identity_check(
                p,
                1e-2,
                2.0 * beta_p,
                GridSpec::new(40.0, 512)?,
            )?;
            let probe = groundstate::empirical_uniqueness_probe(
                &MinimizationProblem::new(p, 1e-3, GridSpec::new(40.0, 512)?)?,
                5,
                7,
            )?;
            let mut rows = vec![
                ReproductionReport::new(
                    format!("constraint K_p = beta_p (max rel dev) p={p}"),
                    0.0,
                    max_constraint_dev,
                    1e-8,
                ),
                ReproductionReport::new(
                    format!("alpha within [1, 1.05] p={p}"),
                    1.0,
                    alphas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    0.05,
                ),
                ReproductionReport::verdict(
                    format!("alpha approaches 1 monotonically as mu drops p={p}"),
                    alpha_monotone,
                ),
                ReproductionReport::verdict(
                    format!("H1 distance to gKdV decreasing along mu scan p={p}"),
                    dist_monotone,
                ),
                ReproductionReport::new(
                    format!("scaling identity deviation p={p}"),
                    0.0,
                    scaling_dev,
                    1e-6,
                ),
                ReproductionReport::new(
                    format!("multi-start spread p={p}"),
                    0.0,
                    probe.spread,
                    1e-8,
                ),
            ];
            if p == 1 {
                rows.push(ReproductionReport::new(
                    "beta_1 closed form 9.6",
                    9.6,
                    beta_p,
                    1e-8 / 9.6,
                ));
            }
            Ok(rows)
        });
    }

    // 8. evolution
    if include_evolution {
        guard(&mut items, "exact soliton evolution", &mut || {
            progress("exact-soliton run p = 1, T = 50, dt = 1e-3");
            let grid = GridSpec::new(60.0, 512)?;
            let cfg = ExperimentConfig {
                dt: 1e-3,
                sample_every: 1.0,
                grid: Some(grid),
                perturbation: PerturbationShape::GaussianBump,
            };
            let c1 = explicit_speed(1.0);
            let trace =
                evolution::stability_experiment(1, Branch::Explicit, c1, 0.0, 50.0, &cfg)?;
            let speed = trace.measured_speed().unwrap_or(f64::NAN);
            Ok(vec![
                ReproductionReport::new(
                    "exact-soliton sup_t inf_z H2 distance (T=50)",
                    0.0,
                    trace.sup_distance(),
                    1e-5,
                ),
                ReproductionReport::new("energy drift (T=50, dt=1e-3)", 0.0, trace.energy_drift, 1e-8),
                ReproductionReport::new("mass drift (T=50, dt=1e-3)", 0.0, trace.mass_drift, 1e-8),
                ReproductionReport::new(
                    "measured speed relative error",
                    0.0,
                    (speed - c1).abs() / c1,
                    1e-3,
                ),
            ])
        });

        guard(&mut items, "drift order", &mut || {
            progress("dt-halving drift order check (dt = 0.2 vs 0.1, T = 50)");
            let grid = GridSpec::new(60.0, 512)?;
            let c1 = explicit_speed(1.0);
            let drift_at = |dt: f64| -> Result<f64> {
                let cfg = ExperimentConfig {
                    dt,
                    sample_every: 5.0,
                    grid: Some(grid),
                    perturbation: PerturbationShape::GaussianBump,
                };
                let trace =
                    evolution::stability_experiment(1, Branch::Explicit, c1, 0.0, 50.0, &cfg)?;
                Ok(trace.energy_drift.max(trace.mass_drift))
            };
            let coarse = drift_at(0.2)?;
            let fine = drift_at(0.1)?;
            let ratio = coarse / fine.max(1e-300);
            Ok(vec![ReproductionReport::verdict(
                format!("dt-halving reduces drift >= 8x (measured {ratio:.1}x)"),
                ratio >= 8.0,
            )])
        });

        for pi in 1..=4u32 {
            guard(&mut items, &format!("perturbed explicit p={pi}"), &mut || {
                progress(&format!("perturbed soliton p = {pi}, explicit branch, T = 100"));
                let cfg = ExperimentConfig::default();
                let delta = 1e-3;
                let trace = evolution::stability_experiment(
                    pi,
                    Branch::Explicit,
                    explicit_speed(pi as f64),
                    delta,
                    100.0,
                    &cfg,
                )?;
                Ok(vec![ReproductionReport::new(
                    format!("sup dist / delta, explicit branch p={pi} (finite horizon T=100)"),
                    0.0,
                    trace.sup_distance() / delta,
                    5.0,
                )])
            });
        }
        for pi in 1..=3u32 {
            guard(&mut items, &format!("perturbed slow p={pi}"), &mut || {
                progress(&format!("perturbed soliton p = {pi}, slow branch, T = 100"));
                let cfg = ExperimentConfig::default();
                let delta = 1e-3;
                let trace =
                    evolution::stability_experiment(pi, Branch::Slow, 1e-2, delta, 100.0, &cfg)?;
                Ok(vec![ReproductionReport::new(
                    format!("sup dist / delta, slow branch p={pi} (finite horizon T=100)"),
                    0.0,
                    trace.sup_distance() / delta,
                    5.0,
                )])
            });
        }
    }

    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_pass_rule() {
        // pass == |computed - paper| <= tol * max(1, |paper|)
        let r = ReproductionReport::new("x", -10.0, -10.15, 0.02);
        assert!(r.pass);
        let r = ReproductionReport::new("x", -10.0, -10.25, 0.02);
        assert!(!r.pass);
        let r = ReproductionReport::new("x", 0.0, 5e-9, 1e-8);
        assert!(r.pass);
        let r = ReproductionReport::new("x", 0.0, f64::NAN, 1e-8);
        assert!(!r.pass);
    }

    #[test]
    fn scan_parsing() {
        assert_eq!(parse_scan("4:5:21").unwrap(), (4.0, 5.0, 21));
        assert!(parse_scan("4:5").is_err());
        assert!(parse_scan("4:5:1").is_err());
        let mus = geometric_scan(1e-1, 1e-4, 4);
        assert!((mus[0] - 1e-1).abs() < 1e-15);
        assert!((mus[3] - 1e-4).abs() < 1e-18);
        assert!((mus[1] - 1e-2).abs() < 1e-16);
    }

    #[test]
    fn atomic_write_roundtrip() {
        let dir = std::env::temp_dir().join(format!("gkw-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.json");
        write_atomic(&path, b"{\"a\":1}").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"{\"a\":1}");
        // no stray temp file
        let leftovers: Vec<_> = std::fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains("tmp"))
            .collect();
        assert!(leftovers.is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }
}
