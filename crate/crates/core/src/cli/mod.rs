//! Command line front end.
//!
//! Exit codes: 0 when every decided report passes, 1 when any report fails,
//! 2 on configuration errors and refused regimes.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::diagnostics::{self, Direction, McOptions, SweepOptions, TestReport};
use crate::error::Error;
use crate::func::FnDesc;
use crate::integrability::{existence_verdict_mode, rr_integrability, OperatorMode};
use crate::io::{self, Csv};
use crate::noise::NoiseRealization;
use crate::parallel;
use crate::rng::replicate_seed;
use crate::solver;
use crate::spectral::{enumerate_eigen, HyperBox, MultiIndex};

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "levy-elliptic", version, about = "Simulate and verify (-Δ)^γ u = ξ̇ on boxes driven by Lévy white noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a configuration entry, e.g. `gamma=1`, `measure=alpha:1.8`, `cf.m=5000`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for replicate loops; 0 uses every core.
    #[arg(long, env = "LEVY_ELLIPTIC_WORKERS", global = true)]
    pub workers: Option<usize>,

    /// Proceed in regimes where no mild solution exists.
    #[arg(long = "override", global = true)]
    pub allow_nonexistent: bool,

    /// Output directory (default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Existence verdict and integrability report.
    Check,
    /// Sample jump atoms and write them with a manifest.
    SampleNoise,
    /// Solve for one realization; writes coefficients and a grid field.
    Solve,
    /// Run a verification test.
    Verify {
        #[command(subcommand)]
        test: VerifyTest,
    },
    /// Sweep Sobolev orders or grid levels.
    Sweep {
        #[command(subcommand)]
        sweep: SweepKind,
    },
    /// Compare the spectral Green kernel with the interval closed form.
    GreenOracle,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum VerifyTest {
    /// Empirical characteristic functional of ⟨ξ̇, f⟩ against exp(∫Ψ(u f))
    Cf,
    /// Variance of the compensated small-jump pairing
    Isometry,
    /// ⟨u, φ⟩ against ⟨ξ̇, G_γ ⊛ φ⟩ per realization
    Weak,
    /// Growth of the spectral function V(t, x) against t^(d/2)
    SpectralBound,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum SweepKind {
    /// Truncated Sobolev norms over r_list and K_list
    Sobolev,
    /// Grid increments and sup norms under dyadic refinement
    Continuity,
}

enum Failure {
    Config(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let workers = cli.workers.unwrap_or(0);
    match parallel::with_workers(workers, || execute(&cli)) {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let mut cfg = config::load(cli.config.as_deref(), &cli.set)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.allow_nonexistent |= cli.allow_nonexistent;
    let out = cfg.out_dir();
    match &cli.command {
        Command::Check => check(&cfg, cli.out.is_some()),
        Command::SampleNoise => sample_noise(&cfg, &out),
        Command::Solve => solve(&cfg, &out),
        Command::Verify { test } => {
            let reports = match test {
                VerifyTest::Cf => verify_cf(&cfg)?,
                VerifyTest::Isometry => verify_isometry(&cfg)?,
                VerifyTest::Weak => verify_weak(&cfg)?,
                VerifyTest::SpectralBound => verify_spectral_bound(&cfg)?,
            };
            finish(&reports, &out)
        }
        Command::Sweep { sweep } => match sweep {
            SweepKind::Sobolev => sweep_sobolev(&cfg, &out),
            SweepKind::Continuity => sweep_continuity(&cfg, &out),
        },
        Command::GreenOracle => green_oracle(&cfg, &out),
    }
}

fn require_seed(cfg: &RunConfig, what: &str) -> Result<u64, Failure> {
    cfg.seed
        .ok_or_else(|| Failure::Config(format!("--seed is required for {what}")))
}

/// Refuses `γ ≤ d/4` without `--override`.
fn require_existence(cfg: &RunConfig) -> Result<(), Failure> {
    solver::check_existence(cfg.dim(), cfg.gamma, cfg.allow_nonexistent).map_err(|e| Failure::Config(e.to_string()))
}

fn box_indicator(bx: &HyperBox) -> FnDesc {
    FnDesc::indicator(bx.intervals().to_vec())
}

fn operator_mode(cfg: &RunConfig) -> OperatorMode {
    match cfg.operator {
        config::OperatorKind::Spectral => OperatorMode::Spectral { gamma: cfg.gamma },
        config::OperatorKind::LaplacianGreenBound => OperatorMode::LaplacianGreenBound,
    }
}

fn check(cfg: &RunConfig, write: bool) -> Result<i32, Failure> {
    let bx = cfg.hyperbox()?;
    let triplet = cfg.triplet()?;
    let verdict = existence_verdict_mode(cfg.dim(), operator_mode(cfg), &triplet);
    let gamma = match cfg.operator {
        config::OperatorKind::Spectral => cfg.gamma,
        config::OperatorKind::LaplacianGreenBound => 1.0,
    };
    let f = cfg.check.function.clone().unwrap_or(FnDesc::Green {
        gamma,
        pole: bx.center(),
    });
    let integrability = match rr_integrability(&f, &triplet, &bx) {
        Ok(r) => json!(r),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let doc = json!({
        "existence": verdict,
        "function": f.kind(),
        "integrability": integrability,
    });
    let text = serde_json::to_string_pretty(&doc).expect("json");
    println!("{text}");
    if write {
        io::write_text(&cfg.out_dir().join("check.json"), &format!("{text}\n"))?;
    }
    Ok(0)
}

fn sample(cfg: &RunConfig, seed: u64) -> Result<NoiseRealization, Failure> {
    Ok(NoiseRealization::sample(
        &cfg.triplet()?,
        &cfg.hyperbox()?,
        cfg.eps,
        cfg.small_jump_policy,
        seed,
    )?)
}

fn sample_noise(cfg: &RunConfig, out: &Path) -> Result<i32, Failure> {
    let seed = require_seed(cfg, "sample-noise")?;
    let r = sample(cfg, seed)?;
    io::atoms_csv(r.atoms()).write(&out.join("atoms.csv"))?;
    io::write_json(&out.join("manifest.json"), &r.manifest())?;
    println!("{} atoms above {} written to {}", r.atoms().len(), r.eps(), out.display());
    Ok(0)
}

fn solve(cfg: &RunConfig, out: &Path) -> Result<i32, Failure> {
    let seed = require_seed(cfg, "solve")?;
    require_existence(cfg)?;
    let bx = cfg.hyperbox()?;
    let r = sample(cfg, seed)?;
    let system = Arc::new(enumerate_eigen(&bx, cfg.cutoff)?);
    let field = solver::solve_mild(&r, cfg.gamma, &system, cfg.allow_nonexistent)?;
    let axes = solver::dyadic_axes(&bx, cfg.solve.grid_level);
    let values = solver::eval_grid(&field, &axes, parallel::Exec::Parallel)?;
    io::coeff_csv(&field).write(&out.join("coefficients.csv"))?;
    io::grid_csv(&axes, &values).write(&out.join("field.csv"))?;
    io::write_json(
        &out.join("manifest.json"),
        &json!({
            "noise": r.manifest(),
            "gamma": cfg.gamma,
            "modes": system.len(),
            "lambda_max": system.lambda_max(),
            "grid_level": cfg.solve.grid_level,
        }),
    )?;
    println!("solved with {} modes; output in {}", system.len(), out.display());
    Ok(0)
}

fn mc_options(cfg: &RunConfig) -> McOptions {
    McOptions {
        eps: cfg.eps,
        policy: cfg.small_jump_policy,
        cutoff: cfg.cutoff,
        exec: parallel::Exec::Parallel,
    }
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        eps: cfg.eps,
        policy: cfg.small_jump_policy,
        allow_nonexistent: cfg.allow_nonexistent,
        exec: parallel::Exec::Parallel,
    }
}

fn verify_cf(cfg: &RunConfig) -> Result<Vec<TestReport>, Failure> {
    let seed = require_seed(cfg, "verify cf")?;
    let bx = cfg.hyperbox()?;
    let f = cfg.cf.function.clone().unwrap_or_else(|| box_indicator(&bx));
    Ok(vec![diagnostics::empirical_cf_test(
        &cfg.triplet()?,
        &bx,
        &f,
        &cfg.cf.u_grid,
        cfg.cf.m,
        seed,
        cfg.cf.psi,
        mc_options(cfg),
    )?])
}

fn verify_isometry(cfg: &RunConfig) -> Result<Vec<TestReport>, Failure> {
    let seed = require_seed(cfg, "verify isometry")?;
    let bx = cfg.hyperbox()?;
    let f = cfg.isometry.function.clone().unwrap_or_else(|| box_indicator(&bx));
    Ok(vec![diagnostics::isometry_test(
        &cfg.triplet()?,
        &bx,
        cfg.isometry.eps,
        &f,
        cfg.isometry.m,
        seed,
        parallel::Exec::Parallel,
    )?])
}

fn verify_weak(cfg: &RunConfig) -> Result<Vec<TestReport>, Failure> {
    let seed = require_seed(cfg, "verify weak")?;
    let bx = cfg.hyperbox()?;
    let triplet = cfg.triplet()?;
    let system = Arc::new(enumerate_eigen(&bx, cfg.cutoff)?);
    let phi = match &cfg.weak.function {
        Some(f) => f.clone(),
        None => {
            let mut k = vec![1u32; cfg.dim()];
            k[0] = 3;
            FnDesc::Eigen { k: MultiIndex::new(k)? }
        }
    };
    let mut reports = Vec::with_capacity(cfg.weak.realizations);
    for i in 0..cfg.weak.realizations {
        let r = NoiseRealization::sample(&triplet, &bx, cfg.eps, cfg.small_jump_policy, replicate_seed(seed, i as u64))?;
        let mut rep = diagnostics::weak_identity_test(&r, &phi, cfg.gamma, &system)?;
        rep.name = format!("weak #{i}");
        reports.push(rep);
    }
    Ok(reports)
}

/// `n` log-spaced values from `lo` to `hi`.
fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Interior sample points along the box diagonal.
fn diagonal_points(bx: &HyperBox) -> Vec<Vec<f64>> {
    [0.3, 0.5, 0.71]
        .iter()
        .map(|&s| bx.intervals().iter().map(|&(a, b)| a + s * (b - a)).collect())
        .collect()
}

fn verify_spectral_bound(cfg: &RunConfig) -> Result<Vec<TestReport>, Failure> {
    let bx = cfg.hyperbox()?;
    let t_list = cfg
        .spectral_bound
        .t_list
        .clone()
        .unwrap_or_else(|| log_spaced(1e2, 1e4, 15));
    let points = cfg.spectral_bound.points.clone().unwrap_or_else(|| diagonal_points(&bx));
    Ok(vec![diagnostics::spectral_bound_check(&bx, &t_list, &points)?])
}

fn default_r_list(cfg: &RunConfig) -> Vec<f64> {
    let r_star = 2.0 * cfg.gamma - cfg.dim() as f64 / 2.0;
    vec![r_star - 0.1, r_star + 0.1]
}

fn sweep_sobolev(cfg: &RunConfig, out: &Path) -> Result<i32, Failure> {
    let r_list = cfg.sobolev.r_list.clone().unwrap_or_else(|| default_r_list(cfg));
    let k_list = &cfg.sobolev.k_list;
    let reports = if cfg.sobolev.surrogate {
        let mut reps = diagnostics::sobolev_surrogate(cfg.dim(), cfg.gamma, &r_list, k_list)?;
        reps.push(diagnostics::surrogate_boundary(cfg.dim(), cfg.gamma, k_list)?);
        reps
    } else {
        let seed = require_seed(cfg, "sweep sobolev")?;
        require_existence(cfg)?;
        diagnostics::sobolev_sweep(
            cfg.dim(),
            cfg.gamma,
            &cfg.triplet()?,
            &r_list,
            k_list,
            cfg.sobolev.replicates,
            seed,
            sweep_options(cfg),
        )?
    };
    for rep in &reports {
        let (Some(r), Some(norms)) = (rep.details.get("r"), rep.details.get("norm_sq")) else {
            continue;
        };
        let mut csv = Csv::with_header(&["K", "norm_sq"]);
        for (k, n) in k_list.iter().zip(norms.as_array().into_iter().flatten()) {
            csv.row(&[*k as u64], &[n.as_f64().unwrap_or(f64::NAN)]);
        }
        csv.write(&out.join(format!("sobolev_r{}.csv", r.as_f64().unwrap_or(f64::NAN))))?;
    }
    finish(&reports, out)
}

fn sweep_continuity(cfg: &RunConfig, out: &Path) -> Result<i32, Failure> {
    let seed = require_seed(cfg, "sweep continuity")?;
    require_existence(cfg)?;
    let rep = diagnostics::continuity_probe(
        cfg.dim(),
        cfg.gamma,
        &cfg.triplet()?,
        &cfg.continuity.grid_levels,
        cfg.continuity.replicates,
        seed,
        sweep_options(cfg),
    )?;
    let col = |key: &str| -> Vec<f64> {
        rep.details[key]
            .as_array()
            .map(|a| a.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect())
            .unwrap_or_default()
    };
    let (inc, sup, modes) = (col("median_max_increment"), col("median_sup_norm"), col("modes"));
    let mut csv = Csv::with_header(&["level", "modes", "median_max_increment", "median_sup_norm"]);
    for (i, &level) in cfg.continuity.grid_levels.iter().enumerate() {
        csv.row(&[level as u64, modes[i] as u64], &[inc[i], sup[i]]);
    }
    csv.write(&out.join("continuity.csv"))?;
    finish(&[rep], out)
}

fn green_oracle(cfg: &RunConfig, out: &Path) -> Result<i32, Failure> {
    let bx = cfg.hyperbox()?;
    if bx.dim() != 1 || cfg.gamma != 1.0 {
        return Err(Failure::Config(
            "green-oracle needs a one-dimensional box and gamma = 1 (the closed form is the interval kernel)".into(),
        ));
    }
    let (a, b) = bx.intervals()[0];
    let n = cfg.green_oracle.grid;
    let xs: Vec<f64> = (1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect();
    let system = enumerate_eigen(&bx, cfg.cutoff)?;
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| xs.iter().map(move |&y| (x, y)))
        .filter(|(x, y)| x != y)
        .collect();
    let rows = parallel::try_map_indexed(parallel::Exec::Parallel, pairs.len(), |i| {
        let (x, y) = pairs[i];
        let g = solver::green_gamma_eval(&bx, 1.0, &[x], &[y], &system)?;
        Ok::<_, Error>((x, y, g.value, solver::interval_green(a, b, x, y)))
    })?;
    let mut csv = Csv::with_header(&["x", "y", "spectral", "closed_form", "abs_error"]);
    let mut max_err = 0.0f64;
    for &(x, y, s, c) in &rows {
        let e = (s - c).abs();
        max_err = max_err.max(e);
        csv.row(&[], &[x, y, s, c, e]);
    }
    csv.write(&out.join("green_oracle.csv"))?;
    let rep = TestReport::new("green-oracle", max_err, cfg.green_oracle.tolerance, Direction::AtMost)
        .detail("modes", json!(system.len()))
        .detail("grid", json!(n));
    finish(&[rep], out)
}

/// `reports.jsonl` and `summary.csv` (`name, statistic, threshold, pass`).
pub fn emit_report(reports: &[TestReport], dir: &Path) -> crate::Result<()> {
    let mut jsonl = String::new();
    for r in reports {
        jsonl.push_str(&serde_json::to_string(r).map_err(|e| Error::Config(e.to_string()))?);
        jsonl.push('\n');
    }
    io::write_text(&dir.join("reports.jsonl"), &jsonl)?;
    let mut csv = Csv::with_header(&["name", "statistic", "threshold", "pass"]);
    for r in reports {
        csv.row_str(&[
            r.name.clone(),
            io::fmt_f64(r.statistic),
            io::fmt_f64(r.threshold),
            r.pass.to_string(),
        ]);
    }
    csv.write(&dir.join("summary.csv"))
}

/// 0 when no decided report failed, 1 otherwise.
pub fn exit_code(reports: &[TestReport]) -> i32 {
    if reports.iter().any(TestReport::is_failure) {
        1
    } else {
        0
    }
}

fn finish(reports: &[TestReport], out: &Path) -> Result<i32, Failure> {
    emit_report(reports, out)?;
    for r in reports {
        let status = serde_json::to_value(r.status).expect("status serializes");
        let dir = r.details.get("direction").and_then(|d| d.as_str()).unwrap_or("<=");
        println!(
            "{:<12} {}: statistic {} {} threshold {}",
            status.as_str().unwrap_or("?").to_uppercase(),
            r.name,
            r.statistic,
            dir,
            r.threshold
        );
    }
    Ok(exit_code(reports))
}
