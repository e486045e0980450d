//! `grushin-lab`: experiments on the Grushin-type operator -∂ₓ² - |x|^{2γ}∂_y² on (-1,1) × 𝕋.
//!
//! Every subcommand writes a deterministic JSON report into `--out-dir`, any requested
//! artifacts next to it, and a `timings.json` sidecar. Exit code 0 iff every verdict passes.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Ctx;
use crate::config::{pick, ExperimentConfig};
use crate::error::CliError;
use crate::report::{OutDir, Timings};

#[derive(Debug, Parser)]
#[command(name = "grushin-lab", version, about = "Spectral experiments for Grushin-type evolution equations")]
pub struct Cli {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports and artifacts [default: out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for the data-parallel core (1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every sampled quantity [default: 7].
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Truncated eigenbasis; writes basis.json and the (n, m, λ², μ) CSV.
    Spectrum(SpectrumArgs),
    /// Whole-line ground state of -∂² + |x|^{2γ}.
    Groundstate(GroundstateArgs),
    /// Spectral Schrödinger or heat propagation of a basis state.
    Evolve(EvolveArgs),
    /// Observability Gramian over [0, T].
    Gramian(ObsArgs),
    /// Observability constants along a cutoff list, per horizon.
    RegimeScan(RegimeArgs),
    /// Critical quasimode-cost exponent over dyadic h.
    ResolventScan(ResolventArgs),
    /// Final-state observability constant for the heat flow.
    HeatObs(ObsArgs),
    /// Geometric control certification by ray tracing.
    Geodesics(GeodesicArgs),
    /// Dyadic wave-packet diagnostics.
    Quasimode(QuasimodeArgs),
    /// Damped wave equation with strip damping.
    Damped(DampedArgs),
    /// Odd extension, averaged operator and conjugated residual.
    Normalform(NormalformArgs),
    /// Runs acceptance items.
    Suite(SuiteArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub s: Option<u32>,
    /// Energy cutoff Λ.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Interior grid points in x.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Observation strip a1,a2.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub strip: Option<Vec<f64>>,
    #[arg(long)]
    pub n_cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "basis.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "spectrum.csv")]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct GroundstateArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Plateau window a,b.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub window: Option<Vec<f64>>,
    #[arg(long, default_value = "gs.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Equation {
    Schrodinger,
    Heat,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "schrodinger")]
    pub eq: Equation,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Basis from `spectrum`; built from the flags when absent.
    #[arg(long)]
    pub basis: Option<PathBuf>,
    /// Initial state {basis_id, coeffs}; the basis element `--mode` when absent.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    #[arg(long, default_value = "state.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ObsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Time horizon T.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegimeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<f64>>,
    #[arg(long, default_value = "regime.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResolventArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dyadic h values.
    #[arg(long, value_delimiter = ',')]
    pub h: Option<Vec<f64>>,
    #[arg(long, default_value_t = grushin::observability::DEFAULT_THETA)]
    pub theta: f64,
    #[arg(long, default_value = "resolvent.json")]
    pub out: PathBuf,
    #[arg(long, default_value = "alpha_star.csv")]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub strip: Option<Vec<f64>>,
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long = "T0", alias = "t0", default_value_t = 200.0)]
    pub t0: f64,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value = "gcc.json")]
    pub out: PathBuf,
    /// Trajectory of the worst sample, (t, x, y, xi, eta, p).
    #[arg(long, default_value = "trajectory.csv")]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct QuasimodeArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Dyadic index, h = 2^-n.
    #[arg(long, default_value_t = 5)]
    pub n: u32,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub strip: Option<Vec<f64>>,
    /// Horizon; 0.5·a₁/μ₀^s when absent.
    #[arg(long = "T0", alias = "t0")]
    pub t0: Option<f64>,
    #[arg(long, default_value = "packet.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DampedAction {
    Evolve,
    ResolventSweep,
    DecayFit,
}

#[derive(Debug, Args)]
pub struct DampedArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(value_enum)]
    pub action: DampedAction,
    /// Initial mode u₀ = e_j for `evolve`.
    #[arg(long, default_value_t = 0)]
    pub mode: usize,
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Sweep range lo,hi for `resolvent-sweep`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub range: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2)]
    pub per_bin: usize,
    /// Modes scanned by `decay-fit`.
    #[arg(long, default_value_t = 64)]
    pub modes: usize,
    #[arg(long, default_value = "dw.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NormalformArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value = "nf.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// All acceptance items.
    PaperCheck,
}

#[derive(Debug, Args)]
pub struct SuiteArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Criterion numbers to run, e.g. 1,2,9.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u32>,
    #[arg(long, default_value = "suite.json")]
    pub out: PathBuf,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads);
    let exec = match threads {
        Some(1) => grushin::Exec::Sequential,
        Some(n) => {
            if !grushin::exec::configure_threads(n) {
                log::warn!("thread count {n} not applied");
            }
            grushin::Exec::Parallel
        }
        None => grushin::Exec::Parallel,
    };
    let out = OutDir::create(pick(cli.out_dir.clone(), &cfg.out_dir, PathBuf::from("out")))?;
    let seed = pick(cli.seed, &cfg.seed, 7);
    let mut ctx = Ctx {
        cfg,
        out,
        seed,
        exec,
        timings: Timings::default(),
    };
    let start = Instant::now();
    let envelope = commands::dispatch(&cli.command, &mut ctx)?;
    let name = envelope.command.clone();
    let report = ctx.out.write_json(format!("{name}-report.json").as_ref(), &envelope)?;
    ctx.out.write_json(
        "timings.json".as_ref(),
        &ctx.timings.to_json(&name, start.elapsed().as_secs_f64()),
    )?;
    for v in &envelope.verdicts {
        println!(
            "criterion {}: {} {} ({})",
            v.criterion,
            if v.passed { "PASS" } else { "FAIL" },
            v.check,
            v.detail
        );
    }
    println!("report: {}", report.display());
    Ok(envelope.all_passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
