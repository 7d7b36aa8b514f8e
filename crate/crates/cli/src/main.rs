//! `vqe-basin` command-line runner. Every run reads a strict TOML config,
//! writes its outputs to `--out` and finishes with a manifest of digests.
//!
//! Exit codes: 0 success, 2 configuration or validation error, 3 numerical
//! failure.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;
use vqe_basin::circuit::CircuitError;
use vqe_basin::diagnostics::DiagnosticsError;
use vqe_basin::geometry::GeometryError;
use vqe_basin::hamiltonian::HamiltonianError;
use vqe_basin::optim::OptimError;
use vqe_basin::precond::PrecondError;

#[derive(Debug, Parser)]
#[command(
    name = "vqe-basin",
    version,
    about = "Statevector VQE runs and diagnostics"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default `out` in the config, else `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Energy of the initial angles, with the error against the reference.
    Energy,
    /// Refine the initial angles with L-BFGS, SPSA or basin hopping.
    Optimize,
    /// Basin-hopping labels for a list of Hamiltonians.
    Labels,
    /// Train a preconditioner on a labels file.
    PrecondTrain,
    /// Fine-tune a checkpoint with frozen layers.
    PrecondAdapt,
    /// Diagnostic scans.
    Diagnose {
        #[command(subcommand)]
        scan: Scan,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Scan {
    Gradvar,
    Hessian,
    Tails,
    Disorder,
    Landscape,
    Shots,
    Benchmark,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn classify(numerical: bool, msg: String) -> CliError {
    if numerical {
        CliError::Numerical(msg)
    } else {
        CliError::Config(msg)
    }
}

fn optim_numerical(e: &OptimError) -> bool {
    matches!(e, OptimError::NonFinite { .. })
}

fn hamiltonian_numerical(e: &HamiltonianError) -> bool {
    matches!(e, HamiltonianError::NoConvergence { .. })
}

fn precond_numerical(e: &PrecondError) -> bool {
    match e {
        PrecondError::Diverged { .. } => true,
        PrecondError::Optim(o) => optim_numerical(o),
        PrecondError::Hamiltonian(h) => hamiltonian_numerical(h),
        _ => false,
    }
}

impl From<OptimError> for CliError {
    fn from(e: OptimError) -> Self {
        classify(optim_numerical(&e), e.to_string())
    }
}

impl From<HamiltonianError> for CliError {
    fn from(e: HamiltonianError) -> Self {
        classify(hamiltonian_numerical(&e), e.to_string())
    }
}

impl From<PrecondError> for CliError {
    fn from(e: PrecondError) -> Self {
        classify(precond_numerical(&e), e.to_string())
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        classify(
            matches!(e, GeometryError::PerturbationFailed),
            e.to_string(),
        )
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        let numerical = match &e {
            DiagnosticsError::NotStationary(_)
            | DiagnosticsError::AllRedundant
            | DiagnosticsError::TooManyFailures { .. }
            | DiagnosticsError::TraceNotZero(_) => true,
            DiagnosticsError::Optim(o) => optim_numerical(o),
            DiagnosticsError::Hamiltonian(h) => hamiltonian_numerical(h),
            DiagnosticsError::Precond(p) => precond_numerical(p),
            DiagnosticsError::Geometry(g) => matches!(g, GeometryError::PerturbationFailed),
            _ => false,
        };
        classify(numerical, e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            toml::from_str::<config::RunConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => config::RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        // Only the first pool configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let name = match cli.command {
        Command::Energy => "energy",
        Command::Optimize => "optimize",
        Command::Labels => "labels",
        Command::PrecondTrain => "precond_train",
        Command::PrecondAdapt => "precond_adapt",
        Command::Diagnose { scan } => match scan {
            Scan::Gradvar => "gradvar",
            Scan::Hessian => "hessian",
            Scan::Tails => "tails",
            Scan::Disorder => "disorder",
            Scan::Landscape => "landscape",
            Scan::Shots => "shots",
            Scan::Benchmark => "benchmark",
        },
    };
    let echo = toml::to_string(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut out = output::Run::new(name, cfg.seed, echo, &out_dir)?;
    if let Some(path) = &cli.config {
        out.read(path)?;
    }
    match cli.command {
        Command::Energy => commands::energy(&cfg, &mut out)?,
        Command::Optimize => commands::optimize(&cfg, &mut out)?,
        Command::Labels => commands::labels(&cfg, &mut out)?,
        Command::PrecondTrain => commands::precond_train(&cfg, &mut out)?,
        Command::PrecondAdapt => commands::precond_adapt(&cfg, &mut out)?,
        Command::Diagnose { scan } => match scan {
            Scan::Gradvar => commands::gradvar(&cfg, &mut out)?,
            Scan::Hessian => commands::hessian(&cfg, &mut out)?,
            Scan::Tails => commands::tails(&cfg, &mut out)?,
            Scan::Disorder => commands::disorder(&cfg, &mut out)?,
            Scan::Landscape => commands::landscape(&cfg, &mut out)?,
            Scan::Shots => commands::shots(&cfg, &mut out)?,
            Scan::Benchmark => commands::benchmark(&cfg, &mut out)?,
        },
    }
    let manifest = out.finish()?;
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
