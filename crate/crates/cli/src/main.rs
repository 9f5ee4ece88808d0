//! `pekarlab` - experiment runner for the polaron numerical laboratory.
//!
//! Subcommands build spectral bases, solve the classical minimization,
//! assemble fluctuation operators, diagonalize the quantum oracle, run the
//! strong-coupling sweep against the trace formula, verify the analytic
//! bound suites, and execute the invariant battery. Every run writes a
//! manifest with the config hash, the seed, and the output inventory.
//!
//! Exit codes: 0 pass, 1 usage or config error, 2 numerical
//! non-convergence, 3 property-check failure.

mod commands;
mod config;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{ExperimentConfig, OutputFormat};

#[derive(Debug, Parser)]
#[command(name = "pekarlab", version, about = "polaron numerics laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Path to the experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format; overrides the config.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "json" => Ok(OutputFormat::Json),
        "csv" => Ok(OutputFormat::Csv),
        other => Err(format!("unknown format `{other}` (expected csv or json)")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and export the eigenbasis and the overlap tensor.
    Basis(Common),
    /// Solve the classical minimization, probe uniqueness, assemble the
    /// electron Hessian.
    Pekar(Common),
    /// Assemble K and L, the quantum correction, and the expansion checks.
    Fluct(Common),
    /// One quantum-oracle diagonalization at the first configured alpha.
    Spectrum(Common),
    /// Alpha sweep, fit of the rescaled difference, comparison with the
    /// trace formula.
    Fit(Common),
    /// Quadrature and scaling verification of the analytic bounds.
    Bounds(Common),
    /// Invariant battery across all modules.
    Check {
        #[command(flatten)]
        common: Common,
        /// Run only the fast closed-form anchors.
        #[arg(long)]
        quick: bool,
    },
}

/// Failure classes mapped onto process exit codes.
pub enum Failure {
    Usage(String),
    Numerical(String),
    Property(String),
}

impl Failure {
    fn report(&self) -> ExitCode {
        match self {
            Failure::Usage(msg) => {
                eprintln!("config error: {msg}");
                ExitCode::from(1)
            }
            Failure::Numerical(msg) => {
                eprintln!("numerical failure: {msg}");
                ExitCode::from(2)
            }
            Failure::Property(msg) => {
                eprintln!("property check failed: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

impl From<pekarlab_core::CoreError> for Failure {
    fn from(e: pekarlab_core::CoreError) -> Self {
        use pekarlab_core::CoreError::*;
        match e {
            InvalidInput(_) | EmptyBasis { .. } | OutOfBounds { .. } | MemoryBudget { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("io: {e}"))
    }
}

fn load_config(common: &Common) -> Result<(ExperimentConfig, String), Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Failure::Usage(format!("{}: {e}", common.config.display())))?;
    let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
        // serde_json reports line and column on the parse error
        Failure::Usage(format!("{}: {e}", common.config.display()))
    })?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.display().to_string();
    }
    if let Some(format) = common.format {
        cfg.format = format;
    }
    cfg.validate().map_err(Failure::Usage)?;
    if let Some(threads) = common.threads {
        // a failed pool build only means a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let canonical = cfg.canonical_json();
    Ok((cfg, canonical))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, quick) = match &cli.command {
        Command::Basis(c) => ("basis", c, false),
        Command::Pekar(c) => ("pekar", c, false),
        Command::Fluct(c) => ("fluct", c, false),
        Command::Spectrum(c) => ("spectrum", c, false),
        Command::Fit(c) => ("fit", c, false),
        Command::Bounds(c) => ("bounds", c, false),
        Command::Check { common, quick } => ("check", common, *quick),
    };
    let (cfg, canonical) = match load_config(common) {
        Ok(v) => v,
        Err(f) => return f.report(),
    };
    let ctx = match commands::Context::new(name, cfg, canonical, quick) {
        Ok(ctx) => ctx,
        Err(f) => return f.report(),
    };
    let result = match name {
        "basis" => commands::run_basis(ctx),
        "pekar" => commands::run_pekar(ctx),
        "fluct" => commands::run_fluct(ctx),
        "spectrum" => commands::run_spectrum(ctx),
        "fit" => commands::run_fit(ctx),
        "bounds" => commands::run_bounds(ctx),
        "check" => commands::run_check(ctx),
        _ => unreachable!(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
