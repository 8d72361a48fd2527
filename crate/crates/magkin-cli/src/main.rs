//! `magkin` command-line experiment runner.

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use config::ExperimentConfig;
use output::Artifacts;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "MAGKIN_OUTPUT_ROOT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("numerical failure in {module}::{op}: {message}")]
    Numerical { module: &'static str, op: &'static str, message: String },
}

impl CliError {
    pub fn numerical(module: &'static str, op: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Numerical { module, op, message: e.to_string() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    BesselCheck,
    DispersionScan,
    Bernstein,
    VolterraRun,
    OracleRun,
    CrossValidate,
    PenroseScan,
    EnhancedScaling,
    EnergyDecay,
    KernelDump,
}

impl Experiment {
    fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Runs linear magnetized plasma experiments and writes CSV plus a JSON manifest.
#[derive(Debug, Parser)]
#[command(name = "magkin", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML experiment configuration; every key is optional.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; defaults to the output root joined with the experiment name.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output root used when `--out` is absent.
    #[arg(long, env = OUTPUT_ROOT_VAR, default_value = "magkin-output", hide = true)]
    output_root: PathBuf,
    /// Worker threads for the parallel sub-tasks.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Multiplies every tolerance in the configuration.
    #[arg(long, value_name = "X", default_value_t = 1.0)]
    tol_scale: f64,
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    if !(cli.tol_scale > 0.0) || !cli.tol_scale.is_finite() {
        return Err(CliError::Config(format!("--tol-scale: must be positive and finite, got {}", cli.tol_scale)));
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    }
    .resolved(cli.tol_scale);
    config.validate()?;
    let name = cli.experiment.name();
    let dir = cli.out.clone().unwrap_or_else(|| cli.output_root.join(&name));
    let mut art = Artifacts::new(&dir)?;
    let start = Instant::now();
    let passed = experiments::run(cli.experiment, &config, &mut art)?;
    let manifest = art.finish(&name, &config, start.elapsed().as_secs_f64(), passed)?;
    println!("{name}: {} ({})", if passed { "ok" } else { "check failed" }, manifest.display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("magkin: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
