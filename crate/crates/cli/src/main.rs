mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Parser)]
#[command(name = "cloaklab", about = "Truncated cylindrical cloak: mode solver, limits, resonances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; overrides `output_path`, default stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Solve even when some mode is within the resonance margin.
    #[arg(long, global = true)]
    allow_near_resonance: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Per-mode coefficients, intermediates and residuals.
    Solve,
    /// Total field on the polar grid.
    Field,
    /// Interior resonance frequencies for 0 <= n <= N.
    Resonances,
    /// Sweep R_k = 1 + 2^-k and fit convergence orders.
    Limit,
    /// Material parameters on the polar grid.
    Materials,
    /// Finite-difference oracle and solver cross-checks.
    Check,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    /// Core errors carry the module they came from; invalid input is still a
    /// configuration problem.
    pub fn math(module: &str, err: cloak_core::Error) -> Self {
        let code = match err {
            cloak_core::Error::InvalidParameter(_) => 1,
            _ => 2,
        };
        CliError { code, message: format!("{module}: {err}") }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::config("--config PATH is required"))?;
    let config = RunConfig::load(path)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("--threads {n}: {e}")))?;
    }
    let opts = commands::Options { allow_near_resonance: cli.allow_near_resonance };
    let outcome = match cli.command {
        Command::Solve => commands::solve(&config, opts),
        Command::Field => commands::field(&config, opts),
        Command::Resonances => commands::resonances(&config),
        Command::Limit => commands::limit(&config),
        Command::Materials => commands::materials(&config),
        Command::Check => commands::check(&config),
    }?;
    let target = cli.out.or_else(|| config.output_path.clone());
    match target {
        Some(p) => std::fs::write(&p, &outcome.text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{}", outcome.text),
    }
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cloaklab: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
