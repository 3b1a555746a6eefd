//! `vortexlab`: runs named experiments from JSON configs and reports on their artifacts.

mod config;
mod error;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "vortexlab", version, about = "Vortex and coupled-vortex experiments on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Summarize the artifacts in a directory.
    Report {
        /// Recompute residuals and energies from the stored fields.
        #[arg(long)]
        verify: bool,
        dir: PathBuf,
    },
    /// Run a τ-sweep; the config's experiment field is ignored.
    Sweep { config: PathBuf },
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("VORTEXLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| CliError::config(format!("VORTEXLAB_THREADS must be a positive integer, got `{raw}`")))?;
    if n == 0 {
        return Err(CliError::config("VORTEXLAB_THREADS must be a positive integer, got `0`"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::config(format!("VORTEXLAB_THREADS: {e}")))
}

fn execute(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { config } => experiments::run(&ExperimentConfig::load(&config)?),
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(&config).map_err(|e| CliError::config(format!("cannot read {}: {e}", config.display())))?;
            let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::config(format!("config: {e}")))?;
            if let Some(obj) = value.as_object_mut() {
                obj.insert("experiment".into(), "tau-sweep".into());
            }
            let cfg = ExperimentConfig::parse(&value.to_string())?;
            experiments::run(&cfg)
        }
        Command::Report { verify, dir } => {
            let failures = report::report(&dir, verify)?;
            if failures > 0 {
                return Err(CliError::verification(format!("{failures} artifact(s) failed verification")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
