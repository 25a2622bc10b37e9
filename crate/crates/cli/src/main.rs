//! `giem-renorm`: renormalization experiments driven by a JSON config.

mod config;
mod error;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::write_atomic;
use crate::run::{execute, summary, Outcome};

const DEFAULT_OUTPUT: &str = "giem-out";

#[derive(Parser)]
#[command(name = "giem-renorm", version, about = "Renormalization experiments for generalized interval exchange maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiments and write CSV tables and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured experiments and print the checks without writing files.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Verify { config } => verify(&config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("giem-renorm: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<(ExperimentConfig, Outcome), CliError> {
    let cfg = ExperimentConfig::load(path)?;
    let outcome = execute(&cfg)?;
    Ok((cfg, outcome))
}

fn print_failures(outcome: &Outcome) {
    for c in outcome.report.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL [{:?}] {}: {}", c.severity, c.name, c.detail);
    }
}

fn run(path: &Path, out: Option<PathBuf>) -> Result<u8, CliError> {
    let (cfg, outcome) = load(path)?;
    let dir = out.or(cfg.output.clone()).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    for t in &outcome.tables {
        write_atomic(&dir, t.name, t.text().as_bytes())?;
    }
    let mut json = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Io(e.to_string()))?;
    json.push('\n');
    write_atomic(&dir, "report.json", json.as_bytes())?;
    let r = &outcome.report;
    println!("levels: {} of {} ({})", r.levels, r.n_max, r.stop_reason);
    println!("wrote {} tables and report.json to {}", outcome.tables.len(), dir.display());
    for (k, v) in summary(r) {
        println!("{k}: {v}");
    }
    print_failures(&outcome);
    Ok(r.exit_code as u8)
}

fn verify(path: &Path) -> Result<u8, CliError> {
    let (_, outcome) = load(path)?;
    let r = &outcome.report;
    println!("levels: {} of {} ({})", r.levels, r.n_max, r.stop_reason);
    for c in &r.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} [{:?}] {}: {}", c.severity, c.name, c.detail);
    }
    Ok(r.exit_code as u8)
}
