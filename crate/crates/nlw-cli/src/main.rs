//! `nlw`: batch front door for the spectral wave solver. Parses a flat
//! key-value config, dispatches the requested experiment, and persists
//! data files plus a checksummed manifest.

mod config;
mod manifest;
mod runner;
mod snapshot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

#[derive(Parser)]
#[command(name = "nlw", version, about = "Deterministic batch runner for the damped wave solver")]
struct Cli {
    /// Run configuration: `key = value` lines, `#` comments.
    config_file: PathBuf,
    /// Override output.dir from the config.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Worker threads for ensemble members (default: all cores).
    #[arg(long, value_name = "N", env = "NLW_WORKERS")]
    workers: Option<usize>,
    /// Replace every seed the config would use.
    #[arg(long, value_name = "S")]
    seed_override: Option<u64>,
}

// exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error
fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config_file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("nlw: cannot read {}: {e}", cli.config_file.display());
            return ExitCode::from(4);
        }
    };
    let mut cfg = match config::parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("nlw: config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = cli.output {
        cfg.output_dir = dir;
    }
    if let Some(s) = cli.seed_override {
        cfg.override_seeds(s);
    }
    match runner::run(&cfg, &text, cli.workers) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(runner::RunError::Numerical(e)) => {
            eprintln!("nlw: numerical failure: {e}");
            ExitCode::from(3)
        }
        Err(runner::RunError::Io(e)) => {
            eprintln!("nlw: i/o error: {e}");
            ExitCode::from(4)
        }
    }
}
