//! Batch front-end: parse a run config, sweep the requested analyses, and
//! emit CSV artifacts.
//!
//! Exit codes: 0 success, 2 an asserted invariant failed, 3 config error,
//! 4 i/o error.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_config, Analysis, ConfigError, RunConfig, DEFAULT_GRID};
use runner::{run, RunError};

#[derive(Parser)]
#[command(
    name = "saddlecheck",
    about = "Stability-constant verification and preconditioner sweeps for perturbed saddle-point systems"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured mesh levels (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the analyses listed in the config on its explicit grid.
    Analyze { config: PathBuf },
    /// Stability constants over the default parameter grid
    /// (missing primary axes filled with 1e-8,1e-4,1,1e4,1e8).
    Sweep { config: PathBuf },
    /// Witness-construction checks on the config grid.
    Witness { config: PathBuf },
    /// MinRes robustness runs on the config grid.
    Precond { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, shape): (&PathBuf, fn(&mut RunConfig)) = match &cli.cmd {
        Cmd::Analyze { config } => (config, |_| {}),
        Cmd::Sweep { config } => (config, |cfg| {
            cfg.analyses = vec![Analysis::Constants];
            for &axis in config::primary_axes(cfg.example) {
                cfg.grid
                    .entry(axis.to_string())
                    .or_insert_with(|| DEFAULT_GRID.to_vec());
            }
        }),
        Cmd::Witness { config } => (config, |cfg| cfg.analyses = vec![Analysis::Witness]),
        Cmd::Precond { config } => (config, |cfg| cfg.analyses = vec![Analysis::Precond]),
    };
    let (mut cfg, warnings) = match parse_config(path) {
        Ok(v) => v,
        Err(e @ ConfigError::Io { .. }) => {
            eprintln!("saddlecheck: {e}");
            return ExitCode::from(4);
        }
        Err(e) => {
            eprintln!("saddlecheck: {e}");
            return ExitCode::from(3);
        }
    };
    shape(&mut cfg);
    if let Some(out_dir) = cli.out_dir {
        cfg.out_dir = out_dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(levels) = cli.levels {
        if levels.iter().any(|&l| l == 0 || l > 32) {
            eprintln!("saddlecheck: --levels outside the desk-scale range 1-32");
            return ExitCode::from(3);
        }
        cfg.levels = levels;
    }
    match run(&cfg, &warnings) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &outcome.failures {
                    eprintln!("saddlecheck: invariant failed: {f}");
                }
                ExitCode::from(2)
            }
        }
        Err(e @ RunError::Io { .. }) => {
            eprintln!("saddlecheck: {e}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("saddlecheck: {e}");
            ExitCode::from(2)
        }
    }
}
