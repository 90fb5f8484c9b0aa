//! `cmlab` command-line front end: meshing, characteristic-mode sweeps,
//! driven S-parameter sweeps and scene comparisons from TOML run configs.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cmlab::{Error, Result};

use crate::commands::Options;
use crate::config::RunConfig;

/// Environment variable fixing the worker count.
const THREADS_ENV: &str = "CMLAB_THREADS";

#[derive(Parser)]
#[command(name = "cmlab", version, about = "Characteristic mode analysis of MIMO chassis scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Frequency (GHz) for field dumps.
    #[arg(long)]
    freq: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh the scene and write the mesh file.
    Mesh(Common),
    /// Characteristic-mode sweep, tracking, eigencurrents and coupling classes.
    Modes(Common),
    /// Driven multiport sweep and S-parameters.
    Driven(Common),
    /// Compare a baseline scene with a perturbed one.
    Compare {
        /// Baseline config, then perturbed config.
        #[arg(long, num_args = 1, required = true)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Frequency (GHz) of the current-maxima check.
        #[arg(long)]
        freq: Option<f64>,
    },
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("cannot start {n} workers: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Mesh(c) => commands::mesh(&RunConfig::load(&c.config)?, &Options { out: c.out.as_deref(), freq: c.freq }),
        Command::Modes(c) => commands::modes(&RunConfig::load(&c.config)?, &Options { out: c.out.as_deref(), freq: c.freq }),
        Command::Driven(c) => commands::driven(&RunConfig::load(&c.config)?, &Options { out: c.out.as_deref(), freq: c.freq }),
        Command::Compare { config, out, freq } => {
            let [a, b] = config.as_slice() else {
                return Err(Error::InvalidInput(format!(
                    "compare takes exactly two --config files (baseline, perturbed), got {}",
                    config.len()
                )));
            };
            let (a, b) = (RunConfig::load(a)?, RunConfig::load(b)?);
            commands::compare(&a, &b, &Options { out: out.as_deref(), freq })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 3 })
        }
    }
}
