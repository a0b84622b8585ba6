//! Command-line surface shared by the binary and in-process callers.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{self, Axis, FitKind};
use crate::output::OutDir;
use crate::{CliError, Result, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "eitmem", version, about = "EIT quantum-memory simulator")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Heralded photon waveform from the source.
    Waveform,
    /// Slow-light and store/retrieve run at the configured control.
    Store,
    /// Parameter scan.
    Scan {
        #[arg(long, value_enum)]
        axis: Axis,
    },
    /// Fit an EIT spectrum or a storage decay curve.
    Fit {
        #[arg(long, value_enum)]
        kind: FitKind,
        /// Two-column CSV: `detuning,transmission` or `storage_time_ns,se`.
        #[arg(long)]
        data: PathBuf,
    },
    /// Synthetic EIT transmission spectrum.
    Spectrum,
    /// Photon statistics of a simulated or recorded time-tag stream.
    Stats,
}

/// Run one invocation and return its JSON summary.
pub fn execute(cli: Cli) -> Result<serde_json::Value> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    let out = OutDir::create(cli.out.as_ref().unwrap_or(&cfg.output.dir))?;
    match cli.jobs {
        Some(0) => Err(CliError::config("--jobs must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config(e.to_string()))?
            .install(|| dispatch(&cli.cmd, &cfg, seed, &out)),
        None => dispatch(&cli.cmd, &cfg, seed, &out),
    }
}

fn dispatch(cmd: &Cmd, cfg: &RunConfig, seed: u64, out: &OutDir) -> Result<serde_json::Value> {
    Ok(match cmd {
        Cmd::Waveform => serde_json::to_value(commands::cmd_waveform(cfg, out)?),
        Cmd::Store => serde_json::to_value(commands::cmd_store(cfg, out)?),
        Cmd::Scan { axis } => serde_json::to_value(commands::cmd_scan(cfg, *axis, out)?),
        Cmd::Fit { kind, data } => serde_json::to_value(commands::cmd_fit(cfg, *kind, data, out)?),
        Cmd::Spectrum => serde_json::to_value(commands::cmd_spectrum(cfg, seed, out)?),
        Cmd::Stats => serde_json::to_value(commands::cmd_stats(cfg, seed, out)?),
    }?)
}
