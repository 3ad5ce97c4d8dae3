//! `ranslice`: train, evaluate and benchmark the two slicing levels
//! from one reproducible configuration.
//!
//! Exit codes: 0 success, 2 configuration or contract error, 3 I/O
//! error.

mod chart;
mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{Level, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<ranslice_core::error::ConfigError> for CliError {
    fn from(e: ranslice_core::error::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "ranslice",
    version,
    about = "Two-level RAN slicing simulator: resource-block and edge-compute \
             allocation learned by double deep Q-networks, with exhaustive \
             reference baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Slicing level to operate on (overrides the config file).
    #[arg(long, value_enum)]
    level: Option<Level>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the selected level's agent(s) and write metrics and
    /// checkpoints.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Greedy evaluation of trained checkpoints.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory holding the checkpoints written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also write per-step trace CSVs.
        #[arg(long)]
        trace: bool,
    },
    /// Exhaustive-search and uniform-random reference baselines.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Episodes per baseline (defaults to eval.episodes).
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Delay sweep over device counts and task sizes with freshly
    /// trained agents per cell.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Device counts, comma separated (overrides the config file).
        #[arg(long, value_delimiter = ',')]
        devices: Option<Vec<usize>>,
        /// Task sizes in MB, comma separated (overrides the config
        /// file).
        #[arg(long = "sizes-mb", value_delimiter = ',')]
        sizes_mb: Option<Vec<f64>>,
        /// Also render the sweep as an SVG line chart.
        #[arg(long)]
        chart: bool,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::load(common.config.as_deref())?;
    if let Some(level) = common.level {
        config.level = level;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.display().to_string();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { common } => {
            let ctx = commands::prepare(load_config(&common)?, "train")?;
            commands::run_train(&ctx)
        }
        Command::Eval {
            common,
            checkpoint,
            trace,
        } => {
            let ctx = commands::prepare(load_config(&common)?, "eval")?;
            commands::run_eval(&ctx, &checkpoint, trace)
        }
        Command::Oracle { common, episodes } => {
            let ctx = commands::prepare(load_config(&common)?, "oracle")?;
            commands::run_oracle(&ctx, episodes)
        }
        Command::Sweep {
            common,
            devices,
            sizes_mb,
            chart,
        } => {
            let mut config = load_config(&common)?;
            if let Some(devices) = devices {
                config.sweep.device_counts = devices;
            }
            if let Some(sizes) = sizes_mb {
                config.sweep.task_sizes_mb = sizes;
            }
            let ctx = commands::prepare(config, "sweep")?;
            commands::run_sweep(&ctx, chart)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
