//! `dirank`: batch front-end for directed-information rankings.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dirank::synth::Network;
use dirank::Transform;

use crate::config::OutputFormat;

#[derive(Debug, Parser)]
#[command(name = "dirank", version, about = "Rank time series by directed-information net flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every analysis command. Flags override the config file.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run config with the series manifest.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory (default: `output.dir` from the config, else `out/` next to it).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Jitter seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub transform: Option<Transform>,
    #[arg(long)]
    pub clamp_negative: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full graph, net-flow ranking and per-edge diagnostics.
    Rank {
        #[command(flatten)]
        common: Common,
        /// Also rank by PageRank.
        #[arg(long)]
        pagerank: bool,
        #[arg(long, default_value_t = dirank::graph::DEFAULT_DAMPING)]
        damping: f64,
    },
    /// Weight matrix only.
    Heatmap {
        #[command(flatten)]
        common: Common,
    },
    /// Graph collapsed onto regions, with its net-flow ranking.
    Regions {
        #[command(flatten)]
        common: Common,
    },
    /// DI estimates over sliding windows of one ordered pair.
    Window {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        src: Option<String>,
        #[arg(long)]
        dst: Option<String>,
        /// Samples per window.
        #[arg(long)]
        length: Option<usize>,
        /// Samples between window starts.
        #[arg(long)]
        step: Option<usize>,
    },
    /// One graph and ranking per calendar month.
    Blocks {
        #[command(flatten)]
        common: Common,
        /// Fewest aligned samples a pair may have in a month.
        #[arg(long)]
        min_samples: Option<usize>,
    },
    /// Markov-order selection for every ordered pair.
    Orders {
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic network as price CSVs plus a manifest.
    Synth {
        #[arg(long, value_enum, default_value = "test")]
        network: NetworkArg,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lag coefficient for the Gaussian network.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma_w: f64,
        /// First date, YYYY-MM-DD.
        #[arg(long, default_value = "2000-01-01")]
        start: chrono::NaiveDate,
        /// Minutes between samples; anything but whole days writes datetimes.
        #[arg(long, default_value_t = 1440)]
        step_minutes: i64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum NetworkArg {
    /// Four-node nonlinear test network.
    Test,
    /// Gaussian lag pair.
    Gaussian,
    /// Independent white-noise pair.
    Iid,
}

impl NetworkArg {
    pub fn network(self, a: f64, sigma_w: f64) -> Network {
        match self {
            NetworkArg::Test => Network::PaperTest,
            NetworkArg::Gaussian => Network::GaussianLag { a, sigma_w },
            NetworkArg::Iid => Network::IidPair,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for p in &report.written {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
