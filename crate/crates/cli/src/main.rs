mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Plan, simulate and score a wavelength-multiplexed entanglement network.
#[derive(Debug, Parser)]
#[command(name = "wdmqn", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Network configuration (JSON).
    #[arg(long, env = "WDMQN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Directory for output files; created if missing.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Machine-readable output on stdout instead of the text summary.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assign logical channels to users so every pair shares a conjugate pair.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-link rates and network score for an assignment.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assignment: PathBuf,
        /// Exit 0 even when the network score fails.
        #[arg(long)]
        report_only: bool,
    },
    /// Score a list of link rates.
    Score {
        /// Lines of `skr` or `link,skr`.
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        report_only: bool,
    },
    /// Sweep the source brightness and pick an operating point.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        assignment: PathBuf,
        #[arg(long)]
        grid_min: Option<f64>,
        #[arg(long)]
        grid_max: Option<f64>,
        /// Points per decade.
        #[arg(long)]
        grid_points: Option<u32>,
    },
    /// Summarise a long-run SKR log.
    Stability {
        /// JSON-lines or CSV records with timestamp, link, skr_bps.
        trace: PathBuf,
        #[command(flatten)]
        common: Common,
        /// JSON list of downtime intervals.
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Seconds per bin.
        #[arg(long)]
        bin_width: Option<f64>,
    },
}

pub mod exit {
    pub const USAGE: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const NO_VIABLE_POINT: u8 = 3;
    pub const FAILED_NETWORK: u8 = 4;
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<wdmqn::Error>() {
                Some(wdmqn::Error::Infeasible(_)) => exit::INFEASIBLE,
                Some(wdmqn::Error::NoViablePoint) => exit::NO_VIABLE_POINT,
                _ => exit::USAGE,
            };
            ExitCode::from(code)
        }
    }
}
