//! `diqss` — verification suites, protocol simulation, and table emission
//! for the parity-game DI-QSS toolkit.
//!
//! Exit codes: 0 on success, 1 when a verification check fails (or a strict
//! simulation aborts), 2 on usage or configuration errors. All output is
//! deterministic given flags and seed.

mod config;
mod simulate;
mod tables;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit status for failed verification or strict-mode aborts.
const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for usage and configuration errors (also used by clap).
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "diqss",
    version,
    about = "Simulator and verification toolkit for a parity-game based device-independent quantum secret sharing protocol"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite: exhaustive game checks, ratio columns,
    /// perfect-win simulation, reduced views, classical optimum.
    Verify {
        /// Largest party count for the exhaustive scans (3..=10).
        #[arg(long, value_name = "N")]
        max_n: usize,
    },
    /// Simulate a full protocol run from a TOML config file.
    Simulate {
        /// Path to the run configuration (TOML).
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Override the seed from the config file.
        #[arg(long, value_name = "S")]
        seed: Option<u64>,
        /// Write the machine-readable JSON report here.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Write a per-round CSV log here (one row per round).
        #[arg(long, value_name = "PATH")]
        round_log: Option<PathBuf>,
        /// Exit with status 1 when the run aborts.
        #[arg(long)]
        strict: bool,
    },
    /// Emit a CSV table on standard output.
    Tables {
        #[command(subcommand)]
        kind: TableKind,
    },
}

#[derive(Subcommand)]
enum TableKind {
    /// Valid-pair ratio per party count: n,brute_ratio,closed_ratio.
    Ratio { n_min: usize, n_max: usize },
    /// QBER contributions over an efficiency grid: eta,Q1,Q2,Q.
    Qber {
        #[arg(long)]
        fidelity: f64,
        /// Grid as A:B:STEP, endpoints inclusive.
        #[arg(long, value_name = "A:B:STEP")]
        eta_grid: String,
    },
    /// Key-rate curve over an efficiency grid: eta,Q,r.
    Keyrate {
        #[arg(long)]
        fidelity: f64,
        #[arg(long, value_name = "A:B:STEP")]
        eta_grid: String,
    },
    /// Round-accounting advantage over the CHSH-based scheme:
    /// alpha,beta,advantage.
    Advantage {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Verify { max_n } => verify::run(max_n),
        Command::Simulate { config, seed, out, round_log, strict } => {
            simulate::run(&config, seed, out.as_deref(), round_log.as_deref(), strict)
        }
        Command::Tables { kind } => tables::run(&kind),
    };
    match outcome {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
