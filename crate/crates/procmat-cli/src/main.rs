//! `procmat` — command-line front end for the process-matrix toolkit.
//!
//! Six commands over one structured-text model-file format:
//!
//! - `validate` — process-matrix invariants and the signalling table;
//! - `capacity` — one-shot entanglement-transmission staircases as CSV;
//! - `typicality` — tendency-postulate verdict for sectored models;
//! - `compare` — operational closeness of two models;
//! - `invert` — branch weights and wire dimensions back from capacity CSVs;
//! - `leakage` — per-sector signalling diagnosis and the superluminal verdict.
//!
//! Exit codes are uniform: 0 success, 1 model-level failure (including
//! negative `validate`/`compare` verdicts), 2 usage or parse failure.
//! Output is deterministic: identical invocations produce byte-identical
//! stdout and files.

mod commands;
mod error;
mod model;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use commands::DirectionChoice;

#[derive(Parser)]
#[command(
    name = "procmat",
    version,
    about = "Process-matrix models: validation, capacities, typicality, closeness, inversion, leakage",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Clap-facing mirror of [`DirectionChoice`].
#[derive(Debug, Clone, Copy, ValueEnum)]
enum DirectionArg {
    /// A → B only.
    Forward,
    /// B → A only.
    Backward,
    /// Both directions, forward rows first.
    Both,
}

impl From<DirectionArg> for DirectionChoice {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Forward => DirectionChoice::Forward,
            DirectionArg::Backward => DirectionChoice::Backward,
            DirectionArg::Both => DirectionChoice::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file and report every process-matrix check.
    Validate {
        /// Model file (JSON, schema_version "1").
        file: PathBuf,
    },
    /// Tabulate capacity staircases over a tolerance grid as CSV.
    Capacity {
        /// Model file (JSON, schema_version "1").
        file: PathBuf,
        /// Transmission direction(s) to tabulate.
        #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
        direction: DirectionArg,
        /// Tolerance grid start:stop:step, endpoints inclusive.
        #[arg(long = "eps-grid", default_value = "0:0.75:0.05")]
        eps_grid: String,
        /// Derive staircases from Born-rule fidelities instead of the
        /// closed form (required for kinds outside the mixture family).
        #[arg(long)]
        oracle: bool,
        /// CSV destination path, or - for stdout.
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Classify a sectored model under the tendency postulate.
    Typicality {
        /// Model file (JSON, schema_version "1"); must be sectored.
        file: PathBuf,
        /// Comparability condition code: V, VS, S or VorS.
        #[arg(long, default_value = "V")]
        condition: String,
        /// Connection-probability threshold θ in (0, 1].
        #[arg(long, default_value_t = 0.9)]
        theta: f64,
        /// Comparability ratio κ ≥ 1.
        #[arg(long, default_value_t = 2.0)]
        kappa: f64,
    },
    /// Decide whether two models are operationally close.
    Compare {
        /// First model file.
        first: PathBuf,
        /// Second model file.
        second: PathBuf,
        /// Criterion file: {"forward": [{"eps": …, "margin_bits": …}, …],
        /// "backward": […]}; defaults to the standard criterion.
        #[arg(long)]
        criterion: Option<PathBuf>,
    },
    /// Recover branch weights and wire dimensions from capacity CSVs.
    Invert {
        /// Forward-direction CSV, as written by `capacity`.
        #[arg(long)]
        forward: PathBuf,
        /// Backward-direction CSV, as written by `capacity`.
        #[arg(long)]
        backward: PathBuf,
    },
    /// Diagnose per-sector signalling and the superluminal verdict.
    Leakage {
        /// Model file (JSON, schema_version "1"); must be sectored.
        file: PathBuf,
        /// Tolerance for the per-direction capacities, in [0, 0.74].
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
    },
}

fn run(cli: Cli) -> error::CmdResult {
    match cli.command {
        Command::Validate { file } => commands::cmd_validate(&file),
        Command::Capacity {
            file,
            direction,
            eps_grid,
            oracle,
            out,
        } => commands::cmd_capacity(&file, direction.into(), &eps_grid, oracle, &out),
        Command::Typicality {
            file,
            condition,
            theta,
            kappa,
        } => commands::cmd_typicality(&file, &condition, theta, kappa),
        Command::Compare {
            first,
            second,
            criterion,
        } => commands::cmd_compare(&first, &second, criterion.as_deref()),
        Command::Invert { forward, backward } => commands::cmd_invert(&forward, &backward),
        Command::Leakage { file, eps } => commands::cmd_leakage(&file, eps),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
