// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! `spinorbit` command-line front end.
//!
//! Exit codes: 0 success, 2 user or configuration error, 3 I/O error.

mod commands;
mod constants;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spinorbit::scenarios::DEFAULT_SEED;
use spinorbit::Error;

#[derive(Parser, Debug)]
#[command(name = "spinorbit", version, about = "Spin-orbit photonic simulator")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Output directory.
    #[arg(
        long,
        global = true,
        env = "SPINORBIT_OUT",
        default_value = "spinorbit-out"
    )]
    pub out: PathBuf,

    /// Seed for sampling and MLE restarts.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Sample this many shots per setting; omit for exact probabilities.
    #[arg(long, global = true)]
    pub shots: Option<u64>,

    /// Extra tabular output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// TOML file with physical constants (wavelength_nm, bandwidth_nm,
    /// hologram_efficiency, n_max).
    #[arg(long, global = true)]
    pub constants: Option<PathBuf>,

    /// Override the centre wavelength in nm.
    #[arg(long, global = true)]
    pub wavelength_nm: Option<f64>,

    /// Override the filter bandwidth in nm.
    #[arg(long, global = true)]
    pub bandwidth_nm: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a canned experiment.
    Scenario(commands::ScenarioArgs),
    /// Apply a circuit file to a state file.
    Circuit(commands::CircuitArgs),
    /// Reconstruct a state or process from a counts CSV.
    Tomo(commands::TomoArgs),
    /// Sweep one noise knob of a scenario and tabulate its metrics.
    Scan(commands::ScanArgs),
    /// Write the nominal circuit and input-state files of every scenario.
    Circuits(commands::CircuitsArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scenario(a) => commands::scenario(&cli.global, &a),
        Command::Circuit(a) => commands::circuit(&cli.global, &a),
        Command::Tomo(a) => commands::tomo(&cli.global, &a),
        Command::Scan(a) => commands::scan(&cli.global, &a),
        Command::Circuits(a) => commands::circuits(&cli.global, &a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        _ => 2,
    }
}
