//! Command-line front end: `prepare`, `wigner`, `readout`, `estimate` and
//! `validate`. Every file written is paired with a `<file>.manifest.json`
//! that can be passed back as `--config` to reproduce it.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "cavityq",
    version,
    about = "Cavity cat-state preparation, Wigner grids, qubit readout and Q estimation"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the preparation protocol and print the resulting cat.
    Prepare(PrepareArgs),
    /// Write the Wigner function of the (damped) cat on a grid.
    Wigner(WignerArgs),
    /// Write the readout probability curve P_g(tau).
    Readout(ReadoutArgs),
    /// Fit Q to a readout curve.
    Estimate(EstimateArgs),
    /// Run the invariant and oracle suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Config file (`key = value`) or a manifest from an earlier run.
    #[arg(short, long)]
    pub config: PathBuf,
    /// Override a config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct PrepareArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Measured qubit state: e gives the "+" cat, g the "-" cat.
    #[arg(long)]
    pub outcome: Option<String>,
    /// Write the Fock amplitudes (n,re,im) of the prepared field.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct WignerArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Dissipation time in seconds (overrides tau3_s).
    #[arg(long)]
    pub tau3: Option<f64>,
    /// unit (integral one) or scaled (times pi N^2).
    #[arg(long)]
    pub mode: Option<String>,
    /// Evaluate from the density matrix instead of the closed form.
    #[arg(long)]
    pub numeric: bool,
    /// aligned (beta on the positive x axis) or lab (protocol phases kept).
    #[arg(long)]
    pub frame: Option<String>,
    #[arg(long)]
    pub outcome: Option<String>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReadoutArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Waiting times: `start:stop:count` or a comma list, in seconds.
    #[arg(long)]
    pub taus: Option<String>,
    /// Shots per point for binomial sampling; noiseless if absent.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outcome: Option<String>,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Readout CSV (tau_s,p_g,p_e).
    #[arg(long)]
    pub data: PathBuf,
    /// Search interval `q_lo:q_hi`.
    #[arg(long)]
    pub bracket: Option<String>,
    /// Also fit the offset of Omega_- tau4.
    #[arg(long)]
    pub joint: bool,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Write the report here as well as to stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Deliberately break one quantity to confirm the suite notices.
    #[arg(long)]
    pub perturb: Option<String>,
    /// JSON summary path, or `-` for stdout.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Runs the command and returns the process exit code.
pub fn run(cli: &Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Prepare(a) => commands::prepare(a),
        Command::Wigner(a) => commands::wigner(a),
        Command::Readout(a) => commands::readout(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Validate(a) => commands::validate(a),
    }
}
