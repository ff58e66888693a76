//! Command-line surface.
//!
//! Exit codes: 0 on success, 2 when the protocol (or key establishment)
//! aborts, 1 on usage or configuration errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "sqpc",
    version,
    about = "Simulator and detection-statistics harness for a measure-resend \
             semi-quantum private comparison protocol",
    after_help = attack_help()
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn attack_help() -> String {
    format!("Attacks:\n{}", sqpc::adversary::attack_usage())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full comparison protocol once and report the verdict
    Run(RunArgs),
    /// Monte Carlo detection sweep checked against the exact oracle
    AttackSweep(AttackSweepArgs),
    /// Exact per-case detection probabilities for an attack
    Oracle(OracleArgs),
    /// Probe-independence sweep over the entangle-measure family
    Theorem1(Theorem1Args),
    /// Run the key-establishment subprotocol alone
    Sqkd(SqkdArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Number of one-bit secret groups
    #[arg(long = "L")]
    pub l: usize,
    /// Round-budget slack: N = ceil(8 L (1 + delta))
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    /// Bob's secret (must fit in L bits)
    #[arg(long)]
    pub x: u64,
    /// Charlie's secret (must fit in L bits)
    #[arg(long)]
    pub y: u64,
    /// Attack name, e.g. `measure-resend-z` or `intercept-resend:+0`
    #[arg(long, default_value = "none")]
    pub attack: String,
    /// `sqkd` or `fixed:<hex>` (hex value of the L-bit key)
    #[arg(long = "key-source", default_value = "sqkd")]
    pub key_source: String,
    /// Abort threshold applied to all four error rates
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long)]
    pub seed: u64,
    /// Write the JSON report here as well as to stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a flat per-case CSV here
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackSweepArgs {
    #[arg(long)]
    pub attack: String,
    /// Number of Monte Carlo rounds
    #[arg(long)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
    /// Worker threads (0 = rayon default); results are identical either way
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub attack: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Theorem1Args {
    /// Angles per axis; the sweep visits grid^2 (theta_b, theta_c) points
    #[arg(long)]
    pub grid: usize,
    #[arg(long = "probe-qubits", default_value_t = 2)]
    pub probe_qubits: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SqkdArgs {
    /// Key length to establish
    #[arg(long = "L")]
    pub l: usize,
    #[arg(long = "check-fraction", default_value_t = 0.25)]
    pub check_fraction: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
