// SPDX-License-Identifier: Apache-2.0

//! `aaipc`: reproducible experiments on exact and AAI circuit inference.

mod commands;
mod io;
mod source;

use clap::{Args, Parser, Subcommand, ValueEnum};
use source::{parse_fractions, parse_list, CorrectionSource, PlanSource};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "aaipc",
    version,
    about = "Exact and AAI arithmetic for probabilistic circuit inference"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check smoothness, decomposability and determinism.
    Validate {
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Write a random smooth, decomposable circuit as JSON.
    Generate(GenerateArgs),
    /// Draw complete assignments from the exact model as CSV.
    Sample {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form and Monte-Carlo divergence of the all-AAI circuit (JSON).
    Analyze(AnalyzeArgs),
    /// MAP failure probability for two competing branches (CSV).
    Failure(FailureArgs),
    /// Greedy replacement ranking and the resulting plan (JSON).
    Plan(PlanArgs),
    /// Per-instance MAR or MAP results for one configuration (CSV).
    Eval(EvalArgs),
    /// Error and energy over a grid of resolutions and plans (CSV).
    Sweep(SweepArgs),
    /// Error/energy trade-off of greedy and random replacement (CSV).
    Tradeoff(TradeoffArgs),
    /// Estimate the log-error correction term (JSON).
    Calibrate(CalibrateArgs),
    /// Multiplier power over a grid of resolutions (CSV).
    Energy(EnergyArgs),
    /// Bits needed for MAR at a tolerance (JSON).
    Resolution(ResolutionArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Query {
    Mar,
    Map,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    /// Alternating sum/product layers with random scope splits.
    Tree,
    /// Deterministic circuit built by conditioning on one variable at a time.
    Deterministic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlanCriterion {
    Det,
    Dc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Width {
    /// `E + M` bits.
    EPlusM,
    /// `E + M + 1` bits.
    WithSign,
}

/// Resolution shared by the single-configuration commands.
#[derive(Args, Debug, Clone)]
pub struct Resolution {
    #[arg(long, default_value_t = 11)]
    pub exp_bits: u32,
    #[arg(long, default_value_t = 52)]
    pub man_bits: u32,
    #[arg(long, default_value = "nearest-even")]
    pub rounding: aaipc::Rounding,
}

/// Where instances come from: a CSV file or samples of the exact model.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV with a header of variable ids; -1 marks an unobserved variable.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Number of instances sampled from the exact model when `--data` is absent.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Chance that a sampled variable is hidden for MAP queries.
    #[arg(long, default_value_t = 0.5)]
    pub hide: f64,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "tree")]
    pub kind: GeneratorKind,
    #[arg(long)]
    pub vars: usize,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 3)]
    pub fanout: usize,
    /// Chance of splitting the remaining scope (deterministic kind).
    #[arg(long, default_value_t = 0.3)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub res: Resolution,
    /// Monte-Carlo samples for the non-deterministic surrogate; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also enumerate the exact divergence (at most 2^20 joint states).
    #[arg(long)]
    pub kl: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FailureArgs {
    /// Exponent gaps, e.g. `0..4`.
    #[arg(long, default_value = "0..4", value_parser = parse_list)]
    pub delta_e: std::vec::Vec<u32>,
    /// Multiplications per branch, e.g. `1,2,4`.
    #[arg(long, default_value = "1", value_parser = parse_list)]
    pub mults: std::vec::Vec<u32>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub res: Resolution,
    #[arg(long, value_enum, default_value = "det")]
    pub criterion: PlanCriterion,
    /// Share of weight sites switched to AAI.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    /// Monte-Carlo samples for the `dc` criterion.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long, value_enum, default_value = "mar")]
    pub query: Query,
    #[command(flatten)]
    pub res: Resolution,
    #[arg(long, default_value = "all-aai")]
    pub plan: PlanSource,
    #[arg(long, default_value = "none")]
    pub correction: CorrectionSource,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    /// Queries to evaluate, e.g. `mar,map`.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "mar,map")]
    pub query: Vec<Query>,
    #[arg(long, default_value = "8", value_parser = parse_list)]
    pub exp_bits: std::vec::Vec<u32>,
    #[arg(long, default_value = "2..23", value_parser = parse_list)]
    pub man_bits: std::vec::Vec<u32>,
    /// Uniform multiplier modes, shorthand for the all-exact and all-aai
    /// plans. Defaults to `exact,aai` when no `--plan` is given.
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    pub mode: Vec<aaipc::MulMode>,
    /// Extra plans evaluated in every cell, e.g. `greedy:0.5,random:0.5:1`.
    #[arg(long, value_delimiter = ',')]
    pub plan: Vec<PlanSource>,
    #[arg(long, default_value = "none")]
    pub correction: CorrectionSource,
    #[arg(long, default_value = "nearest-even")]
    pub rounding: aaipc::Rounding,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TradeoffArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub res: Resolution,
    #[arg(long, default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1", value_parser = parse_fractions)]
    pub fraction: std::vec::Vec<f64>,
    /// Random plans per fraction, seeded `seed, seed+1, ...`.
    #[arg(long, default_value_t = aaipc::planner::RANDOM_SEEDS)]
    pub random_plans: usize,
    /// Also rank by the Monte-Carlo criterion with this many samples.
    #[arg(long, default_value_t = 0)]
    pub dc_samples: usize,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub circuit: PathBuf,
    #[command(flatten)]
    pub res: Resolution,
    #[arg(long, default_value = "all-aai")]
    pub plan: PlanSource,
    /// `mc:N:SEED` or `closed-form`.
    #[arg(long, default_value = "mc:5000:0")]
    pub correction: CorrectionSource,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    #[arg(long, default_value = "8..11", value_parser = parse_list)]
    pub exp_bits: std::vec::Vec<u32>,
    #[arg(long, default_value = "2..21", value_parser = parse_list)]
    pub man_bits: std::vec::Vec<u32>,
    /// One row per (E, M, mode) instead of one row per (E, M).
    #[arg(long)]
    pub long: bool,
    #[arg(long, value_enum, default_value = "e-plus-m")]
    pub aai_width: Width,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ResolutionArgs {
    /// Take the minimum positive value from this circuit.
    #[arg(long, conflicts_with = "mv", required_unless_present = "mv")]
    pub circuit: Option<PathBuf>,
    /// Minimum positive value, given directly.
    #[arg(long)]
    pub mv: Option<f64>,
    /// Relative tolerance `10^-P`.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<aaipc::MulMode, String> {
    match s {
        "exact" => Ok(aaipc::MulMode::Exact),
        "aai" => Ok(aaipc::MulMode::Aai),
        _ => Err(format!("unknown mode `{s}`; expected exact or aai")),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli.command) {
        eprintln!("aaipc: {e}");
        std::process::exit(e.exit_code());
    }
}
