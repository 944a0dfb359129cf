//! Command-line surface. Long-form flags only; exit codes are 0 when every
//! check passes, 2 when a check fails, and 1 for usage or data errors.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "dynkin",
    version,
    about = "Solve, verify and probe two-player stopping games on finite event trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Compute an equilibrium by alternating exact best responses.
    Solve(SolveArgs),
    /// Re-check a solve report: Nash certificate plus trace invariants.
    Verify(VerifyArgs),
    /// Run the evaluation-operator conformance harness.
    Axioms(AxiomsArgs),
    /// Generate a seeded random instance file.
    Gen(GenArgs),
    /// Summarize an instance file.
    Inspect(InspectArgs),
}

#[derive(Args)]
pub struct SolveArgs {
    /// Instance file to solve.
    #[arg(long)]
    pub instance: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Solve report to re-check.
    #[arg(long)]
    pub equilibrium: PathBuf,
    /// Instance file that must match the report's embedded instance.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Write the verification report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct AxiomsArgs {
    /// Instance file providing the tree and exercise schedule.
    #[arg(long)]
    pub instance: PathBuf,
    /// Operator under test; defaults to both agents' operators.
    #[arg(long, value_enum, default_value_t = OperatorChoice::Both)]
    pub operator: OperatorChoice,
    /// Risk parameter for `--operator entropic`.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Randomized trials per check.
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    /// Seed for the trial generator.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenArgs {
    /// Seed for the instance generator.
    #[arg(long)]
    pub seed: u64,
    /// Stages after the root (at most 8).
    #[arg(long)]
    pub depth: u32,
    /// Children per interior node (at most 4).
    #[arg(long)]
    pub branching: u32,
    /// Agent 1 operator kind.
    #[arg(long, value_enum, default_value_t = KindChoice::Linear)]
    pub op1: KindChoice,
    /// Agent 2 operator kind.
    #[arg(long, value_enum, default_value_t = KindChoice::Linear)]
    pub op2: KindChoice,
    /// Risk parameter when --op1 is entropic.
    #[arg(long)]
    pub gamma1: Option<f64>,
    /// Risk parameter when --op2 is entropic.
    #[arg(long)]
    pub gamma2: Option<f64>,
    /// Write the instance here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct InspectArgs {
    /// Instance file to summarize.
    #[arg(long)]
    pub instance: PathBuf,
}

/// Concrete operator kinds the generator can emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindChoice {
    Linear,
    Entropic,
    MultipriorInf,
    MultipriorSup,
}

/// Operator selection for the conformance harness: a concrete kind, or one
/// of the instance's own operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OperatorChoice {
    Linear,
    Entropic,
    MultipriorInf,
    MultipriorSup,
    Agent1,
    Agent2,
    Both,
}
