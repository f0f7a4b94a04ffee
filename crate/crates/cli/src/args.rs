use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cgist", version, about = "Sparse least squares under linear constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// min ‖Kx − y‖² + 2λH(Ax) subject to Bx = b
    Solve(SolveArgs),
    /// min ‖x‖₁ subject to Bx = b, or with --radius min ‖Bx − b‖² over ‖x‖₁ ≤ R
    Bp(BpArgs),
    /// min ‖Kx − y‖² subject to ‖x‖₁ ≤ R (and Bx = b when given)
    L1c(L1cArgs),
    /// Run the synthetic MEG reconstruction cases
    Meg(MegArgs),
    /// Apply a thresholding or projection operator to a vector
    Prox(ProxArgs),
    /// Estimate operator norms and check the step-size conditions
    Normcheck(NormcheckArgs),
}

/// Penalty selector: `l1` or `joint:m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyArg {
    L1,
    Joint(usize),
}

pub fn parse_penalty(s: &str) -> Result<PenaltyArg, String> {
    if s == "l1" {
        return Ok(PenaltyArg::L1);
    }
    if let Some(m) = s.strip_prefix("joint:") {
        return match m.parse::<usize>() {
            Ok(m) if m >= 1 => Ok(PenaltyArg::Joint(m)),
            _ => Err(format!("group size in '{s}' must be a positive integer")),
        };
    }
    Err(format!("unknown penalty '{s}', expected l1 or joint:m"))
}

#[derive(Args, Debug, Clone)]
pub struct SolverFlags {
    /// Penalty weight
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Multiplier step ratio, must exceed 1/2
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long)]
    pub tau3: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub rel_tol: f64,
    /// l1 or joint:m (groups of m consecutive entries)
    #[arg(long, default_value = "l1", value_parser = parse_penalty)]
    pub penalty: PenaltyArg,
    /// Seed of the power iterations used for step sizes
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub trace_every: usize,
    /// Use the given steps without checking them against norm estimates
    #[arg(long)]
    pub unchecked_steps: bool,
    /// Directory for report.json and trace.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgorithmArg {
    /// Chosen from the presence of A and B
    Auto,
    Fista,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long = "k-file")]
    pub k: PathBuf,
    #[arg(long = "y-file")]
    pub y: PathBuf,
    /// Penalty map A (identity when omitted)
    #[arg(long = "a-file")]
    pub a: Option<PathBuf>,
    /// Constraint matrix B
    #[arg(long = "b-file")]
    pub b: Option<PathBuf>,
    /// Constraint right-hand side b
    #[arg(long = "rhs-file")]
    pub rhs: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Auto)]
    pub algorithm: AlgorithmArg,
    #[command(flatten)]
    pub flags: SolverFlags,
}

#[derive(Args, Debug)]
pub struct BpArgs {
    #[arg(long = "b-file")]
    pub b: PathBuf,
    #[arg(long = "rhs-file")]
    pub rhs: PathBuf,
    /// Solve the ℓ1-ball constrained fit of radius R instead
    #[arg(long)]
    pub radius: Option<f64>,
    #[command(flatten)]
    pub flags: SolverFlags,
}

#[derive(Args, Debug)]
pub struct L1cArgs {
    #[arg(long = "k-file")]
    pub k: PathBuf,
    #[arg(long = "y-file")]
    pub y: PathBuf,
    #[arg(long)]
    pub radius: f64,
    #[arg(long = "b-file")]
    pub b: Option<PathBuf>,
    #[arg(long = "rhs-file")]
    pub rhs: Option<PathBuf>,
    #[command(flatten)]
    pub flags: SolverFlags,
}

#[derive(Args, Debug)]
pub struct MegArgs {
    /// Experiment configuration (JSON); defaults apply to missing keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for reports, traces and snapshots
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the noise seed of the configuration
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the trace sampling interval of the configuration
    #[arg(long)]
    pub trace_every: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProxOp {
    /// Soft thresholding S_λ
    Soft,
    /// Clamp to [−λ, λ]
    Linf,
    /// Projection onto the ℓ1 ball of radius R
    L1ball,
    /// Joint thresholding of groups of m entries
    Joint,
}

#[derive(Args, Debug)]
pub struct ProxArgs {
    #[arg(value_enum)]
    pub op: ProxOp,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Group size for `joint`; rows of m consecutive entries
    #[arg(long)]
    pub group: Option<usize>,
    /// Comma-separated values
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "input")]
    pub values: Option<Vec<f64>>,
    /// Vector or matrix in the dense text format (matrix rows are groups)
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NormcheckArgs {
    #[arg(long = "k-file")]
    pub k: PathBuf,
    #[arg(long = "a-file")]
    pub a: Option<PathBuf>,
    #[arg(long = "b-file")]
    pub b: Option<PathBuf>,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long)]
    pub tau3: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
