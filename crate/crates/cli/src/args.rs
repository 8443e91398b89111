//! Command-line surface.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use dlra::matrix::MatrixIntegrator;
use dlra::problems::{Experiment, DEFAULT_MAX_DENSE_ENTRIES};
use dlra::SubstepMethod;

#[derive(Debug, Parser)]
#[command(name = "dlra", version, about = "Dynamical low-rank integrator experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep ranks and step sizes; one CSV row per configuration and sample time.
    Run(RunArgs),
    /// Final-time errors of ksl and bug for each rank.
    Compare(CompareArgs),
    /// Leading singular values of the reference solution at the final time.
    Singvals(SingvalsArgs),
}

/// Inclusive rank range, written `r` or `a:b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankSpec {
    pub first: usize,
    pub last: usize,
}

impl RankSpec {
    pub fn ranks(&self) -> Vec<usize> {
        (self.first..=self.last).collect()
    }
}

impl FromStr for RankSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("invalid rank `{x}`: {e}"));
        match s.split_once(':') {
            Some((a, b)) => Ok(Self { first: parse(a)?, last: parse(b)? }),
            None => {
                let r = parse(s)?;
                Ok(Self { first: r, last: r })
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub experiment: Experiment,
    /// Grid points per mode [default: 100, 100, 128 by experiment].
    #[arg(long)]
    pub size: Option<usize>,
    /// Order of the problem; 3 selects the Tucker integrator.
    #[arg(long, default_value_t = 2)]
    pub dims: usize,
    /// Final time [default: 1, 0.1, 5 by experiment].
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Reference solution file; read when it matches, written otherwise.
    #[arg(long)]
    pub ref_cache: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_DENSE_ENTRIES)]
    pub max_dense_entries: usize,
    /// Step of the fixed-step Krylov reference (schrodinger-2d).
    #[arg(long, default_value_t = 1e-4)]
    pub ref_step: f64,
    /// Tolerance of the adaptive reference (imag-schrodinger).
    #[arg(long, default_value_t = 1e-10)]
    pub ref_tol: f64,
    #[arg(long, default_value_t = 30)]
    pub krylov_dim: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Rank or inclusive range `a:b`; used for every mode in the Tucker case.
    #[arg(long)]
    pub rank: Option<RankSpec>,
    /// Comma-separated step sizes.
    #[arg(long, value_delimiter = ',')]
    pub stepsize: Vec<f64>,
    /// Substep solver [default: exact-increment, rk4, arnoldi by experiment].
    #[arg(long)]
    pub substep: Option<SubstepMethod>,
    #[arg(long, default_value_t = 1)]
    pub inner_steps: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, default_value_t = MatrixIntegrator::Bug)]
    pub integrator: MatrixIntegrator,
    /// Number of equally spaced sample times after t = 0.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SingvalsArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Number of singular values.
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
