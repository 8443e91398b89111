//! Turns parsed flags into a validated problem setup.

use std::fmt;
use std::path::PathBuf;

use dlra::matrix::MatrixIntegrator;
use dlra::problems::{
    problem_given_matrix, problem_imag_schrodinger, problem_schrodinger_2d, Experiment, Problem, ReferenceMethod,
};
use dlra::{Complex64, Error, SubstepConfig, SubstepMethod};

use crate::args::{ProblemArgs, SweepArgs};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an unsupported combination.
    Usage(String),
    /// Non-finite factors or a breakdown inside an integrator.
    Numerical(String),
    /// I/O and malformed files.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Singular(_) => CliError::Numerical(e.to_string()),
            Error::Io(_) | Error::Format(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Problem-level settings with experiment defaults filled in.
#[derive(Clone, Debug)]
pub struct Setup {
    pub experiment: Experiment,
    pub n: usize,
    pub d: usize,
    pub tmax: f64,
    pub seed: u64,
    pub ref_cache: Option<PathBuf>,
    pub max_dense_entries: usize,
    pub reference: ReferenceMethod,
    pub krylov_dim: usize,
}

impl Setup {
    pub fn from_args(a: &ProblemArgs) -> Result<Self, CliError> {
        let (n_default, t_default) = match a.experiment {
            Experiment::GivenMatrix => (100, 1.0),
            Experiment::ImagSchrodinger => (100, 0.1),
            Experiment::Schrodinger2d => (128, 5.0),
        };
        let n = a.size.unwrap_or(n_default);
        let tmax = a.tmax.unwrap_or(t_default);
        if n == 0 {
            return Err(usage("--size must be positive"));
        }
        if !(tmax.is_finite() && tmax > 0.0) {
            return Err(usage(format!("--tmax must be positive, got {tmax}")));
        }
        match (a.experiment, a.dims) {
            (Experiment::ImagSchrodinger, 2 | 3) | (_, 2) => {}
            (e, d) => return Err(usage(format!("{e} supports --dims 2 only, got {d}"))),
        }
        if a.krylov_dim == 0 {
            return Err(usage("--krylov-dim must be positive"));
        }
        let reference = match a.experiment {
            Experiment::GivenMatrix => ReferenceMethod::Explicit,
            Experiment::ImagSchrodinger => {
                if !(a.ref_tol > 0.0) {
                    return Err(usage("--ref-tol must be positive"));
                }
                ReferenceMethod::Rk45Adaptive { tol: a.ref_tol }
            }
            Experiment::Schrodinger2d => {
                if !(a.ref_step.is_finite() && a.ref_step > 0.0) {
                    return Err(usage("--ref-step must be positive"));
                }
                ReferenceMethod::ArnoldiFixed { h: a.ref_step, krylov_dim: a.krylov_dim }
            }
        };
        Ok(Self {
            experiment: a.experiment,
            n,
            d: a.dims,
            tmax,
            seed: a.seed,
            ref_cache: a.ref_cache.clone(),
            max_dense_entries: a.max_dense_entries,
            reference,
            krylov_dim: a.krylov_dim,
        })
    }

    pub fn build(&self) -> Result<AnyProblem, CliError> {
        Ok(match self.experiment {
            Experiment::GivenMatrix => AnyProblem::Real(problem_given_matrix(self.n, self.seed)?),
            Experiment::ImagSchrodinger => AnyProblem::Real(problem_imag_schrodinger(self.n, self.d, self.seed)?),
            Experiment::Schrodinger2d => AnyProblem::Complex(problem_schrodinger_2d(self.n)?),
        })
    }
}

/// The benchmark problems come in a real and a complex flavour.
pub enum AnyProblem {
    Real(Problem<f64>),
    Complex(Problem<Complex64>),
}

/// Step sizes, ranks and substep solver of a sweep.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub ranks: Vec<usize>,
    pub steps: Vec<f64>,
    pub substep: SubstepConfig,
}

impl Sweep {
    pub fn from_args(a: &SweepArgs, setup: &Setup, integrator: MatrixIntegrator) -> Result<Self, CliError> {
        let ranks = a.rank.map(|r| r.ranks()).unwrap_or_default();
        if ranks.is_empty() {
            return Err(usage("empty rank sweep (pass --rank r or --rank a:b with a ≤ b)"));
        }
        if ranks.contains(&0) {
            return Err(usage("ranks must be at least 1"));
        }
        if let Some(&r) = ranks.iter().find(|&&r| r > setup.n) {
            return Err(usage(format!("rank {r} exceeds the grid size {}", setup.n)));
        }
        if a.stepsize.is_empty() {
            return Err(usage("empty step-size sweep (pass --stepsize h1,h2,...)"));
        }
        if let Some(h) = a.stepsize.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(usage(format!("step sizes must be positive, got {h}")));
        }
        let method = a.substep.unwrap_or(match setup.experiment {
            Experiment::GivenMatrix => SubstepMethod::ExactIncrement,
            Experiment::ImagSchrodinger => SubstepMethod::Rk4,
            Experiment::Schrodinger2d => SubstepMethod::Arnoldi,
        });
        let explicit = setup.experiment == Experiment::GivenMatrix;
        if integrator != MatrixIntegrator::Rk4Factors {
            if method == SubstepMethod::ExactIncrement && !explicit {
                return Err(usage(format!("exact-increment substeps need an explicit increment, {} has none", setup.experiment)));
            }
            if method == SubstepMethod::Arnoldi && explicit {
                return Err(usage("arnoldi substeps need a linear autonomous problem; given-matrix is neither"));
            }
        }
        let substep = SubstepConfig::new(method).with_inner_steps(a.inner_steps).with_krylov_dim(setup.krylov_dim);
        substep.validate()?;
        Ok(Self { ranks, steps: a.stepsize.clone(), substep })
    }
}
