//! Benchmark problems with exact or reference solutions.
//!
//! * [`problem_given_matrix`]: `A(t) = e^{tW₁} e^t D e^{tW₂ᵀ}` with graded
//!   singular values `e^t 2^{−j}`; the right-hand side does not depend on `Y`.
//! * [`problem_imag_schrodinger`]: a discrete Schrödinger equation in
//!   imaginary time with torsional potential, as a matrix (`d = 2`) or
//!   tensor (`d = 3`) problem.
//! * [`problem_schrodinger_2d`]: a complex Schrödinger equation with a
//!   harmonic potential on a Fourier collocation grid.

mod given_matrix;
mod reference;
mod schrodinger;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lowrank::{LowRankFormat, LowRankMatrix, TuckerTensor};
use crate::ode::OdeRhs;
use crate::qr::qr_thin;
use crate::scalar::{real, Real, Scalar};
use crate::svd::svd_truncate;
use crate::tensor::{matricize, multi_mode_product, DenseArray};

pub use given_matrix::{expm_skew, problem_given_matrix, random_skew, GivenMatrix};
pub use reference::{compute_reference, ReferenceMethod, ReferenceSolution, DEFAULT_MAX_DENSE_ENTRIES};
pub use schrodinger::{
    fourier_second_derivative, problem_imag_schrodinger, problem_schrodinger_2d, schrodinger_grid, ImagSchrodinger,
    Schrodinger2d, DOMAIN_HALF_WIDTH,
};

/// Benchmark identifiers, as used on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    GivenMatrix,
    ImagSchrodinger,
    Schrodinger2d,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Self::GivenMatrix, Self::ImagSchrodinger, Self::Schrodinger2d];
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GivenMatrix => "given-matrix",
            Self::ImagSchrodinger => "imag-schrodinger",
            Self::Schrodinger2d => "schrodinger-2d",
        })
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Structural facts about a problem that select admissible solvers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ProblemFlags {
    pub linear: bool,
    pub autonomous: bool,
    /// `F(Y) = −iHY` with Hermitian `H`: the exact flow conserves the norm.
    pub hermitian_generator: bool,
    /// `F` does not depend on `Y` and exposes `A(t1) − A(t0)`.
    pub explicit_increment: bool,
}

/// Exact solution `t ↦ A(t)`.
pub type SolutionFn<T> = Arc<dyn Fn(f64) -> DenseArray<T> + Send + Sync>;

/// `Ȧ = F(t, A)`, `A(0) = initial`.
#[derive(Clone)]
pub struct Problem<T: Scalar> {
    pub experiment: Experiment,
    pub dims: Vec<usize>,
    pub rhs: Arc<dyn OdeRhs<T>>,
    pub initial: DenseArray<T>,
    pub explicit_solution: Option<SolutionFn<T>>,
    pub flags: ProblemFlags,
    pub seed: u64,
}

impl<T: Scalar> fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("experiment", &self.experiment)
            .field("dims", &self.dims)
            .field("flags", &self.flags)
            .field("seed", &self.seed)
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> Problem<T> {
    /// Best rank-`r` approximation of the initial value (`d = 2` only).
    ///
    /// When `r` exceeds the numerical rank of the data, the surplus singular
    /// vectors of the SVD are arbitrary; they are replaced by a seeded random
    /// orthonormal complement. See [`leading_basis`].
    pub fn initial_lowrank(&self, r: usize) -> Result<LowRankMatrix<T>> {
        if self.dims.len() != 2 {
            return Err(Error::Dimension(format!("order-{} problem is not a matrix problem", self.dims.len())));
        }
        let a = self.initial.matrix_view().into_owned();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let u = leading_basis(&a, r, &mut rng)?;
        let v = leading_basis(&a.adjoint(), r, &mut rng)?;
        let s = u.adjoint() * &a * &v;
        LowRankMatrix::new(u, s, v)
    }

    /// HOSVD truncation of the initial value, with the same treatment of
    /// surplus directions as [`Problem::initial_lowrank`].
    pub fn initial_tucker(&self, ranks: &[usize]) -> Result<TuckerTensor<T>> {
        if ranks.len() != self.initial.order() {
            return Err(Error::Dimension(format!(
                "{} ranks for an order-{} tensor",
                ranks.len(),
                self.initial.order()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let bases = ranks
            .iter()
            .enumerate()
            .map(|(i, &r)| leading_basis(&matricize(&self.initial, i)?, r, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let adj: Vec<DMatrix<T>> = bases.iter().map(|u| u.adjoint()).collect();
        let mats: Vec<Option<&DMatrix<T>>> = adj.iter().map(Some).collect();
        TuckerTensor::new(multi_mode_product(&self.initial, &mats)?, bases)
    }
}

/// The `r` leading left singular vectors of `a`, except that vectors whose
/// singular value is below the numerical-rank tolerance `max(m, n)·ε·σ₁` are
/// replaced by random orthonormal directions.
///
/// Below that tolerance the SVD's choice is determined by rounding noise and
/// can be badly aligned with the dynamics (for a rank-one Gaussian it picks
/// grid-point spikes where the solution vanishes), which starves the basis
/// update of the unconventional integrator.
pub fn leading_basis<T: Scalar, R: rand::Rng + ?Sized>(a: &DMatrix<T>, r: usize, rng: &mut R) -> Result<DMatrix<T>> {
    let max = a.nrows().min(a.ncols());
    if r == 0 || r > max {
        return Err(Error::Rank { rank: r, max });
    }
    let t = svd_truncate(a, r)?;
    let tol = t.sigma[0] * real::<T>(a.nrows().max(a.ncols()) as f64 * f64::EPSILON);
    let keep = t.sigma.iter().take_while(|&&s| s > tol).count();
    if keep == r {
        return Ok(t.u);
    }
    let mut g = DMatrix::from_fn(a.nrows(), r, |_, _| T::sample_standard_normal(rng));
    g.columns_mut(0, keep).copy_from(&t.u.columns(0, keep));
    Ok(qr_thin(&g)?.q)
}

/// `‖reconstruct(Y) − reference‖_F`.
pub fn error_frobenius<T: Scalar, Y: LowRankFormat<T>>(y: &Y, reference: &DenseArray<T>) -> Result<Real<T>> {
    if y.ambient_dims() != reference.dims() {
        return Err(Error::Dimension(format!(
            "approximation {:?} vs reference {:?}",
            y.ambient_dims(),
            reference.dims()
        )));
    }
    Ok(y.to_dense().sub(reference).frobenius_norm())
}
