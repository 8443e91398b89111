//! One-step maps and the time-stepping driver for rank-`r` matrices.
//!
//! Every integrator here advances `Y0 = U0 S0 V0ᴴ` by one step of a matrix
//! ODE `Ȧ = F(t, A)` while keeping the rank fixed:
//!
//! * [`bug_step`]: basis update & Galerkin. The K- and L-steps run
//!   concurrently from the same frozen data, then a Galerkin step for `S` is
//!   taken forward in time in the new bases.
//! * [`bug_step_modified`]: K, L and S all solved in parallel in the old
//!   bases, then mapped with `S1 = M⁻ᴴ S(t1) N⁻¹`. Needs well-conditioned
//!   `M`, `N`.
//! * [`ksl_step`]: the projector-splitting integrator (K, backward S, L).
//! * [`rk4_factors_step`]: classical RK4 on the coupled factor ODEs, which
//!   contain `S⁻¹` and therefore break down for small singular values.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::lowrank::{tangent_defect, LowRankMatrix};
use crate::ode::{solve_substep, OdeRhs, ReducedRhs, SubstepConfig};
use crate::qr::qr_thin;
use crate::scalar::{real, real_to_f64, Real, Scalar};
use crate::svd::singular_values;
use crate::tensor::{matrix_norm, DenseArray};

/// Largest `‖M⁻¹‖`, `‖N⁻¹‖` (hence condition number) accepted by [`bug_step_modified`].
pub const MODIFIED_COND_LIMIT: f64 = 1e12;

/// Result of one matrix integrator step.
#[derive(Clone, Debug)]
pub struct MatrixStepReport<T: Scalar> {
    pub y1: LowRankMatrix<T>,
    /// `U1ᴴ U0`.
    pub m: DMatrix<T>,
    /// `V1ᴴ V0`.
    pub n: DMatrix<T>,
    /// `‖(I − P(Y1)) F(t1, Y1)‖`, filled by [`MatrixStepReport::with_tangent_defect`].
    pub tangent_defect: Option<Real<T>>,
    pub wall_time: Duration,
}

impl<T: Scalar> MatrixStepReport<T> {
    fn new(y0: &LowRankMatrix<T>, y1: LowRankMatrix<T>, start: Instant) -> Self {
        let m = y1.u.adjoint() * &y0.u;
        let n = y1.v.adjoint() * &y0.v;
        Self { y1, m, n, tangent_defect: None, wall_time: start.elapsed() }
    }

    /// Samples the non-tangential part of `F` at the new state.
    pub fn with_tangent_defect(mut self, f: &dyn OdeRhs<T>, t1: Real<T>) -> Result<Self> {
        let z = f.eval(t1, &DenseArray::from_matrix(self.y1.reconstruct())).into_matrix();
        self.tangent_defect = Some(tangent_defect(&self.y1, &z)?);
        Ok(self)
    }
}

/// The available matrix integrators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MatrixIntegrator {
    Bug,
    BugModified,
    Ksl,
    Rk4Factors,
}

impl MatrixIntegrator {
    pub const ALL: [MatrixIntegrator; 4] = [Self::Bug, Self::BugModified, Self::Ksl, Self::Rk4Factors];

    pub fn step<T: Scalar>(
        self,
        f: &dyn OdeRhs<T>,
        y0: &LowRankMatrix<T>,
        t0: Real<T>,
        h: Real<T>,
        cfg: &SubstepConfig,
    ) -> Result<MatrixStepReport<T>> {
        match self {
            Self::Bug => bug_step(f, y0, t0, h, cfg),
            Self::BugModified => bug_step_modified(f, y0, t0, h, cfg),
            Self::Ksl => ksl_step(f, y0, t0, h, cfg),
            Self::Rk4Factors => rk4_factors_step(f, y0, t0, h),
        }
    }
}

impl fmt::Display for MatrixIntegrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bug => "bug",
            Self::BugModified => "bug-modified",
            Self::Ksl => "ksl",
            Self::Rk4Factors => "rk4-factors",
        })
    }
}

impl FromStr for MatrixIntegrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|i| i.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown integrator `{s}`")))
    }
}

fn arr<T: Scalar>(m: DMatrix<T>) -> DenseArray<T> {
    DenseArray::from_matrix(m)
}

fn view<T: Scalar>(a: &DenseArray<T>) -> DMatrix<T> {
    a.matrix_view().into_owned()
}

/// `K̇ = F(t, K V0ᴴ) V0` from `k0` over `[t0, t1]`.
fn k_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    v0: &DMatrix<T>,
    k0: DMatrix<T>,
    t0: Real<T>,
    t1: Real<T>,
    cfg: &SubstepConfig,
) -> Result<DMatrix<T>> {
    let rhs = ReducedRhs::new(f, |k: &DenseArray<T>| arr(view(k) * v0.adjoint()), |fy: DenseArray<T>| {
        arr(fy.matrix_view() * v0)
    });
    Ok(solve_substep(&rhs, t0, t1, &arr(k0), cfg)?.into_matrix())
}

/// `L̇ = F(t, U0 Lᴴ)ᴴ U0` from `l0` over `[t0, t1]`.
fn l_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    u0: &DMatrix<T>,
    l0: DMatrix<T>,
    t0: Real<T>,
    t1: Real<T>,
    cfg: &SubstepConfig,
) -> Result<DMatrix<T>> {
    let rhs = ReducedRhs::new(f, |l: &DenseArray<T>| arr(u0 * view(l).adjoint()), |fy: DenseArray<T>| {
        arr(fy.matrix_view().ad_mul(u0))
    });
    Ok(solve_substep(&rhs, t0, t1, &arr(l0), cfg)?.into_matrix())
}

/// `Ṡ = ± Uᴴ F(t, U S Vᴴ) V` from `s0` over `[t0, t1]`.
fn s_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    u: &DMatrix<T>,
    v: &DMatrix<T>,
    s0: DMatrix<T>,
    backward: bool,
    t0: Real<T>,
    t1: Real<T>,
    cfg: &SubstepConfig,
) -> Result<DMatrix<T>> {
    let sign = if backward { -T::one() } else { T::one() };
    let rhs = ReducedRhs::new(f, |s: &DenseArray<T>| arr(u * view(s) * v.adjoint()), |fy: DenseArray<T>| {
        arr(u.ad_mul(&fy.matrix_view()) * v * sign)
    });
    Ok(solve_substep(&rhs, t0, t1, &arr(s0), cfg)?.into_matrix())
}

fn check_step<T: Scalar>(y0: &LowRankMatrix<T>, h: Real<T>) -> Result<()> {
    if !(h > Real::<T>::zero()) {
        return Err(Error::Config(format!("step size must be positive, got {}", real_to_f64::<T>(h))));
    }
    if y0.rank() > y0.nrows() || y0.rank() > y0.ncols() {
        return Err(Error::Rank { rank: y0.rank(), max: y0.nrows().min(y0.ncols()) });
    }
    Ok(())
}

/// One step of the basis-update & Galerkin integrator.
pub fn bug_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    y0: &LowRankMatrix<T>,
    t0: Real<T>,
    h: Real<T>,
    cfg: &SubstepConfig,
) -> Result<MatrixStepReport<T>> {
    check_step(y0, h)?;
    let start = Instant::now();
    let t1 = t0 + h;
    let LowRankMatrix { u: u0, s: s0, v: v0 } = y0;

    let (u1, v1) = rayon::join(
        || -> Result<DMatrix<T>> {
            let k1 = k_step(f, v0, u0 * s0, t0, t1, cfg)?;
            Ok(qr_thin(&k1)?.q)
        },
        || -> Result<DMatrix<T>> {
            let l1 = l_step(f, u0, v0 * s0.adjoint(), t0, t1, cfg)?;
            Ok(qr_thin(&l1)?.q)
        },
    );
    let (u1, v1) = (u1?, v1?);
    let m = u1.ad_mul(u0);
    let n = v1.ad_mul(v0);

    let s_init = &m * s0 * n.adjoint();
    let s1 = s_step(f, &u1, &v1, s_init, false, t0, t1, cfg)?;
    let y1 = LowRankMatrix::new(u1, s1, v1)?;
    Ok(MatrixStepReport::new(y0, y1, start))
}

/// `‖A⁻¹‖₂`, i.e. the reciprocal smallest singular value (`inf` if singular).
///
/// For the Gramians `M`, `N` (norm at most one) this bounds their condition
/// number from above.
pub fn inverse_norm<T: Scalar>(a: &DMatrix<T>) -> f64 {
    match singular_values(a).last() {
        Some(&lo) if !lo.is_zero() => 1.0 / real_to_f64::<T>(lo),
        Some(_) => f64::INFINITY,
        None => 0.0,
    }
}

/// One step of the fully parallel BUG variant with `S1 = M⁻ᴴ S(t1) N⁻¹`.
///
/// Fails with [`Error::Singular`] when `‖M⁻¹‖` or `‖N⁻¹‖` exceeds
/// [`MODIFIED_COND_LIMIT`], which happens once the step size is not small
/// compared to the smallest retained singular value.
pub fn bug_step_modified<T: Scalar>(
    f: &dyn OdeRhs<T>,
    y0: &LowRankMatrix<T>,
    t0: Real<T>,
    h: Real<T>,
    cfg: &SubstepConfig,
) -> Result<MatrixStepReport<T>> {
    check_step(y0, h)?;
    let start = Instant::now();
    let t1 = t0 + h;
    let LowRankMatrix { u: u0, s: s0, v: v0 } = y0;

    let ((u1, v1), st1) = rayon::join(
        || {
            rayon::join(
                || -> Result<DMatrix<T>> { Ok(qr_thin(&k_step(f, v0, u0 * s0, t0, t1, cfg)?)?.q) },
                || -> Result<DMatrix<T>> { Ok(qr_thin(&l_step(f, u0, v0 * s0.adjoint(), t0, t1, cfg)?)?.q) },
            )
        },
        || s_step(f, u0, v0, s0.clone(), false, t0, t1, cfg),
    );
    let (u1, v1, st1) = (u1?, v1?, st1?);
    let m = u1.ad_mul(u0);
    let n = v1.ad_mul(v0);
    for g in [&m, &n] {
        let c = inverse_norm(g);
        if !(c <= MODIFIED_COND_LIMIT) {
            return Err(Error::Singular(c));
        }
    }
    // S1 = M⁻ᴴ S(t1) N⁻¹: solve Mᴴ X = S(t1), then Nᴴ S1ᴴ = Xᴴ.
    let x = m.adjoint().lu().solve(&st1).ok_or(Error::Singular(f64::INFINITY))?;
    let s1 = n.adjoint().lu().solve(&x.adjoint()).ok_or(Error::Singular(f64::INFINITY))?.adjoint();
    let y1 = LowRankMatrix::new(u1, s1, v1)?;
    Ok(MatrixStepReport::new(y0, y1, start))
}

/// One step of the projector-splitting integrator.
pub fn ksl_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    y0: &LowRankMatrix<T>,
    t0: Real<T>,
    h: Real<T>,
    cfg: &SubstepConfig,
) -> Result<MatrixStepReport<T>> {
    check_step(y0, h)?;
    let start = Instant::now();
    let t1 = t0 + h;
    let LowRankMatrix { u: u0, s: s0, v: v0 } = y0;

    let k1 = k_step(f, v0, u0 * s0, t0, t1, cfg)?;
    let qr = qr_thin(&k1)?;
    let u1 = qr.q;
    let s_tilde = s_step(f, &u1, v0, qr.r, true, t0, t1, cfg)?;
    let l1 = l_step(f, &u1, v0 * s_tilde.adjoint(), t0, t1, cfg)?;
    let qr = qr_thin(&l1)?;
    let y1 = LowRankMatrix::new(u1, qr.r.adjoint(), qr.q)?;
    Ok(MatrixStepReport::new(y0, y1, start))
}

/// Right-hand sides of the factor ODEs
/// `U̇ = (I − UUᴴ) F V S⁻¹`, `Ṡ = Uᴴ F V`, `V̇ = (I − VVᴴ) Fᴴ U S⁻ᴴ`.
fn factor_rhs<T: Scalar>(
    f: &dyn OdeRhs<T>,
    t: Real<T>,
    (u, s, v): (&DMatrix<T>, &DMatrix<T>, &DMatrix<T>),
) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
    let y = u * s * v.adjoint();
    let fy = f.eval(t, &arr(y)).into_matrix();
    let fv = &fy * v;
    let fhu = fy.ad_mul(u);
    let ds = u.ad_mul(&fv);
    let nan = |r, c| DMatrix::from_element(r, c, T::from_real(real::<T>(f64::NAN)));
    // X S = B  ⇔  Sᴴ Xᴴ = Bᴴ.
    let right_solve = |a: DMatrix<T>, b: &DMatrix<T>| {
        let (r, c) = b.shape();
        a.lu().solve(&b.adjoint()).map(|x| x.adjoint()).unwrap_or_else(|| nan(r, c))
    };
    let du = right_solve(s.adjoint(), &(&fv - u * &ds));
    let dv = right_solve(s.clone(), &(&fhu - v * ds.adjoint()));
    (du, ds, dv)
}

/// One classical RK4 step on the factor ODEs. The factors are not
/// re-orthonormalized; a singular `S` produces NaN rather than an error.
pub fn rk4_factors_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    y0: &LowRankMatrix<T>,
    t0: Real<T>,
    h: Real<T>,
) -> Result<MatrixStepReport<T>> {
    check_step(y0, h)?;
    let start = Instant::now();
    let half = T::from_real(h * real::<T>(0.5));
    let full = T::from_real(h);
    let th = t0 + h * real::<T>(0.5);
    let (u, s, v) = (&y0.u, &y0.s, &y0.v);

    let k1 = factor_rhs(f, t0, (u, s, v));
    let st = |k: &(DMatrix<T>, DMatrix<T>, DMatrix<T>), a: T| (u + &k.0 * a, s + &k.1 * a, v + &k.2 * a);
    let y2 = st(&k1, half);
    let k2 = factor_rhs(f, th, (&y2.0, &y2.1, &y2.2));
    let y3 = st(&k2, half);
    let k3 = factor_rhs(f, th, (&y3.0, &y3.1, &y3.2));
    let y4 = st(&k3, full);
    let k4 = factor_rhs(f, t0 + h, (&y4.0, &y4.1, &y4.2));

    let sixth = T::from_real(h / real::<T>(6.0));
    let third = T::from_real(h / real::<T>(3.0));
    let comb = |x: &DMatrix<T>, a: &DMatrix<T>, b: &DMatrix<T>, c: &DMatrix<T>, d: &DMatrix<T>| {
        x + a * sixth + b * third + c * third + d * sixth
    };
    let y1 = LowRankMatrix::new(
        comb(u, &k1.0, &k2.0, &k3.0, &k4.0),
        comb(s, &k1.1, &k2.1, &k3.1, &k4.1),
        comb(v, &k1.2, &k2.2, &k3.2, &k4.2),
    )?;
    Ok(MatrixStepReport::new(y0, y1, start))
}

/// Step count and size for covering `[t0, t_end]` with steps of size `h`:
/// `(full_steps, remainder)`, where a remainder below `1e−9·h` is dropped.
pub fn step_schedule(t0: f64, t_end: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    if !(t_end >= t0) {
        return Err(Error::Config(format!("end time {t_end} precedes start time {t0}")));
    }
    let ratio = (t_end - t0) / h;
    let nearest = ratio.round();
    if (ratio - nearest).abs() <= 1e-9 {
        Ok((nearest as usize, 0.0))
    } else {
        let full = ratio.floor();
        Ok((full as usize, t_end - (t0 + full * h)))
    }
}

/// Where the driver is when it calls an observer.
#[derive(Debug)]
pub struct StepEvent<'a, R> {
    pub index: usize,
    pub t: f64,
    pub report: &'a R,
}

/// Final state of a driver run.
#[derive(Clone, Debug)]
pub struct Trajectory<Y> {
    pub y: Y,
    pub t: f64,
    pub steps: usize,
    /// An observer asked to stop before the end time.
    pub stopped: bool,
}

/// Generic fixed-step driver shared by the matrix and Tucker integrators.
pub(crate) fn drive<Y: Clone, R>(
    y0: &Y,
    t0: f64,
    t_end: f64,
    h: f64,
    mut step: impl FnMut(&Y, f64, f64) -> Result<R>,
    state: impl Fn(&R) -> &Y,
    observer: &mut dyn FnMut(StepEvent<'_, R>) -> ControlFlow<()>,
) -> Result<Trajectory<Y>> {
    let (full, rem) = step_schedule(t0, t_end, h)?;
    let total = full + usize::from(rem > 0.0);
    let mut y = y0.clone();
    let mut t = t0;
    for k in 0..total {
        let (t_start, dt, t_next) = if k < full {
            let ts = t0 + k as f64 * h;
            let tn = if k + 1 == full && rem == 0.0 { t_end } else { t0 + (k + 1) as f64 * h };
            (ts, tn - ts, tn)
        } else {
            (t, t_end - t, t_end)
        };
        let report = step(&y, t_start, dt)?;
        y = state(&report).clone();
        t = t_next;
        if observer(StepEvent { index: k + 1, t, report: &report }).is_break() {
            return Ok(Trajectory { y, t, steps: k + 1, stopped: k + 1 < total });
        }
    }
    Ok(Trajectory { y, t, steps: total, stopped: false })
}

/// Integrates from `t0` to `t_end` with step `h`; the observer sees every
/// step and may stop the run early.
#[allow(clippy::too_many_arguments)]
pub fn integrate<T: Scalar>(
    integrator: MatrixIntegrator,
    f: &dyn OdeRhs<T>,
    y0: &LowRankMatrix<T>,
    t0: f64,
    t_end: f64,
    h: f64,
    cfg: &SubstepConfig,
    observer: &mut dyn FnMut(StepEvent<'_, MatrixStepReport<T>>) -> ControlFlow<()>,
) -> Result<Trajectory<LowRankMatrix<T>>> {
    drive(
        y0,
        t0,
        t_end,
        h,
        |y, t, dt| integrator.step(f, y, real::<T>(t), real::<T>(dt), cfg),
        |r| &r.y1,
        observer,
    )
}

/// Observer that never stops.
pub fn no_observer<R>(_: StepEvent<'_, R>) -> ControlFlow<()> {
    ControlFlow::Continue(())
}

/// Symmetry class of a square matrix under transposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// `Y = Yᵀ`.
    Symmetric,
    /// `Y = −Yᵀ`.
    Skew,
}

/// `‖Y − Yᵀ‖` for symmetric, `‖Y + Yᵀ‖` for skew.
pub fn symmetry_defect<T: Scalar>(y: &DMatrix<T>, kind: Symmetry) -> Result<Real<T>> {
    if y.nrows() != y.ncols() {
        return Err(Error::NotSquare { rows: y.nrows(), cols: y.ncols() });
    }
    let yt = y.transpose();
    Ok(match kind {
        Symmetry::Symmetric => matrix_norm(&(y - yt)),
        Symmetry::Skew => matrix_norm(&(y + yt)),
    })
}

/// Symmetry defects before and after one step.
#[derive(Clone, Debug)]
pub struct StructureReport<T: Scalar> {
    pub initial_defect: Real<T>,
    pub defect: Real<T>,
    pub step: MatrixStepReport<T>,
}

/// Runs one step of `integrator` from a (skew-)symmetric `Y0` and reports
/// how far `Y1` is from the same symmetry class.
pub fn check_structure<T: Scalar>(
    integrator: MatrixIntegrator,
    f: &dyn OdeRhs<T>,
    y0: &LowRankMatrix<T>,
    kind: Symmetry,
    t0: Real<T>,
    h: Real<T>,
    cfg: &SubstepConfig,
) -> Result<StructureReport<T>> {
    let initial_defect = symmetry_defect(&y0.reconstruct(), kind)?;
    let step = integrator.step(f, y0, t0, h, cfg)?;
    let defect = symmetry_defect(&step.y1.reconstruct(), kind)?;
    Ok(StructureReport { initial_defect, defect, step })
}

/// Largest violation of `F(t, ±Yᵀ)ᵀ = ±F(t, Y)` over the given samples,
/// the condition under which BUG preserves (skew-)symmetry.
pub fn symmetry_condition_defect<T: Scalar>(
    f: &dyn OdeRhs<T>,
    t: Real<T>,
    kind: Symmetry,
    samples: &[DMatrix<T>],
) -> Real<T> {
    let sign = match kind {
        Symmetry::Symmetric => T::one(),
        Symmetry::Skew => -T::one(),
    };
    samples
        .iter()
        .map(|y| {
            let lhs = f.eval(t, &arr(y.transpose() * sign)).into_matrix().transpose();
            let rhs = f.eval(t, &arr(y.clone())).into_matrix() * sign;
            matrix_norm(&(lhs - rhs))
        })
        .fold(Real::<T>::zero(), |a, b| if b > a { b } else { a })
}
