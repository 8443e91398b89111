//! Right-hand sides and the one-step solvers used inside integrator substeps.
//!
//! Every substep (K, L, S, core) is an ODE `Ẋ = G(t, X)` on a small array
//! whose right-hand side is obtained from the full `F` by a linear lift of
//! `X` into the ambient space and a linear restriction of `F` back to the
//! small space. [`ReducedRhs`] packages that pattern so a single solver
//! serves all substeps.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::krylov::expv;
use crate::scalar::{real, real_to_f64, Real, Scalar};
use crate::tensor::DenseArray;

/// `F(t, Y)`; the output has the dimensions of `Y`.
pub trait OdeRhs<T: Scalar>: Send + Sync {
    fn eval(&self, t: Real<T>, y: &DenseArray<T>) -> DenseArray<T>;

    /// `F(t, ·)` is linear (homogeneous) in `Y`.
    fn is_linear(&self) -> bool {
        false
    }

    /// `F` does not depend on `t`.
    fn is_autonomous(&self) -> bool {
        false
    }

    /// `∫_{t0}^{t1} F dt` for right-hand sides that do not depend on `Y`
    /// (explicitly given `A(t)`, where the integral is `A(t1) − A(t0)`).
    fn increment(&self, _t0: Real<T>, _t1: Real<T>) -> Option<DenseArray<T>> {
        None
    }
}

/// Closure-backed right-hand side with user-declared structure flags.
pub struct FnRhs<F> {
    f: F,
    linear: bool,
    autonomous: bool,
}

impl<F> FnRhs<F> {
    pub fn new(f: F) -> Self {
        Self { f, linear: false, autonomous: false }
    }

    pub fn linear(mut self) -> Self {
        self.linear = true;
        self
    }

    pub fn autonomous(mut self) -> Self {
        self.autonomous = true;
        self
    }
}

impl<T, F> OdeRhs<T> for FnRhs<F>
where
    T: Scalar,
    F: Fn(Real<T>, &DenseArray<T>) -> DenseArray<T> + Send + Sync,
{
    fn eval(&self, t: Real<T>, y: &DenseArray<T>) -> DenseArray<T> {
        (self.f)(t, y)
    }

    fn is_linear(&self) -> bool {
        self.linear
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

/// Substep right-hand side `X ↦ restrict(F(t, lift(X)))`.
///
/// Both maps must be linear; structure flags and explicit increments of the
/// full right-hand side carry over.
pub struct ReducedRhs<'a, T: Scalar, L, R> {
    full: &'a dyn OdeRhs<T>,
    lift: L,
    restrict: R,
}

impl<'a, T, L, R> ReducedRhs<'a, T, L, R>
where
    T: Scalar,
    L: Fn(&DenseArray<T>) -> DenseArray<T> + Send + Sync,
    R: Fn(DenseArray<T>) -> DenseArray<T> + Send + Sync,
{
    pub fn new(full: &'a dyn OdeRhs<T>, lift: L, restrict: R) -> Self {
        Self { full, lift, restrict }
    }
}

impl<T, L, R> OdeRhs<T> for ReducedRhs<'_, T, L, R>
where
    T: Scalar,
    L: Fn(&DenseArray<T>) -> DenseArray<T> + Send + Sync,
    R: Fn(DenseArray<T>) -> DenseArray<T> + Send + Sync,
{
    fn eval(&self, t: Real<T>, y: &DenseArray<T>) -> DenseArray<T> {
        (self.restrict)(self.full.eval(t, &(self.lift)(y)))
    }

    fn is_linear(&self) -> bool {
        self.full.is_linear()
    }

    fn is_autonomous(&self) -> bool {
        self.full.is_autonomous()
    }

    fn increment(&self, t0: Real<T>, t1: Real<T>) -> Option<DenseArray<T>> {
        self.full.increment(t0, t1).map(&self.restrict)
    }
}

/// Solver used for each substep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SubstepMethod {
    /// Heun's method (explicit trapezoidal rule), order 2.
    Rk2,
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// `X(t1) = X(t0) + restrict(A(t1) − A(t0))`; needs an explicit increment.
    ExactIncrement,
    /// Krylov approximation of the exponential; needs a linear autonomous rhs.
    Arnoldi,
}

impl fmt::Display for SubstepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SubstepMethod::Rk2 => "rk2",
            SubstepMethod::Rk4 => "rk4",
            SubstepMethod::ExactIncrement => "exact-increment",
            SubstepMethod::Arnoldi => "arnoldi",
        })
    }
}

impl FromStr for SubstepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk2" => Ok(Self::Rk2),
            "rk4" => Ok(Self::Rk4),
            "exact-increment" => Ok(Self::ExactIncrement),
            "arnoldi" => Ok(Self::Arnoldi),
            other => Err(Error::Config(format!("unknown substep method `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubstepConfig {
    pub method: SubstepMethod,
    pub inner_steps: usize,
    pub krylov_dim: usize,
}

impl SubstepConfig {
    pub fn new(method: SubstepMethod) -> Self {
        Self { method, inner_steps: 1, krylov_dim: 30 }
    }

    pub fn with_inner_steps(mut self, n: usize) -> Self {
        self.inner_steps = n;
        self
    }

    pub fn with_krylov_dim(mut self, m: usize) -> Self {
        self.krylov_dim = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_steps == 0 {
            return Err(Error::Config("inner_steps must be at least 1".into()));
        }
        if self.krylov_dim == 0 {
            return Err(Error::Config("krylov_dim must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SubstepConfig {
    fn default() -> Self {
        Self::new(SubstepMethod::Rk4)
    }
}

fn heun<T: Scalar>(rhs: &dyn OdeRhs<T>, t: Real<T>, h: Real<T>, y: &DenseArray<T>) -> DenseArray<T> {
    let k1 = rhs.eval(t, y);
    let mut y1 = y.clone();
    y1.axpy(T::from_real(h), &k1);
    let k2 = rhs.eval(t + h, &y1);
    let half_h = T::from_real(h * real::<T>(0.5));
    let mut out = y.clone();
    out.axpy(half_h, &k1);
    out.axpy(half_h, &k2);
    out
}

fn rk4<T: Scalar>(rhs: &dyn OdeRhs<T>, t: Real<T>, h: Real<T>, y: &DenseArray<T>) -> DenseArray<T> {
    let half = real::<T>(0.5);
    let hh = T::from_real(h * half);
    let k1 = rhs.eval(t, y);
    let mut tmp = y.clone();
    tmp.axpy(hh, &k1);
    let k2 = rhs.eval(t + h * half, &tmp);
    let mut tmp = y.clone();
    tmp.axpy(hh, &k2);
    let k3 = rhs.eval(t + h * half, &tmp);
    let mut tmp = y.clone();
    tmp.axpy(T::from_real(h), &k3);
    let k4 = rhs.eval(t + h, &tmp);
    let sixth = T::from_real(h / real::<T>(6.0));
    let third = T::from_real(h / real::<T>(3.0));
    let mut out = y.clone();
    out.axpy(sixth, &k1);
    out.axpy(third, &k2);
    out.axpy(third, &k3);
    out.axpy(sixth, &k4);
    out
}

/// `Y0 + ∫_{t0}^{t1} F dt`, using the explicit increment of a
/// `Y`-independent right-hand side.
pub fn exact_increment<T: Scalar>(
    rhs: &dyn OdeRhs<T>,
    t0: Real<T>,
    t1: Real<T>,
    y0: &DenseArray<T>,
) -> Result<DenseArray<T>> {
    let inc = rhs.increment(t0, t1).ok_or(Error::NoExplicitIncrement)?;
    if inc.dims() != y0.dims() {
        return Err(Error::Dimension(format!(
            "increment {:?} does not match state {:?}",
            inc.dims(),
            y0.dims()
        )));
    }
    Ok(y0.add(&inc))
}

/// `e^{τA} y` for the linear operator `A = rhs(t, ·)`.
pub fn krylov_step<T: Scalar>(
    rhs: &dyn OdeRhs<T>,
    t: Real<T>,
    tau: Real<T>,
    y: &DenseArray<T>,
    krylov_dim: usize,
) -> DenseArray<T> {
    let dims = y.dims().to_vec();
    let apply = |x: &DVector<T>| {
        let arg = DenseArray::new(dims.clone(), x.as_slice().to_vec()).expect("state shape");
        DVector::from_vec(rhs.eval(t, &arg).into_data())
    };
    let v = DVector::from_column_slice(y.data());
    let out = expv(apply, tau, &v, krylov_dim);
    DenseArray::new(dims.clone(), out.data.into()).expect("state shape")
}

/// Advances `y0` from `t0` to `t1` with the configured method.
pub fn solve_substep<T: Scalar>(
    rhs: &dyn OdeRhs<T>,
    t0: Real<T>,
    t1: Real<T>,
    y0: &DenseArray<T>,
    cfg: &SubstepConfig,
) -> Result<DenseArray<T>> {
    cfg.validate()?;
    if !(t1 > t0) {
        return Err(Error::Config(format!(
            "substep interval must be forward in time, got [{}, {}]",
            real_to_f64::<T>(t0),
            real_to_f64::<T>(t1)
        )));
    }
    match cfg.method {
        SubstepMethod::ExactIncrement => exact_increment(rhs, t0, t1, y0),
        SubstepMethod::Arnoldi => {
            if !(rhs.is_linear() && rhs.is_autonomous()) {
                return Err(Error::Config(
                    "arnoldi substeps need a right-hand side flagged linear and autonomous".into(),
                ));
            }
            let h = (t1 - t0) / real::<T>(cfg.inner_steps as f64);
            let mut y = y0.clone();
            for _ in 0..cfg.inner_steps {
                y = krylov_step(rhs, t0, h, &y, cfg.krylov_dim);
            }
            Ok(y)
        }
        SubstepMethod::Rk2 | SubstepMethod::Rk4 => {
            let n = cfg.inner_steps;
            let h = (t1 - t0) / real::<T>(n as f64);
            let mut y = y0.clone();
            for k in 0..n {
                let t = t0 + h * real::<T>(k as f64);
                y = if cfg.method == SubstepMethod::Rk2 { heun(rhs, t, h, &y) } else { rk4(rhs, t, h, &y) };
            }
            Ok(y)
        }
    }
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Statistics of an adaptive run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdaptiveStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Adaptive Dormand–Prince 4(5) integration with mixed absolute/relative
/// tolerances, returning the solution at each of `times` (increasing, all
/// ≥ `t0`).
pub fn integrate_adaptive<T: Scalar>(
    rhs: &dyn OdeRhs<T>,
    t0: f64,
    y0: &DenseArray<T>,
    times: &[f64],
    atol: f64,
    rtol: f64,
) -> Result<(Vec<DenseArray<T>>, AdaptiveStats)> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::Config("output times must be increasing and not before t0".into()));
    }
    let mut stats = AdaptiveStats::default();
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = rhs.eval(real::<T>(t), &y);

    let rms = |a: &DenseArray<T>| {
        (a.data().iter().map(|x| real_to_f64::<T>(x.modulus_squared())).sum::<f64>() / a.len() as f64).sqrt()
    };
    let span = times.last().copied().unwrap_or(t0) - t0;
    let mut h = {
        let d0 = rms(&y);
        let d1 = rms(&k1);
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min(span.max(f64::MIN_POSITIVE))
    };

    for &target in times {
        while t < target {
            let step = h.min(target - t);
            let last = step >= target - t;
            let mut stages: Vec<DenseArray<T>> = Vec::with_capacity(7);
            stages.push(k1.clone());
            for s in 1..7 {
                let mut arg = y.clone();
                for (j, kj) in stages.iter().enumerate() {
                    let a = DP_A[s][j];
                    if a != 0.0 {
                        arg.axpy(T::from_real(real::<T>(a * step)), kj);
                    }
                }
                stages.push(rhs.eval(real::<T>(t + DP_C[s] * step), &arg));
            }
            let mut y_new = y.clone();
            let mut err = DenseArray::zeros(y.dims());
            for (j, kj) in stages.iter().enumerate() {
                if DP_B5[j] != 0.0 {
                    y_new.axpy(T::from_real(real::<T>(DP_B5[j] * step)), kj);
                }
                let e = DP_B5[j] - DP_B4[j];
                if e != 0.0 {
                    err.axpy(T::from_real(real::<T>(e * step)), kj);
                }
            }
            let mut acc = 0.0;
            for ((e, a), b) in err.data().iter().zip(y.data()).zip(y_new.data()) {
                let scale = atol
                    + rtol * real_to_f64::<T>(a.modulus()).max(real_to_f64::<T>(b.modulus()));
                let r = real_to_f64::<T>(e.modulus()) / scale;
                acc += r * r;
            }
            let err_norm = (acc / y.len() as f64).sqrt();
            if !err_norm.is_finite() {
                return Err(Error::Config("adaptive integration produced a non-finite error estimate".into()));
            }
            let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
            if err_norm <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = stages.swap_remove(6);
                stats.accepted += 1;
                // Don't let a short final step shrink the next one.
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                stats.rejected += 1;
                h = step * factor.min(1.0);
                if h < 1e-14 * span.max(1.0) {
                    return Err(Error::Config("adaptive step size underflow".into()));
                }
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

/// `‖F(t, Y)‖` helper for diagnostics.
pub fn rhs_norm<T: Scalar>(rhs: &dyn OdeRhs<T>, t: Real<T>, y: &DenseArray<T>) -> Real<T> {
    let f = rhs.eval(t, y);
    if f.is_empty() {
        Real::<T>::zero()
    } else {
        f.frobenius_norm()
    }
}
