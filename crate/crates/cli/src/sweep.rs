//! Runs one integrator configuration through a sequence of sample times.

use std::fmt::Write as _;
use std::ops::ControlFlow;
use std::time::Instant;

use dlra::lowrank::LowRankFormat;
use dlra::matrix::{integrate, MatrixIntegrator};
use dlra::problems::{error_frobenius, Problem, ReferenceSolution};
use dlra::scalar::real_to_f64;
use dlra::svd::singular_values;
use dlra::tensor::matricize;
use dlra::tucker::tucker_integrate;
use dlra::{LowRankMatrix, Scalar, SubstepConfig, TuckerTensor};

/// Norm growth beyond this factor of `‖A₀‖` counts as divergence.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

pub const CSV_HEADER: &str = "experiment,integrator,d,N,rank,h,t,error_frobenius,norm,sigma_min_retained,wall_ms";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Matrix(MatrixIntegrator),
    Tucker,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Matrix(i) => i.to_string(),
            Method::Tucker => "bug".into(),
        }
    }
}

/// Measurements at one sample time.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub t: f64,
    pub error: f64,
    pub norm: f64,
    pub sigma_min: f64,
    pub wall_ms: f64,
}

/// How a configuration ended early.
#[derive(Clone, Debug)]
pub enum Stop {
    /// Non-finite factors or norm explosion, detected after a step ending at `t`.
    Blowup { t: f64 },
    /// The integrator returned an error.
    Breakdown(String),
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub samples: Vec<Sample>,
    pub stop: Option<Stop>,
}

/// Smallest singular value the approximation retains.
pub trait Retained<T: Scalar>: LowRankFormat<T> + Clone {
    fn sigma_min(&self) -> f64;
}

impl<T: Scalar> Retained<T> for LowRankMatrix<T> {
    fn sigma_min(&self) -> f64 {
        singular_values(&self.s).last().map_or(f64::NAN, |&s| real_to_f64::<T>(s))
    }
}

impl<T: Scalar> Retained<T> for TuckerTensor<T> {
    /// Minimum over modes of the smallest singular value of `Matᵢ(C)`.
    fn sigma_min(&self) -> f64 {
        (0..self.order())
            .filter_map(|i| matricize(&self.core, i).ok())
            .filter_map(|m| singular_values(&m).last().map(|&s| real_to_f64::<T>(s)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Advances `y` from `t0` to `t1`; the callback sees every intermediate
/// state and may stop the run.
type Advance<'a, Y> =
    dyn FnMut(&Y, f64, f64, &mut dyn FnMut(&Y) -> ControlFlow<()>) -> dlra::Result<Y> + 'a;

fn trace<T: Scalar, Y: Retained<T>>(
    y0: Y,
    reference: &ReferenceSolution<T>,
    norm_cap: f64,
    advance: &mut Advance<'_, Y>,
) -> Outcome {
    let start = Instant::now();
    let measure = |y: &Y, t: f64, k: usize| Sample {
        t,
        error: real_to_f64::<T>(error_frobenius(y, &reference.snapshots[k]).expect("reference matches the problem")),
        norm: real_to_f64::<T>(y.factored_norm()),
        sigma_min: y.sigma_min(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let times = &reference.times;
    let mut samples = vec![measure(&y0, times[0], 0)];
    let mut y = y0;
    for k in 1..times.len() {
        let mut blowup = None;
        let mut watch = |y1: &Y| {
            let n = real_to_f64::<T>(y1.factored_norm());
            if !y1.is_finite() || !n.is_finite() || n > norm_cap {
                blowup = Some(n);
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        };
        let lost = |norm: f64| Sample {
            t: times[k],
            error: f64::NAN,
            norm,
            sigma_min: f64::NAN,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        match advance(&y, times[k - 1], times[k], &mut watch) {
            Err(e) => {
                samples.push(lost(f64::NAN));
                return Outcome { samples, stop: Some(Stop::Breakdown(e.to_string())) };
            }
            Ok(y1) => {
                if let Some(n) = blowup {
                    samples.push(lost(n));
                    return Outcome { samples, stop: Some(Stop::Blowup { t: times[k] }) };
                }
                y = y1;
                samples.push(measure(&y, times[k], k));
            }
        }
    }
    Outcome { samples, stop: None }
}

/// Runs `method` at rank `rank` (every mode, in the Tucker case) and step
/// `h`, recording a sample at each reference time.
pub fn run_config<T: Scalar>(
    problem: &Problem<T>,
    reference: &ReferenceSolution<T>,
    method: Method,
    rank: usize,
    h: f64,
    cfg: &SubstepConfig,
) -> dlra::Result<Outcome> {
    let rhs = problem.rhs.as_ref();
    let cap = match method {
        Method::Matrix(MatrixIntegrator::Rk4Factors) => {
            DIVERGENCE_FACTOR * real_to_f64::<T>(problem.initial.frobenius_norm())
        }
        _ => f64::INFINITY,
    };
    Ok(match method {
        Method::Matrix(integ) => {
            let y0 = problem.initial_lowrank(rank)?;
            trace(y0, reference, cap, &mut |y, t0, t1, watch| {
                integrate(integ, rhs, y, t0, t1, h, cfg, &mut |e| watch(&e.report.y1)).map(|tr| tr.y)
            })
        }
        Method::Tucker => {
            let y0 = problem.initial_tucker(&vec![rank; problem.dims.len()])?;
            trace(y0, reference, cap, &mut |y, t0, t1, watch| {
                tucker_integrate(rhs, y, t0, t1, h, cfg, &mut |e| watch(&e.report.y1)).map(|tr| tr.y)
            })
        }
    })
}

/// Formats one CSV row per sample.
#[allow(clippy::too_many_arguments)]
pub fn csv_rows(
    out: &mut String,
    experiment: &str,
    method: Method,
    d: usize,
    n: usize,
    rank: usize,
    h: f64,
    samples: &[Sample],
) {
    let name = method.name();
    for s in samples {
        writeln!(
            out,
            "{experiment},{name},{d},{n},{rank},{h:e},{:e},{:e},{:e},{:e},{:.3}",
            s.t, s.error, s.norm, s.sigma_min, s.wall_ms
        )
        .expect("writing to a String cannot fail");
    }
}
