//! The basis-update & Galerkin integrator for Tucker tensors.
//!
//! For each mode `i` the core is factored as `Matᵢ(C0)ᴴ = Qᵢ Sᵢᴴ`, which
//! writes `Matᵢ(Y0) = Kᵢ Vᵢᴴ` with `Kᵢ = Uᵢ Sᵢ` and
//! `Vᵢ = conj(⊗_{j≠i} Uⱼ) Qᵢ`. `Vᵢ` has `∏_{j≠i} nⱼ` rows and is never
//! formed: products with it are a `Qᵢ` contraction plus `d − 1` mode
//! products.

use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lowrank::TuckerTensor;
use crate::matrix::{drive, StepEvent, Trajectory};
use crate::ode::{solve_substep, OdeRhs, ReducedRhs, SubstepConfig};
use crate::qr::qr_thin;
use crate::scalar::{real, real_to_f64, Real, Scalar};
use crate::tensor::{matricize, multi_mode_product, tensorize, DenseArray};

/// Result of one Tucker integrator step.
#[derive(Clone, Debug)]
pub struct TuckerStepReport<T: Scalar> {
    pub y1: TuckerTensor<T>,
    /// `Mᵢ = Uᵢ¹ᴴ Uᵢ⁰` for every mode.
    pub gramians: Vec<DMatrix<T>>,
    pub wall_time: Duration,
}

/// Per-mode data of the frozen initial value.
struct ModeFrame<'a, T: Scalar> {
    mode: usize,
    bases: &'a [DMatrix<T>],
    adjoints: &'a [DMatrix<T>],
    q: DMatrix<T>,
    /// Core extents with `nᵢ` in place of `rᵢ`.
    lifted_dims: Vec<usize>,
}

impl<T: Scalar> ModeFrame<'_, T> {
    /// `Tenᵢ(K Vᵢᴴ)`.
    fn lift(&self, k: &DMatrix<T>) -> DenseArray<T> {
        let x = k * self.q.adjoint();
        let t = tensorize(&x, self.mode, &self.lifted_dims).expect("lifted extents match K Qᴴ");
        let mats: Vec<Option<&DMatrix<T>>> =
            self.bases.iter().enumerate().map(|(j, u)| (j != self.mode).then_some(u)).collect();
        multi_mode_product(&t, &mats).expect("bases match core extents")
    }

    /// `Matᵢ(Z) Vᵢ`.
    fn restrict(&self, z: &DenseArray<T>) -> DMatrix<T> {
        let mats: Vec<Option<&DMatrix<T>>> =
            self.adjoints.iter().enumerate().map(|(j, u)| (j != self.mode).then_some(u)).collect();
        let g = multi_mode_product(z, &mats).expect("bases match ambient extents");
        matricize(&g, self.mode).expect("mode in range") * &self.q
    }
}

fn frame<'a, T: Scalar>(
    y0: &TuckerTensor<T>,
    bases: &'a [DMatrix<T>],
    adjoints: &'a [DMatrix<T>],
    mode: usize,
) -> Result<(ModeFrame<'a, T>, DMatrix<T>)> {
    let ci = matricize(&y0.core, mode)?;
    let r = ci.nrows();
    if ci.ncols() < r {
        return Err(Error::Dimension(format!(
            "rank {r} in mode {mode} exceeds the product {} of the other ranks",
            ci.ncols()
        )));
    }
    let qr = qr_thin(&ci.adjoint())?;
    let mut lifted_dims = y0.ranks().to_vec();
    lifted_dims[mode] = bases[mode].nrows();
    let k0 = &bases[mode] * qr.r.adjoint();
    Ok((ModeFrame { mode, bases, adjoints, q: qr.q, lifted_dims }, k0))
}

/// `Matᵢ(F(t, Tenᵢ(K Vᵢᴴ))) Vᵢ` for `Vᵢ = conj(⊗_{j≠i} Uⱼ) Qᵢ`, without
/// forming `Vᵢ`.
pub fn evaluate_ki_rhs<T: Scalar>(
    f: &dyn OdeRhs<T>,
    k: &DMatrix<T>,
    q: &DMatrix<T>,
    bases: &[DMatrix<T>],
    mode: usize,
    t: Real<T>,
) -> Result<DMatrix<T>> {
    let d = bases.len();
    if mode >= d {
        return Err(Error::Mode { mode, order: d });
    }
    let n = bases[mode].nrows();
    let others: usize = bases.iter().enumerate().filter(|&(j, _)| j != mode).map(|(_, u)| u.ncols()).product();
    if k.nrows() != n || k.ncols() != q.ncols() || q.nrows() != others {
        return Err(Error::Dimension(format!(
            "K {:?} and Q {:?} do not fit mode {mode} of bases with ranks {:?}",
            k.shape(),
            q.shape(),
            bases.iter().map(|u| u.ncols()).collect::<Vec<_>>()
        )));
    }
    let adjoints: Vec<DMatrix<T>> = bases.iter().map(|u| u.adjoint()).collect();
    let mut lifted_dims: Vec<usize> = bases.iter().map(|u| u.ncols()).collect();
    lifted_dims[mode] = n;
    let fr = ModeFrame { mode, bases, adjoints: &adjoints, q: q.clone(), lifted_dims };
    Ok(fr.restrict(&f.eval(t, &fr.lift(k))))
}

fn k_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    fr: &ModeFrame<'_, T>,
    k0: DMatrix<T>,
    t0: Real<T>,
    t1: Real<T>,
    cfg: &SubstepConfig,
) -> Result<DMatrix<T>> {
    let rhs = ReducedRhs::new(
        f,
        |k: &DenseArray<T>| fr.lift(&k.matrix_view().into_owned()),
        |z: DenseArray<T>| DenseArray::from_matrix(fr.restrict(&z)),
    );
    Ok(solve_substep(&rhs, t0, t1, &DenseArray::from_matrix(k0), cfg)?.into_matrix())
}

/// One step of the Tucker BUG integrator. The `d` basis updates run in
/// parallel from the same frozen `Y0`; the core Galerkin step follows.
pub fn tucker_bug_step<T: Scalar>(
    f: &dyn OdeRhs<T>,
    y0: &TuckerTensor<T>,
    t0: Real<T>,
    h: Real<T>,
    cfg: &SubstepConfig,
) -> Result<TuckerStepReport<T>> {
    if !(h > Real::<T>::zero()) {
        return Err(Error::Config(format!("step size must be positive, got {}", real_to_f64::<T>(h))));
    }
    let start = Instant::now();
    let t1 = t0 + h;
    let d = y0.order();
    let bases = &y0.bases;
    let adjoints: Vec<DMatrix<T>> = bases.iter().map(|u| u.adjoint()).collect();

    let new_bases: Vec<DMatrix<T>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let (fr, k0) = frame(y0, bases, &adjoints, i)?;
            let k1 = k_step(f, &fr, k0, t0, t1, cfg)?;
            Ok(qr_thin(&k1)?.q)
        })
        .collect::<Result<_>>()?;
    let gramians: Vec<DMatrix<T>> = new_bases.iter().zip(bases).map(|(u1, u0)| u1.ad_mul(u0)).collect();

    let c_init = multi_mode_product(&y0.core, &gramians.iter().map(Some).collect::<Vec<_>>())?;
    let new_adj: Vec<DMatrix<T>> = new_bases.iter().map(|u| u.adjoint()).collect();
    let up: Vec<Option<&DMatrix<T>>> = new_bases.iter().map(Some).collect();
    let down: Vec<Option<&DMatrix<T>>> = new_adj.iter().map(Some).collect();
    let rhs = ReducedRhs::new(
        f,
        |c: &DenseArray<T>| multi_mode_product(c, &up).expect("bases match core"),
        |z: DenseArray<T>| multi_mode_product(&z, &down).expect("bases match ambient"),
    );
    let c1 = solve_substep(&rhs, t0, t1, &c_init, cfg)?;
    let y1 = TuckerTensor::new(c1, new_bases)?;
    Ok(TuckerStepReport { y1, gramians, wall_time: start.elapsed() })
}

/// Fixed-step driver for [`tucker_bug_step`]; see [`crate::matrix::integrate`].
#[allow(clippy::too_many_arguments)]
pub fn tucker_integrate<T: Scalar>(
    f: &dyn OdeRhs<T>,
    y0: &TuckerTensor<T>,
    t0: f64,
    t_end: f64,
    h: f64,
    cfg: &SubstepConfig,
    observer: &mut dyn FnMut(StepEvent<'_, TuckerStepReport<T>>) -> ControlFlow<()>,
) -> Result<Trajectory<TuckerTensor<T>>> {
    drive(y0, t0, t_end, h, |y, t, dt| tucker_bug_step(f, y, real::<T>(t), real::<T>(dt), cfg), |r| &r.y1, observer)
}

/// Symmetry class of a tensor under permutations of its indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorSymmetry {
    /// `σ(Y) = Y` for every permutation `σ`.
    Symmetric,
    /// `σ(Y) = sign(σ) Y`.
    Antisymmetric,
}

/// All permutations of `0..d` in lexicographic order.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..d).collect();
    loop {
        out.push(p.clone());
        // Next lexicographic permutation.
        let Some(i) = (1..d).rev().find(|&i| p[i - 1] < p[i]) else { break };
        let j = (i..d).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// `+1` for even permutations, `−1` for odd ones.
pub fn permutation_sign(p: &[usize]) -> i32 {
    let inversions = (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

fn inverse_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (k, &j) in p.iter().enumerate() {
        inv[j] = k;
    }
    inv
}

fn class_sign<T: Scalar>(kind: TensorSymmetry, perm: &[usize]) -> T {
    match kind {
        TensorSymmetry::Symmetric => T::one(),
        TensorSymmetry::Antisymmetric => T::from_real(real::<T>(permutation_sign(perm) as f64)),
    }
}

fn check_cubical(dims: &[usize]) -> Result<()> {
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Dimension(format!("symmetry needs equal mode sizes, got {dims:?}")));
    }
    Ok(())
}

/// `max_σ ‖σ(Y) − s(σ) Y‖` over all index permutations, with `s = 1` for
/// symmetric and `s = sign(σ)` for antisymmetric tensors.
pub fn tensor_symmetry_defect<T: Scalar>(y: &DenseArray<T>, kind: TensorSymmetry) -> Result<Real<T>> {
    check_cubical(y.dims())?;
    let mut worst = Real::<T>::zero();
    for p in permutations(y.order()) {
        let s: T = class_sign(kind, &p);
        let diff = y.permute_modes(&p)?.sub(&y.scaled(s)).frobenius_norm();
        if diff > worst {
            worst = diff;
        }
    }
    Ok(worst)
}

/// Largest violation of `σ⁻¹(F(t, s(σ)·σ(Y))) = s(σ)·F(t, Y)` over all
/// permutations and the given samples. When it vanishes, a Tucker BUG step
/// maps (anti)symmetric data to (anti)symmetric data.
pub fn tensor_symmetry_condition_defect<T: Scalar>(
    f: &dyn OdeRhs<T>,
    t: Real<T>,
    kind: TensorSymmetry,
    samples: &[DenseArray<T>],
) -> Result<Real<T>> {
    let mut worst = Real::<T>::zero();
    for y in samples {
        check_cubical(y.dims())?;
        let fy = f.eval(t, y);
        for p in permutations(y.order()) {
            let s: T = class_sign(kind, &p);
            let lhs = f.eval(t, &y.permute_modes(&p)?.scaled(s)).permute_modes(&inverse_permutation(&p))?;
            let diff = lhs.sub(&fy.scaled(s)).frobenius_norm();
            if diff > worst {
                worst = diff;
            }
        }
    }
    Ok(worst)
}

/// Symmetry defects before and after one Tucker step.
#[derive(Clone, Debug)]
pub struct TensorStructureReport<T: Scalar> {
    pub initial_defect: Real<T>,
    pub defect: Real<T>,
    pub step: TuckerStepReport<T>,
}

/// Runs one [`tucker_bug_step`] and reports the symmetry defect of `Y1`.
pub fn check_structure_tensor<T: Scalar>(
    f: &dyn OdeRhs<T>,
    y0: &TuckerTensor<T>,
    kind: TensorSymmetry,
    t0: Real<T>,
    h: Real<T>,
    cfg: &SubstepConfig,
) -> Result<TensorStructureReport<T>> {
    let initial_defect = tensor_symmetry_defect(&y0.reconstruct(), kind)?;
    let step = tucker_bug_step(f, y0, t0, h, cfg)?;
    let defect = tensor_symmetry_defect(&step.y1.reconstruct(), kind)?;
    Ok(TensorStructureReport { initial_defect, defect, step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowrank::{random_lowrank_matrix, random_orthonormal, random_tucker, truncate_tucker};
    use crate::matrix::{bug_step, check_structure, no_observer, MatrixIntegrator, Symmetry};
    use crate::ode::{FnRhs, SubstepMethod};
    use crate::tensor::mode_product;
    use num_complex::Complex64 as C;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel<T: Scalar>(a: &DenseArray<T>, b: &DenseArray<T>) -> f64 {
        real_to_f64::<T>(a.sub(b).frobenius_norm()) / real_to_f64::<T>(b.frobenius_norm())
    }

    /// Nonlinear, non-equivariant test right-hand side.
    fn mixing_rhs(dims: &[usize], seed: u64) -> impl OdeRhs<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mats: Vec<DMatrix<C>> =
            dims.iter().map(|&n| DMatrix::from_fn(n, n, |_, _| C::sample_standard_normal(&mut rng))).collect();
        FnRhs::new(move |t: f64, y: &DenseArray<C>| {
            let mut out = mode_product(y, 0, &mats[0]).unwrap();
            for (i, m) in mats.iter().enumerate().skip(1) {
                out = out.add(&mode_product(y, i, m).unwrap());
            }
            out.add(&y.map(|x| x * x.conj() * x * C::new(0.3, t)))
        })
    }

    #[test]
    fn ki_rhs_matches_dense_construction() {
        let dims = [3, 4, 5];
        let y0 = random_tucker::<C>(&dims, &[2, 2, 2], 1).unwrap();
        let f = mixing_rhs(&dims, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..3 {
            let others: Vec<usize> = (0..3).filter(|&j| j != i).collect();
            // Column order of Matᵢ: lower modes vary fastest, so the
            // Kronecker factors appear highest mode first.
            let w = y0.bases[others[1]].kronecker(&y0.bases[others[0]]);
            let q = qr_thin(&matricize(&y0.core, i).unwrap().adjoint()).unwrap().q;
            let v = w.map(|x| x.conj()) * &q;
            assert!((v.adjoint() * &v - DMatrix::<C>::identity(2, 2)).norm() < 1e-12);

            let k = DMatrix::<C>::from_fn(dims[i], 2, |_, _| C::sample_standard_normal(&mut rng));
            let y = tensorize(&(&k * v.adjoint()), i, &dims).unwrap();
            let dense = matricize(&f.eval(0.4, &y), i).unwrap() * &v;
            let ours = evaluate_ki_rhs(&f, &k, &q, &y0.bases, i, 0.4).unwrap();
            assert!((&ours - &dense).norm() < 1e-12 * dense.norm(), "mode {i}");

            // The initial K reproduces Y0.
            let (fr, k0) = {
                let adj: Vec<DMatrix<C>> = y0.bases.iter().map(|u| u.adjoint()).collect();
                let (fr, k0) = frame(&y0, &y0.bases, &adj, i).unwrap();
                (fr.lift(&k0), k0)
            };
            assert!(rel(&fr, &y0.reconstruct()) < 1e-13);
            assert_eq!(k0.shape(), (dims[i], 2));
        }
    }

    #[test]
    fn identity_rhs_returns_k() {
        let y0 = random_tucker::<f64>(&[4, 5, 6], &[2, 3, 2], 4).unwrap();
        let f = FnRhs::new(|_t: f64, y: &DenseArray<f64>| y.clone());
        let q = qr_thin(&matricize(&y0.core, 1).unwrap().adjoint()).unwrap().q;
        let k = DMatrix::<f64>::from_fn(5, 3, |i, j| (i * 3 + j) as f64);
        let out = evaluate_ki_rhs(&f, &k, &q, &y0.bases, 1, 0.0).unwrap();
        assert!((out - &k).norm() < 1e-12 * k.norm());
    }

    #[test]
    fn zero_and_decay_flows() {
        let y0 = random_tucker::<f64>(&[6, 5, 4], &[3, 2, 2], 5).unwrap();
        let zero = FnRhs::new(|_t: f64, y: &DenseArray<f64>| DenseArray::zeros(y.dims())).linear().autonomous();
        let decay = FnRhs::new(|_t: f64, y: &DenseArray<f64>| y.scaled(-1.0)).linear().autonomous();
        let cfg = SubstepConfig::new(SubstepMethod::Arnoldi);
        let r = tucker_bug_step(&zero, &y0, 0.0, 0.2, &cfg).unwrap();
        assert!(rel(&r.y1.reconstruct(), &y0.reconstruct()) < 1e-12);
        let r = tucker_bug_step(&decay, &y0, 0.0, 0.2, &cfg).unwrap();
        assert!(rel(&r.y1.reconstruct(), &y0.reconstruct().scaled((-0.2f64).exp())) < 1e-12);
        for m in &r.gramians {
            assert!(m.clone().svd(false, false).singular_values.max() <= 1.0 + 1e-10);
        }
        assert!(r.y1.orthonormality_defect() < 1e-10);

        let traj = tucker_integrate(&decay, &y0, 0.0, 0.5, 0.1, &cfg, &mut no_observer).unwrap();
        assert_eq!(traj.steps, 5);
        assert!(rel(&traj.y.reconstruct(), &y0.reconstruct().scaled((-0.5f64).exp())) < 1e-12);
        let same = tucker_integrate(&decay, &y0, 0.0, 0.0, 0.1, &cfg, &mut no_observer).unwrap();
        assert_eq!(same.y, y0);
    }

    #[test]
    fn matrix_shaped_tensor_matches_bug_step() {
        let y0 = random_lowrank_matrix::<C>(9, 7, 3, 6).unwrap();
        let f = mixing_rhs(&[9, 7], 7);
        let cfg = SubstepConfig::new(SubstepMethod::Rk4).with_inner_steps(2);
        let mat = bug_step(&f, &y0, 0.1, 0.05, &cfg).unwrap().y1.reconstruct();
        let ten = tucker_bug_step(&f, &TuckerTensor::from(&y0), 0.1, 0.05, &cfg).unwrap().y1.reconstruct();
        let mat = DenseArray::from_matrix(mat);
        assert!(rel(&ten, &mat) < 1e-12, "{}", rel(&ten, &mat));
    }

    #[test]
    fn mode_permutation_commutes_with_step() {
        let dims = [3, 4, 5];
        let y0 = random_tucker::<C>(&dims, &[2, 3, 2], 8).unwrap();
        let f = mixing_rhs(&dims, 9);
        let cfg = SubstepConfig::new(SubstepMethod::Rk4);
        let base = tucker_bug_step(&f, &y0, 0.0, 0.03, &cfg).unwrap().y1.reconstruct();
        for p in permutations(3) {
            let inv = inverse_permutation(&p);
            let fp = FnRhs::new(|t: f64, z: &DenseArray<C>| {
                f.eval(t, &z.permute_modes(&inv).unwrap()).permute_modes(&p).unwrap()
            });
            let yp = TuckerTensor::new(
                y0.core.permute_modes(&p).unwrap(),
                p.iter().map(|&j| y0.bases[j].clone()).collect(),
            )
            .unwrap();
            let stepped = tucker_bug_step(&fp, &yp, 0.0, 0.03, &cfg).unwrap().y1.reconstruct();
            assert!(rel(&stepped, &base.permute_modes(&p).unwrap()) < 1e-12, "{p:?}");
        }
    }

    /// `A(t) = C(t) ×ᵢ exp(t Wᵢ) Uᵢ` with a smoothly varying core.
    struct ExplicitTucker {
        core: DenseArray<f64>,
        bases: Vec<DMatrix<f64>>,
        gens: Vec<DMatrix<f64>>,
    }

    impl ExplicitTucker {
        fn new(dims: &[usize], ranks: &[usize], seed: u64) -> Self {
            let y = random_tucker::<f64>(dims, ranks, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let gens = dims
                .iter()
                .map(|&n| {
                    let g = DMatrix::<f64>::from_fn(n, n, |_, _| f64::sample_standard_normal(&mut rng));
                    (&g - g.transpose()) * 0.5
                })
                .collect();
            Self { core: y.core, bases: y.bases, gens }
        }

        fn at(&self, t: f64) -> DenseArray<f64> {
            let core = self.core.map(|c| c * (1.0 + t) + t * t * c.signum());
            let bases: Vec<DMatrix<f64>> =
                self.bases.iter().zip(&self.gens).map(|(u, w)| (w * t).exp() * u).collect();
            TuckerTensor::new(core, bases).unwrap().reconstruct()
        }
    }

    impl OdeRhs<f64> for ExplicitTucker {
        fn eval(&self, t: f64, _y: &DenseArray<f64>) -> DenseArray<f64> {
            let d = 1e-5;
            self.at(t + d).sub(&self.at(t - d)).scaled(0.5 / d)
        }

        fn increment(&self, t0: f64, t1: f64) -> Option<DenseArray<f64>> {
            Some(self.at(t1).sub(&self.at(t0)))
        }
    }

    #[test]
    fn exact_for_tucker_data() {
        let a = ExplicitTucker::new(&[10, 9, 8], &[3, 3, 2], 10);
        let y0 = truncate_tucker(&a.at(0.0), &[3, 3, 2]).unwrap();
        let cfg = SubstepConfig::new(SubstepMethod::ExactIncrement);
        let r = tucker_bug_step(&a, &y0, 0.0, 0.1, &cfg).unwrap();
        assert!(rel(&r.y1.reconstruct(), &a.at(0.1)) < 1e-10);
    }

    #[test]
    fn incompatible_ranks_are_rejected() {
        // Mode 0 rank 4 exceeds the product 1·2 of the other ranks.
        let y0 = TuckerTensor::new(
            DenseArray::<f64>::zeros(&[4, 1, 2]),
            vec![DMatrix::identity(5, 4), DMatrix::identity(5, 1), DMatrix::identity(5, 2)],
        )
        .unwrap();
        let f = FnRhs::new(|_t: f64, y: &DenseArray<f64>| y.clone());
        assert!(matches!(tucker_bug_step(&f, &y0, 0.0, 0.1, &SubstepConfig::default()), Err(Error::Dimension(_))));
    }

    #[test]
    fn permutation_helpers() {
        let ps = permutations(3);
        assert_eq!(ps.len(), 6);
        assert_eq!(ps[0], vec![0, 1, 2]);
        assert_eq!(ps[5], vec![2, 1, 0]);
        assert_eq!(permutation_sign(&[0, 1, 2]), 1);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1);
        assert_eq!(inverse_permutation(&[1, 2, 0]), vec![2, 0, 1]);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    fn outer3(a: &[f64], b: &[f64], c: &[f64]) -> DenseArray<f64> {
        DenseArray::from_fn(&[a.len(); 3], |i| a[i[0]] * b[i[1]] * c[i[2]])
    }

    fn antisymmetric_sample(n: usize, seed: u64) -> DenseArray<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vecs: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| f64::sample_standard_normal(&mut rng)).collect()).collect();
        let mut y = DenseArray::zeros(&[n; 3]);
        for p in permutations(3) {
            let s = permutation_sign(&p) as f64;
            y.axpy(s, &outer3(&vecs[p[0]], &vecs[p[1]], &vecs[p[2]]));
        }
        y
    }

    #[test]
    fn antisymmetry_is_preserved() {
        let n = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = DMatrix::<f64>::from_fn(n, n, |_, _| f64::sample_standard_normal(&mut rng));
        let f = FnRhs::new(move |_t: f64, y: &DenseArray<f64>| {
            let mut out = y.scaled(-y.frobenius_norm().powi(2));
            for i in 0..3 {
                out = out.add(&mode_product(y, i, &a).unwrap());
            }
            out
        });
        let samples: Vec<DenseArray<f64>> = (0..5)
            .map(|s| {
                let mut r = ChaCha8Rng::seed_from_u64(200 + s);
                DenseArray::from_fn(&[n; 3], |_| f64::sample_standard_normal(&mut r))
            })
            .collect();
        let cond = tensor_symmetry_condition_defect(&f, 0.0, TensorSymmetry::Antisymmetric, &samples).unwrap();
        assert!(cond < 1e-11, "{cond}");

        let y = antisymmetric_sample(n, 14);
        let y = y.scaled(1.0 / y.frobenius_norm());
        assert!(tensor_symmetry_defect(&y, TensorSymmetry::Antisymmetric).unwrap() < 1e-14);
        let y0 = truncate_tucker(&y, &[3, 3, 3]).unwrap();
        assert!(rel(&y0.reconstruct(), &y) < 1e-12);
        let rep = check_structure_tensor(&f, &y0, TensorSymmetry::Antisymmetric, 0.0, 0.05, &SubstepConfig::default()).unwrap();
        assert!(rep.defect < 1e-12, "{}", rep.defect);

        let decay = FnRhs::new(|_t: f64, y: &DenseArray<f64>| y.scaled(-1.0));
        let rep = check_structure_tensor(&decay, &y0, TensorSymmetry::Antisymmetric, 0.0, 0.05, &SubstepConfig::default()).unwrap();
        assert!(rep.defect < 1e-12);
    }

    #[test]
    fn symmetry_is_preserved_under_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let a: Vec<f64> = (0..5).map(|_| f64::sample_standard_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..5).map(|_| f64::sample_standard_normal(&mut rng)).collect();
        let y = outer3(&a, &a, &a).add(&outer3(&b, &b, &b).scaled(0.5));
        let y0 = truncate_tucker(&y, &[2, 2, 2]).unwrap();
        let decay = FnRhs::new(|_t: f64, y: &DenseArray<f64>| y.scaled(-1.0));
        let rep = check_structure_tensor(&decay, &y0, TensorSymmetry::Symmetric, 0.0, 0.1, &SubstepConfig::default()).unwrap();
        assert!(rep.initial_defect < 1e-12);
        assert!(rep.defect < 1e-12);
    }

    #[test]
    fn order_two_skew_agrees_with_matrix_check() {
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let q: DMatrix<f64> = random_orthonormal(n, 4, &mut rng);
        let s = DMatrix::from_row_slice(4, 4, &[0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, -0.3, 0.0]);
        let y0 = crate::lowrank::LowRankMatrix::new(q.clone(), s, q).unwrap();
        let g = DMatrix::<f64>::from_fn(n, n, |_, _| f64::sample_standard_normal(&mut rng));
        let b = (&g + g.transpose()) * 0.5;
        let f = FnRhs::new(move |_t: f64, y: &DenseArray<f64>| {
            let y = y.matrix_view();
            DenseArray::from_matrix(&b * y + y * &b)
        });
        let cfg = SubstepConfig::default();
        let m = check_structure(MatrixIntegrator::Bug, &f, &y0, Symmetry::Skew, 0.0, 0.1, &cfg).unwrap();
        let t = check_structure_tensor(&f, &TuckerTensor::from(&y0), TensorSymmetry::Antisymmetric, 0.0, 0.1, &cfg).unwrap();
        assert!(m.defect < 1e-12 && t.defect < 1e-12);
        let diff = rel(&t.step.y1.reconstruct(), &DenseArray::from_matrix(m.step.y1.reconstruct()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn unequal_modes_rejected_by_symmetry_check() {
        let y0 = random_tucker::<f64>(&[3, 4], &[2, 2], 1).unwrap();
        let f = FnRhs::new(|_t: f64, y: &DenseArray<f64>| y.clone());
        assert!(check_structure_tensor(&f, &y0, TensorSymmetry::Symmetric, 0.0, 0.1, &SubstepConfig::default()).is_err());
    }
}
