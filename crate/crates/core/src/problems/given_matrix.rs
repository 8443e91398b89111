use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Experiment, Problem, ProblemFlags};
use crate::error::{Error, Result};
use crate::ode::OdeRhs;
use crate::scalar::Scalar;
use crate::tensor::DenseArray;

const CACHE_SLOTS: usize = 8;

/// `W = (G − Gᵀ)/2` for a standard normal `G`.
pub fn random_skew<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| f64::sample_standard_normal(rng));
    (&g - g.transpose()) * 0.5
}

/// Spectral form of a real skew-symmetric `W`: `iW = Q Λ Qᴴ`, so that
/// `e^{tW} = Q e^{−itΛ} Qᴴ`.
#[derive(Clone, Debug)]
struct SkewSpectrum {
    q: DMatrix<Complex64>,
    lambda: DVector<f64>,
}

impl SkewSpectrum {
    fn new(w: &DMatrix<f64>) -> Self {
        let iw = w.map(|x| Complex64::new(0.0, x));
        let eig = iw.symmetric_eigen();
        Self { q: eig.eigenvectors, lambda: eig.eigenvalues }
    }

    fn exp(&self, t: f64) -> DMatrix<f64> {
        let mut scaled = self.q.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= Complex64::from_polar(1.0, -t * self.lambda[j]);
        }
        (scaled * self.q.adjoint()).map(|z| z.re)
    }
}

/// `e^{tW}` for real skew-symmetric `W`, through the eigendecomposition of
/// the Hermitian matrix `iW`.
pub fn expm_skew(w: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    SkewSpectrum::new(w).exp(t)
}

/// `A(t) = e^{tW₁} e^t D e^{tW₂ᵀ}` with `D = diag(2^{−1}, …, 2^{−N})`.
pub struct GivenMatrix {
    pub w1: DMatrix<f64>,
    pub w2: DMatrix<f64>,
    pub d: DVector<f64>,
    s1: SkewSpectrum,
    s2: SkewSpectrum,
    cache: Mutex<VecDeque<(u64, DMatrix<f64>)>>,
}

impl GivenMatrix {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("problem size must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = random_skew(n, &mut rng);
        let w2 = random_skew(n, &mut rng);
        let d = DVector::from_fn(n, |j, _| 2f64.powi(-(j as i32 + 1)));
        let (s1, s2) = (SkewSpectrum::new(&w1), SkewSpectrum::new(&w2));
        Ok(Self { w1, w2, d, s1, s2, cache: Mutex::new(VecDeque::with_capacity(CACHE_SLOTS)) })
    }

    /// `A(t)`, memoized for the last few distinct times.
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        let key = t.to_bits();
        if let Some((_, a)) = self.cache.lock().expect("cache lock").iter().find(|(k, _)| *k == key) {
            return a.clone();
        }
        let mut left = self.s1.exp(t);
        for (j, mut col) in left.column_iter_mut().enumerate() {
            col *= t.exp() * self.d[j];
        }
        let a = left * self.s2.exp(t).transpose();
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() == CACHE_SLOTS {
            cache.pop_front();
        }
        cache.push_back((key, a.clone()));
        a
    }

    /// `Ȧ(t) = W₁A + A + AW₂ᵀ`.
    pub fn derivative(&self, t: f64) -> DMatrix<f64> {
        let a = self.at(t);
        &self.w1 * &a + &a + &a * self.w2.transpose()
    }
}

impl OdeRhs<f64> for GivenMatrix {
    fn eval(&self, t: f64, _y: &DenseArray<f64>) -> DenseArray<f64> {
        DenseArray::from_matrix(self.derivative(t))
    }

    fn increment(&self, t0: f64, t1: f64) -> Option<DenseArray<f64>> {
        Some(DenseArray::from_matrix(self.at(t1) - self.at(t0)))
    }
}

/// The explicitly given time-dependent matrix with graded singular values
/// `e^t 2^{−j}`; its right-hand side ignores `Y`.
pub fn problem_given_matrix(n: usize, seed: u64) -> Result<Problem<f64>> {
    let a = Arc::new(GivenMatrix::new(n, seed)?);
    let initial = DenseArray::from_matrix(a.at(0.0));
    let sol = Arc::clone(&a);
    Ok(Problem {
        experiment: Experiment::GivenMatrix,
        dims: vec![n, n],
        rhs: a,
        initial,
        explicit_solution: Some(Arc::new(move |t| DenseArray::from_matrix(sol.at(t)))),
        flags: ProblemFlags { explicit_increment: true, ..Default::default() },
        seed,
    })
}
