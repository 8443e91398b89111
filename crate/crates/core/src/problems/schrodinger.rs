use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Experiment, Problem, ProblemFlags};
use crate::error::{Error, Result};
use crate::lowrank::{random_orthonormal, TuckerTensor};
use crate::ode::OdeRhs;
use crate::tensor::DenseArray;

/// The two-dimensional problem lives on `[−7.5, 7.5)²`.
pub const DOMAIN_HALF_WIDTH: f64 = 7.5;

/// `Y ↦ −H[Y]` with `H[Y] = −½ Σⱼ Y ×ⱼ D + Y ×₁ V ⋯ ×_d V`,
/// `D = tridiag(−1, 2, −1)` and `V = diag(1 − cos(2πj/N))`,
/// `j = −N/2, …, N/2 − 1`.
pub struct ImagSchrodinger {
    n: usize,
    d: usize,
    /// `∏ⱼ V[iⱼ]` in the array's linear order.
    potential: Vec<f64>,
}

impl ImagSchrodinger {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Config(format!("grid size must be even and at least 2, got {n}")));
        }
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        let v: Vec<f64> = (0..n).map(|k| 1.0 - (2.0 * PI * (k as f64 - (n / 2) as f64) / n as f64).cos()).collect();
        let dims = vec![n; d];
        let potential = DenseArray::from_fn(&dims, |idx| idx.iter().map(|&i| v[i]).product()).into_data();
        Ok(Self { n, d, potential })
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }

    /// `H[Y]`.
    pub fn hamiltonian(&self, y: &DenseArray<f64>) -> DenseArray<f64> {
        assert_eq!(y.dims(), self.dims().as_slice(), "state does not match the grid");
        let n = self.n;
        let src = y.data();
        let mut out: Vec<f64> = src.iter().zip(&self.potential).map(|(a, b)| a * b).collect();
        let mut stride = 1;
        for _ in 0..self.d {
            for (p, o) in out.iter_mut().enumerate() {
                let i = (p / stride) % n;
                let mut dy = 2.0 * src[p];
                if i > 0 {
                    dy -= src[p - stride];
                }
                if i + 1 < n {
                    dy -= src[p + stride];
                }
                *o -= 0.5 * dy;
            }
            stride *= n;
        }
        DenseArray::new(y.dims().to_vec(), out).expect("same extents")
    }
}

impl OdeRhs<f64> for ImagSchrodinger {
    fn eval(&self, _t: f64, y: &DenseArray<f64>) -> DenseArray<f64> {
        self.hamiltonian(y).scaled(-1.0)
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Imaginary-time Schrödinger equation `Ẏ = −H[Y]` on an `N^d` grid, started
/// from `C0 ×ᵢ Uᵢ⁰` with seeded random orthogonal `Uᵢ⁰` and a diagonal core
/// `(C0)_{j…j} = 10^{−j}`, `j = 1, …, N`.
pub fn problem_imag_schrodinger(n: usize, d: usize, seed: u64) -> Result<Problem<f64>> {
    let h = Arc::new(ImagSchrodinger::new(n, d)?);
    let dims = h.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases: Vec<DMatrix<f64>> = (0..d).map(|_| random_orthonormal(n, n, &mut rng)).collect();
    let core = DenseArray::from_fn(&dims, |idx| {
        if idx.iter().all(|&i| i == idx[0]) {
            10f64.powi(-(idx[0] as i32 + 1))
        } else {
            0.0
        }
    });
    let initial = TuckerTensor::new(core, bases)?.reconstruct();
    Ok(Problem {
        experiment: Experiment::ImagSchrodinger,
        dims,
        rhs: h,
        initial,
        explicit_solution: None,
        flags: ProblemFlags { linear: true, autonomous: true, ..Default::default() },
        seed,
    })
}

/// Grid points `−7.5 + k·15/N`, `k = 0, …, N − 1`.
pub fn schrodinger_grid(n: usize) -> Vec<f64> {
    let h = 2.0 * DOMAIN_HALF_WIDTH / n as f64;
    (0..n).map(|k| -DOMAIN_HALF_WIDTH + k as f64 * h).collect()
}

/// Dense Fourier spectral second-derivative matrix for `N` (even) periodic
/// points on an interval of the given length.
pub fn fourier_second_derivative(n: usize, length: f64) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = (2.0 * PI / length).powi(2);
    DMatrix::from_fn(n, n, |j, k| {
        let entry = if j == k {
            -PI * PI / (3.0 * h * h) - 1.0 / 6.0
        } else {
            let m = j as f64 - k as f64;
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            -sign / (2.0 * (m * h / 2.0).sin().powi(2))
        };
        entry * scale
    })
}

/// `Y ↦ −i(−½(D₂Y + YD₂ᵀ) + V ⊙ Y)` with `V(x, y) = ½(2x² − 2xy + 3y²)`.
pub struct Schrodinger2d {
    d2: DMatrix<f64>,
    potential: DMatrix<f64>,
}

impl Schrodinger2d {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Config(format!("grid size must be even and at least 2, got {n}")));
        }
        let d2 = fourier_second_derivative(n, 2.0 * DOMAIN_HALF_WIDTH);
        let x = schrodinger_grid(n);
        let potential = DMatrix::from_fn(n, n, |j, k| 0.5 * (2.0 * x[j] * x[j] - 2.0 * x[j] * x[k] + 3.0 * x[k] * x[k]));
        Ok(Self { d2, potential })
    }

    pub fn potential(&self) -> &DMatrix<f64> {
        &self.potential
    }

    /// The Hermitian operator `H` with `F = −iH`.
    pub fn hamiltonian(&self, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        // D₂ is real, so the Laplacian splits into real products, which run
        // through the optimized f64 kernel.
        let lap = |part: DMatrix<f64>| &self.d2 * &part + part * self.d2.transpose();
        let re = lap(y.map(|z| z.re));
        let im = lap(y.map(|z| z.im));
        DMatrix::from_fn(y.nrows(), y.ncols(), |j, k| {
            Complex64::new(-0.5 * re[(j, k)], -0.5 * im[(j, k)]) + y[(j, k)] * self.potential[(j, k)]
        })
    }
}

impl OdeRhs<Complex64> for Schrodinger2d {
    fn eval(&self, _t: f64, y: &DenseArray<Complex64>) -> DenseArray<Complex64> {
        let hy = self.hamiltonian(&y.matrix_view().into_owned());
        DenseArray::from_matrix(hy * Complex64::new(0.0, -1.0))
    }

    fn is_linear(&self) -> bool {
        true
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Schrödinger equation with potential `V(x) = ½xᵀAx`, `A = [[2, −1], [−1, 3]]`,
/// on an `N × N` Fourier grid over `[−7.5, 7.5)²`, started from the Gaussian
/// `π^{−1/2} exp(−½x₁² − ½(x₂ − 1)²)`.
pub fn problem_schrodinger_2d(n: usize) -> Result<Problem<Complex64>> {
    let h = Arc::new(Schrodinger2d::new(n)?);
    let x = schrodinger_grid(n);
    let u0 = DMatrix::from_fn(n, n, |j, k| {
        Complex64::from(PI.sqrt().recip() * (-0.5 * x[j] * x[j] - 0.5 * (x[k] - 1.0).powi(2)).exp())
    });
    Ok(Problem {
        experiment: Experiment::Schrodinger2d,
        dims: vec![n, n],
        rhs: h,
        initial: DenseArray::from_matrix(u0),
        explicit_solution: None,
        flags: ProblemFlags { linear: true, autonomous: true, hermitian_generator: true, ..Default::default() },
        seed: 0,
    })
}
