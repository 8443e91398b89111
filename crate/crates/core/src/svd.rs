//! Truncated SVD by Householder QR followed by one-sided Jacobi on the
//! triangular factor.
//!
//! nalgebra's bidiagonal SVD returns wrong singular vectors for some
//! strongly rank-deficient inputs (e.g. a 64×64 rank-one matrix), which the
//! integrators hit whenever the rank exceeds the rank of the data. Jacobi is
//! slower but has high relative accuracy and always yields orthonormal
//! factors, completing the basis where singular values vanish.

use approx::AbsDiffEq;
use nalgebra::{ComplexField, DMatrix, DVector};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{real, Real, Scalar};

const MAX_SWEEPS: usize = 80;

/// Rank-r truncation `A ≈ U diag(σ) Vᴴ` with σ nonincreasing.
#[derive(Clone, Debug)]
pub struct TruncatedSvd<T: Scalar> {
    pub u: DMatrix<T>,
    pub sigma: DVector<Real<T>>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> TruncatedSvd<T> {
    pub fn s_matrix(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&self.sigma.map(T::from_real))
    }
}

/// Thin SVD `A = U diag(σ) Vᴴ` with `k = min(m, n)` triplets, largest first.
pub fn thin_svd<T: Scalar>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<Real<T>>, DMatrix<T>) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = thin_svd(&a.adjoint());
        return (v, s, u);
    }
    let (m, n) = a.shape();
    if n == 0 {
        return (DMatrix::zeros(m, 0), Vec::new(), DMatrix::zeros(0, 0));
    }
    let qr = a.clone().qr();
    let (q, r) = (qr.q(), qr.r());
    let (ur, s, v) = jacobi_square(r);
    (q * ur, s, v)
}

/// One-sided Jacobi on a square matrix: rotate column pairs until all are
/// numerically orthogonal, then read off `σⱼ = ‖aⱼ‖`.
fn jacobi_square<T: Scalar>(mut a: DMatrix<T>) -> (DMatrix<T>, Vec<Real<T>>, DMatrix<T>) {
    let n = a.ncols();
    let mut v = DMatrix::<T>::identity(n, n);
    let tol = Real::<T>::default_epsilon() * real::<T>(n as f64).sqrt();
    let one = Real::<T>::one();
    let two = one + one;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.modulus();
                if g.is_zero() || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conjugate().unscale(g);
                let zeta = (beta - alpha) / (two * g);
                let sign = if zeta < Real::<T>::zero() { -one } else { one };
                let t = sign / (zeta.abs() + (one + zeta * zeta).sqrt());
                let c = (one + t * t).sqrt().recip();
                let s = c * t;
                rotate(&mut a, p, q, phase, c, s);
                rotate(&mut v, p, q, phase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    // Columns below this are treated as exact zeros.
    let floor = Real::<T>::default_epsilon().powi(8);
    let mut sigma: Vec<Real<T>> = a.column_iter().map(|c| c.norm()).collect();
    let mut u = DMatrix::<T>::zeros(n, n);
    let mut missing = Vec::new();
    for j in 0..n {
        if sigma[j] > floor {
            u.set_column(j, &a.column(j).unscale(sigma[j]));
        } else {
            sigma[j] = Real::<T>::zero();
            missing.push(j);
        }
    }
    complete_basis(&mut u, &missing);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let u = DMatrix::from_fn(n, n, |i, k| u[(i, order[k])]);
    let v = DMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    let sigma = order.iter().map(|&k| sigma[k]).collect();
    (u, sigma, v)
}

/// `(x_p, x_q) ← (c x_p − s w x_q, s x_p + c w x_q)` with unit phase `w`.
fn rotate<T: Scalar>(x: &mut DMatrix<T>, p: usize, q: usize, phase: T, c: Real<T>, s: Real<T>) {
    for i in 0..x.nrows() {
        let xp = x[(i, p)];
        let xq = x[(i, q)] * phase;
        x[(i, p)] = xp.scale(c) - xq.scale(s);
        x[(i, q)] = xp.scale(s) + xq.scale(c);
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all other
/// columns, by Gram–Schmidt on the canonical basis.
fn complete_basis<T: Scalar>(u: &mut DMatrix<T>, missing: &[usize]) {
    let n = u.nrows();
    let half = real::<T>(0.5);
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut candidates = 0..n;
    for &j in missing {
        loop {
            let k = candidates.next().expect("canonical basis spans the space");
            let mut e = DVector::<T>::zeros(n);
            e[k] = T::one();
            for _ in 0..2 {
                for &i in &filled {
                    let proj = u.column(i).dotc(&e);
                    e -= u.column(i) * proj;
                }
            }
            let norm = e.norm();
            if norm > half {
                u.set_column(j, &e.unscale(norm));
                filled.push(j);
                break;
            }
        }
    }
}

/// Best rank-`r` Frobenius approximation of `a`.
pub fn svd_truncate<T: Scalar>(a: &DMatrix<T>, r: usize) -> Result<TruncatedSvd<T>> {
    let max = a.nrows().min(a.ncols());
    if r > max {
        return Err(Error::Rank { rank: r, max });
    }
    let (u, s, v) = thin_svd(a);
    Ok(TruncatedSvd {
        u: u.columns(0, r).into_owned(),
        sigma: DVector::from_iterator(r, s.into_iter().take(r)),
        v: v.columns(0, r).into_owned(),
    })
}

/// All singular values of `a`, largest first.
pub fn singular_values<T: Scalar>(a: &DMatrix<T>) -> Vec<Real<T>> {
    thin_svd(a).1
}
