//! Thin Householder QR with a reproducible sign convention.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// `A = Q R` with `Q` n×r orthonormal and `R` r×r upper triangular with a
/// real, nonnegative diagonal.
#[derive(Clone, Debug)]
pub struct QrFactors<T: Scalar> {
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
}

/// Thin QR of an n×r matrix (n ≥ r) by Householder reflections.
///
/// Rank-deficient input is accepted: a column that is exactly annihilated
/// yields a zero diagonal entry in `R`, and the matching column of `Q` is
/// still produced by the accumulated reflectors, so `Q` always has r
/// orthonormal columns.
pub fn qr_thin<T: Scalar>(a: &DMatrix<T>) -> Result<QrFactors<T>> {
    let (n, r) = a.shape();
    if n < r {
        return Err(Error::Dimension(format!("thin QR needs rows >= cols, got {n}x{r}")));
    }
    let mut work = a.clone();
    // (v, beta) with H = I - beta v vᴴ, v living in rows k..n.
    let mut reflectors: Vec<Option<(DVector<T>, T)>> = Vec::with_capacity(r);

    for k in 0..r {
        let x = work.view((k, k), (n - k, 1)).column(0).into_owned();
        let alpha = x.norm();
        if alpha.is_zero() {
            reflectors.push(None);
            continue;
        }
        let x0 = x[0];
        let x0_abs = x0.modulus();
        let phase = if x0_abs.is_zero() { T::one() } else { x0.unscale(x0_abs) };
        let mut v = x;
        v[0] += phase.scale(alpha);
        let vnorm2 = v.norm_squared();
        let beta = T::from_real(Real::<T>::one() + Real::<T>::one()).unscale(vnorm2);

        let mut block = work.view_mut((k, k), (n - k, r - k));
        let w = v.adjoint() * &block;
        block -= (&v * w) * beta;
        // Exact zeros below the diagonal keep R cleanly triangular.
        for i in k + 1..n {
            work[(i, k)] = T::zero();
        }
        reflectors.push(Some((v, beta)));
    }

    let mut rmat = work.rows(0, r).upper_triangle();

    let mut q = DMatrix::<T>::identity(n, r);
    for k in (0..r).rev() {
        if let Some((v, beta)) = &reflectors[k] {
            let mut block = q.view_mut((k, k), (n - k, r - k));
            let w = v.adjoint() * &block;
            block -= (v * w) * *beta;
        }
    }

    // Rotate each diagonal entry of R onto the nonnegative real axis.
    for k in 0..r {
        let d = rmat[(k, k)];
        let m = d.modulus();
        if m.is_zero() {
            rmat[(k, k)] = T::zero();
            continue;
        }
        let phase = d.unscale(m);
        let conj = phase.conjugate();
        for j in k..r {
            rmat[(k, j)] *= conj;
        }
        rmat[(k, k)] = T::from_real(m);
        for i in 0..n {
            q[(i, k)] *= phase;
        }
    }

    Ok(QrFactors { q, r: rmat })
}
