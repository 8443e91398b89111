//! Dense matrix exponential and its Krylov action `e^{τA} v`.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::scalar::{real, Real, Scalar};

/// Subdiagonal size (relative to ‖A vⱼ‖) below which Arnoldi stops early.
pub const HAPPY_BREAKDOWN: f64 = 1e-14;

// Padé [13/13] numerator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm<T: Scalar>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| crate::scalar::real_to_f64::<T>(x.modulus())).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a [13/13] Padé approximant.
pub fn expm<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let eye = DMatrix::<T>::identity(n, n);
    let norm = one_norm(a);
    if norm == 0.0 {
        return eye;
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.map(|x| x.unscale(real::<T>(2f64.powi(s))));
    let b: Vec<T> = PADE13.iter().map(|&c| T::from_real(real::<T>(c))).collect();

    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &eye * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &eye * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).unwrap_or_else(|| DMatrix::from_element(n, n, T::from_real(real::<T>(f64::NAN))));
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Approximates `e^{τA} v` in a Krylov space of dimension at most
/// `krylov_dim`, where `apply` evaluates `A x`.
///
/// Arnoldi uses modified Gram–Schmidt with one reorthogonalization pass and
/// stops early on a happy breakdown.
pub fn expv<T: Scalar>(
    apply: impl Fn(&DVector<T>) -> DVector<T>,
    tau: Real<T>,
    v: &DVector<T>,
    krylov_dim: usize,
) -> DVector<T> {
    let beta = v.norm();
    if beta.is_zero() {
        return v.clone();
    }
    let m_max = krylov_dim.min(v.len()).max(1);
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(m_max + 1);
    basis.push(v.unscale(beta));
    let mut h = DMatrix::<T>::zeros(m_max + 1, m_max);
    let mut m = m_max;

    for j in 0..m_max {
        let mut w = apply(&basis[j]);
        let w_norm = w.norm();
        for _pass in 0..2 {
            for (i, vi) in basis.iter().enumerate() {
                let c = vi.dotc(&w);
                h[(i, j)] += c;
                w.axpy(-c, vi, T::one());
            }
        }
        let next = w.norm();
        h[(j + 1, j)] = T::from_real(next);
        if next <= real::<T>(HAPPY_BREAKDOWN) * w_norm || next.is_zero() {
            m = j + 1;
            break;
        }
        if j + 1 < m_max {
            basis.push(w.unscale(next));
        }
    }

    let hm = h.view((0, 0), (m, m)).map(|x| x.scale(tau));
    let e = expm(&hm);
    let mut out = DVector::<T>::zeros(v.len());
    for k in 0..m {
        out.axpy(e[(k, 0)].scale(beta), &basis[k], T::one());
    }
    out
}
