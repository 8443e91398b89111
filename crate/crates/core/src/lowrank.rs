//! Factored low-rank matrices and Tucker tensors.

use nalgebra::DMatrix;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qr::qr_thin;
use crate::scalar::{Real, Scalar};
use crate::svd::svd_truncate;
use crate::tensor::{matricize, matrix_norm, multi_mode_product, DenseArray};

/// Common surface of the factored formats.
pub trait LowRankFormat<T: Scalar> {
    /// Ambient extents of the represented array.
    fn ambient_dims(&self) -> Vec<usize>;

    /// Dense reconstruction.
    fn to_dense(&self) -> DenseArray<T>;

    /// Frobenius norm from the small factor alone (bases are orthonormal).
    fn factored_norm(&self) -> Real<T>;

    /// Whether every factor entry is finite.
    fn is_finite(&self) -> bool;
}

/// Rank-r matrix `Y = U S Vᴴ` with orthonormal `U` (m×r) and `V` (n×r).
///
/// `S` is a general r×r matrix; the factorization is not unique.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankMatrix<T: Scalar> {
    pub u: DMatrix<T>,
    pub s: DMatrix<T>,
    pub v: DMatrix<T>,
}

impl<T: Scalar> LowRankMatrix<T> {
    pub fn new(u: DMatrix<T>, s: DMatrix<T>, v: DMatrix<T>) -> Result<Self> {
        let r = s.nrows();
        if s.ncols() != r || u.ncols() != r || v.ncols() != r {
            return Err(Error::Dimension(format!(
                "U {:?}, S {:?}, V {:?} do not share a rank",
                u.shape(),
                s.shape(),
                v.shape()
            )));
        }
        Ok(Self { u, s, v })
    }

    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// Dense `U S Vᴴ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        &self.u * &self.s * self.v.adjoint()
    }

    /// Largest deviation of `UᴴU` and `VᴴV` from the identity (Frobenius).
    pub fn orthonormality_defect(&self) -> Real<T> {
        let r = self.rank();
        let eye = DMatrix::<T>::identity(r, r);
        let du = matrix_norm(&(self.u.adjoint() * &self.u - &eye));
        let dv = matrix_norm(&(self.v.adjoint() * &self.v - &eye));
        if du > dv {
            du
        } else {
            dv
        }
    }

    /// Singular values of the represented matrix, from the r×r factor.
    pub fn singular_values(&self) -> Vec<Real<T>> {
        crate::svd::singular_values(&self.s)
    }
}

impl<T: Scalar> LowRankFormat<T> for LowRankMatrix<T> {
    fn ambient_dims(&self) -> Vec<usize> {
        vec![self.nrows(), self.ncols()]
    }

    fn to_dense(&self) -> DenseArray<T> {
        DenseArray::from_matrix(self.reconstruct())
    }

    fn factored_norm(&self) -> Real<T> {
        matrix_norm(&self.s)
    }

    fn is_finite(&self) -> bool {
        self.u.iter().chain(self.s.iter()).chain(self.v.iter()).all(|x| x.is_finite())
    }
}

/// Tucker tensor `Y = C ×₁ U₁ ⋯ ×_d U_d` with orthonormal bases.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerTensor<T: Scalar> {
    pub core: DenseArray<T>,
    pub bases: Vec<DMatrix<T>>,
}

impl<T: Scalar> TuckerTensor<T> {
    pub fn new(core: DenseArray<T>, bases: Vec<DMatrix<T>>) -> Result<Self> {
        if bases.len() != core.order() {
            return Err(Error::Dimension(format!(
                "order-{} core with {} bases",
                core.order(),
                bases.len()
            )));
        }
        for (i, (u, &r)) in bases.iter().zip(core.dims()).enumerate() {
            if u.ncols() != r {
                return Err(Error::Dimension(format!(
                    "basis {i} has {} columns, core extent is {r}",
                    u.ncols()
                )));
            }
        }
        Ok(Self { core, bases })
    }

    pub fn order(&self) -> usize {
        self.core.order()
    }

    pub fn ranks(&self) -> &[usize] {
        self.core.dims()
    }

    pub fn reconstruct(&self) -> DenseArray<T> {
        let mats: Vec<Option<&DMatrix<T>>> = self.bases.iter().map(Some).collect();
        multi_mode_product(&self.core, &mats).expect("bases validated against core extents")
    }

    pub fn orthonormality_defect(&self) -> Real<T> {
        self.bases
            .iter()
            .map(|u| {
                let r = u.ncols();
                matrix_norm(&(u.adjoint() * u - DMatrix::<T>::identity(r, r)))
            })
            .fold(Real::<T>::zero(), |a, b| if b > a { b } else { a })
    }

    /// Views an order-2 Tucker tensor as `U S Vᴴ`.
    pub fn to_lowrank_matrix(&self) -> Result<LowRankMatrix<T>> {
        if self.order() != 2 {
            return Err(Error::Dimension("only order-2 Tucker tensors are matrices".into()));
        }
        let s = self.core.clone().into_matrix();
        LowRankMatrix::new(self.bases[0].clone(), s, self.bases[1].map(|x| x.conjugate()))
    }
}

impl<T: Scalar> From<&LowRankMatrix<T>> for TuckerTensor<T> {
    /// `U S Vᴴ = S ×₁ U ×₂ conj(V)`.
    fn from(y: &LowRankMatrix<T>) -> Self {
        TuckerTensor {
            core: DenseArray::from_matrix(y.s.clone()),
            bases: vec![y.u.clone(), y.v.map(|x| x.conjugate())],
        }
    }
}

impl<T: Scalar> LowRankFormat<T> for TuckerTensor<T> {
    fn ambient_dims(&self) -> Vec<usize> {
        self.bases.iter().map(|u| u.nrows()).collect()
    }

    fn to_dense(&self) -> DenseArray<T> {
        self.reconstruct()
    }

    fn factored_norm(&self) -> Real<T> {
        self.core.frobenius_norm()
    }

    fn is_finite(&self) -> bool {
        self.core.is_finite() && self.bases.iter().all(|u| u.iter().all(|x| x.is_finite()))
    }
}

/// Rank-`r` truncated SVD of a dense matrix, as a [`LowRankMatrix`].
pub fn truncate_matrix<T: Scalar>(a: &DMatrix<T>, r: usize) -> Result<LowRankMatrix<T>> {
    let t = svd_truncate(a, r)?;
    let s = t.s_matrix();
    LowRankMatrix::new(t.u, s, t.v)
}

/// Higher-order SVD truncation to multilinear rank `ranks`: each basis holds
/// the leading left singular vectors of the corresponding matricization, and
/// the core is the projection of `a` onto those bases.
pub fn truncate_tucker<T: Scalar>(a: &DenseArray<T>, ranks: &[usize]) -> Result<TuckerTensor<T>> {
    if ranks.len() != a.order() {
        return Err(Error::Dimension(format!(
            "{} ranks for an order-{} tensor",
            ranks.len(),
            a.order()
        )));
    }
    let mut bases = Vec::with_capacity(ranks.len());
    for (i, (&r, &n)) in ranks.iter().zip(a.dims()).enumerate() {
        if r == 0 || r > n {
            return Err(Error::Rank { rank: r, max: n });
        }
        let m = matricize(a, i)?;
        bases.push(svd_truncate(&m, r)?.u);
    }
    let adj: Vec<DMatrix<T>> = bases.iter().map(|u| u.adjoint()).collect();
    let mats: Vec<Option<&DMatrix<T>>> = adj.iter().map(Some).collect();
    let core = multi_mode_product(a, &mats)?;
    TuckerTensor::new(core, bases)
}

/// Random n×r matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal<T: Scalar, R: rand::Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> DMatrix<T> {
    let g = DMatrix::from_fn(n, r, |_, _| T::sample_standard_normal(rng));
    qr_thin(&g).expect("n >= r checked by callers").q
}

/// Seeded random rank-`r` matrix with Gaussian `S`.
pub fn random_lowrank_matrix<T: Scalar>(m: usize, n: usize, r: usize, seed: u64) -> Result<LowRankMatrix<T>> {
    if r > m.min(n) {
        return Err(Error::Rank { rank: r, max: m.min(n) });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthonormal(m, r, &mut rng);
    let v = random_orthonormal(n, r, &mut rng);
    let s = DMatrix::from_fn(r, r, |_, _| T::sample_standard_normal(&mut rng));
    LowRankMatrix::new(u, s, v)
}

/// Seeded random Tucker tensor with Gaussian core.
pub fn random_tucker<T: Scalar>(dims: &[usize], ranks: &[usize], seed: u64) -> Result<TuckerTensor<T>> {
    if dims.len() != ranks.len() {
        return Err(Error::Dimension("dims and ranks differ in length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bases = Vec::with_capacity(dims.len());
    for (&n, &r) in dims.iter().zip(ranks) {
        if r == 0 || r > n {
            return Err(Error::Rank { rank: r, max: n });
        }
        bases.push(random_orthonormal(n, r, &mut rng));
    }
    let core = DenseArray::from_fn(ranks, |_| T::sample_standard_normal(&mut rng));
    TuckerTensor::new(core, bases)
}

/// Orthogonal projection onto the tangent space of the rank-r manifold at `y`:
/// `P(Y)Z = Z VVᴴ − UUᴴ Z VVᴴ + UUᴴ Z`.
pub fn tangent_project<T: Scalar>(y: &LowRankMatrix<T>, z: &DMatrix<T>) -> Result<DMatrix<T>> {
    if z.shape() != (y.nrows(), y.ncols()) {
        return Err(Error::Dimension(format!(
            "{:?} direction for a {}x{} low-rank point",
            z.shape(),
            y.nrows(),
            y.ncols()
        )));
    }
    let (u, v) = (&y.u, &y.v);
    let zv = z * v;
    let uhz = u.adjoint() * z;
    let uhzv = &uhz * v;
    Ok(&zv * v.adjoint() - u * uhzv * v.adjoint() + u * uhz)
}

/// Norm of the non-tangential part `‖(I − P(Y)) Z‖_F`.
pub fn tangent_defect<T: Scalar>(y: &LowRankMatrix<T>, z: &DMatrix<T>) -> Result<Real<T>> {
    let p = tangent_project(y, z)?;
    Ok(matrix_norm(&(z - p)))
}
