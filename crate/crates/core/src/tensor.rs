//! Dense tensors and the reshaping kernels used by every integrator step.
//!
//! Storage is colexicographic: the first index runs fastest, so an order-2
//! array has the same memory layout as a column-major [`DMatrix`]. Modes are
//! zero-based throughout the API.

use nalgebra::{ComplexField, DMatrix, DMatrixView};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Order-d array of scalars in colexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseArray<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> DenseArray<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("tensor order must be at least 1".into()));
        }
        if dims.iter().any(|&n| n == 0) {
            return Err(Error::Dimension(format!("extents must be positive, got {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::Dimension(format!(
                "dims {dims:?} need {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Self { dims: dims.to_vec(), data: vec![T::zero(); len] }
    }

    /// Builds an array by evaluating `f` at every multi-index.
    pub fn from_fn(dims: &[usize], mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; dims.len()];
        for _ in 0..len {
            data.push(f(&idx));
            for (k, n) in dims.iter().enumerate() {
                idx[k] += 1;
                if idx[k] < *n {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self { dims: dims.to_vec(), data }
    }

    /// Wraps a matrix as an order-2 array without copying.
    pub fn from_matrix(m: DMatrix<T>) -> Self {
        let dims = vec![m.nrows(), m.ncols()];
        let data: Vec<T> = m.data.into();
        Self { dims, data }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut offset = 0;
        let mut stride = 1;
        for (i, n) in idx.iter().zip(&self.dims) {
            offset += i * stride;
            stride *= n;
        }
        offset
    }

    pub fn get(&self, idx: &[usize]) -> T {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let k = self.linear_index(idx);
        self.data[k] = value;
    }

    /// Borrows an order-2 array as a matrix view.
    ///
    /// Panics if the array is not of order 2.
    pub fn matrix_view(&self) -> DMatrixView<'_, T> {
        assert_eq!(self.order(), 2, "matrix_view needs an order-2 array");
        DMatrixView::from_slice(&self.data, self.dims[0], self.dims[1])
    }

    /// Converts an order-2 array into a matrix without copying.
    ///
    /// Panics if the array is not of order 2.
    pub fn into_matrix(self) -> DMatrix<T> {
        assert_eq!(self.order(), 2, "into_matrix needs an order-2 array");
        DMatrix::from_vec(self.dims[0], self.dims[1], self.data)
    }

    pub fn frobenius_norm(&self) -> Real<T> {
        frobenius_norm(self)
    }

    /// Euclidean inner product `⟨self, other⟩ = Σ conj(a) b`.
    pub fn inner(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc + a.conjugate() * *b)
    }

    pub fn scale(&mut self, a: T) {
        self.data.iter_mut().for_each(|x| *x *= a);
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert_eq!(self.dims, x.dims);
        self.data.iter_mut().zip(&x.data).for_each(|(y, x)| *y += a * *x);
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-T::one(), other);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(T::one(), other);
        out
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { dims: self.dims.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Reorders modes: mode `k` of the result is mode `perm[k]` of `self`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<Self> {
        let d = self.order();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Dimension(format!("{perm:?} is not a permutation of 0..{d}")));
        }
        let new_dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut src = vec![0usize; d];
        Ok(Self::from_fn(&new_dims, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src)
        }))
    }
}

/// Splits `dims` around `mode` into (product before, extent, product after).
fn split_dims(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = dims[..mode].iter().product();
    let right = dims[mode + 1..].iter().product();
    (left, dims[mode], right)
}

fn check_mode(order: usize, mode: usize) -> Result<()> {
    if mode >= order {
        Err(Error::Mode { mode, order })
    } else {
        Ok(())
    }
}

/// Mode-`mode` matricization: rows indexed by `mode`, columns enumerate the
/// remaining modes colexicographically.
pub fn matricize<T: Scalar>(t: &DenseArray<T>, mode: usize) -> Result<DMatrix<T>> {
    check_mode(t.order(), mode)?;
    let (left, n, right) = split_dims(&t.dims, mode);
    if left == 1 {
        return Ok(DMatrix::from_column_slice(n, right, &t.data));
    }
    let mut out = DMatrix::zeros(n, left * right);
    for c in 0..right {
        let slab = &t.data[c * left * n..(c + 1) * left * n];
        for b in 0..n {
            for a in 0..left {
                out[(b, a + left * c)] = slab[a + left * b];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`matricize`] for the given target `dims`.
pub fn tensorize<T: Scalar>(m: &DMatrix<T>, mode: usize, dims: &[usize]) -> Result<DenseArray<T>> {
    check_mode(dims.len(), mode)?;
    let (left, n, right) = split_dims(dims, mode);
    if m.nrows() != n || m.ncols() != left * right {
        return Err(Error::Dimension(format!(
            "{}x{} matrix cannot be tensorized along mode {mode} into {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    if left == 1 {
        return DenseArray::new(dims.to_vec(), m.as_slice().to_vec());
    }
    let mut data = vec![T::zero(); left * n * right];
    for c in 0..right {
        let slab = &mut data[c * left * n..(c + 1) * left * n];
        for b in 0..n {
            for a in 0..left {
                slab[a + left * b] = m[(b, a + left * c)];
            }
        }
    }
    DenseArray::new(dims.to_vec(), data)
}

/// Mode product `T ×_mode M` with `M` of size `m × dims[mode]`.
pub fn mode_product<T: Scalar>(t: &DenseArray<T>, mode: usize, m: &DMatrix<T>) -> Result<DenseArray<T>> {
    check_mode(t.order(), mode)?;
    let (left, n, right) = split_dims(&t.dims, mode);
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "mode-{mode} product needs {n} columns, matrix is {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let rows = m.nrows();
    let mut dims = t.dims.clone();
    dims[mode] = rows;
    if left == 1 {
        let x = DMatrixView::from_slice(&t.data, n, right);
        let y = m * x;
        return DenseArray::new(dims, y.data.into());
    }
    // Each trailing slab is a left×n column-major block; multiply it by Mᵀ.
    let mt = m.transpose();
    let mut data = Vec::with_capacity(left * rows * right);
    for c in 0..right {
        let slab = DMatrixView::from_slice(&t.data[c * left * n..(c + 1) * left * n], left, n);
        let y = slab * &mt;
        data.extend_from_slice(y.as_slice());
    }
    DenseArray::new(dims, data)
}

/// Applies `mats[i]` along mode `i` for every `Some` entry.
pub fn multi_mode_product<T: Scalar>(
    t: &DenseArray<T>,
    mats: &[Option<&DMatrix<T>>],
) -> Result<DenseArray<T>> {
    if mats.len() != t.order() {
        return Err(Error::Dimension(format!(
            "{} matrices supplied for an order-{} tensor",
            mats.len(),
            t.order()
        )));
    }
    let mut out: Option<DenseArray<T>> = None;
    for (i, m) in mats.iter().enumerate() {
        if let Some(m) = m {
            let src = out.as_ref().unwrap_or(t);
            out = Some(mode_product(src, i, m)?);
        }
    }
    Ok(out.unwrap_or_else(|| t.clone()))
}

/// Euclidean norm of the entry vector.
pub fn frobenius_norm<T: Scalar>(t: &DenseArray<T>) -> Real<T> {
    t.data
        .iter()
        .fold(Real::<T>::zero(), |acc, x| acc + x.modulus_squared())
        .sqrt()
}

/// Frobenius norm of a matrix, through the same kernel as [`frobenius_norm`].
pub fn matrix_norm<T: Scalar>(m: &DMatrix<T>) -> Real<T> {
    m.iter().fold(Real::<T>::zero(), |acc, x| acc + x.modulus_squared()).sqrt()
}
