//! Robust dynamical low-rank integrators.
//!
//! The crate evolves low-rank approximations of matrix and tensor
//! differential equations `Ȧ = F(t, A)`:
//!
//! * [`matrix`]: the basis-update & Galerkin (BUG) integrator, its
//!   parallel-S variant, the projector-splitting (KSL) integrator and a
//!   classical RK4 on the factor equations for comparison;
//! * [`tucker`]: the BUG integrator for Tucker tensors of fixed multilinear
//!   rank;
//! * [`problems`]: benchmark problems with exact or reference solutions.
//!
//! All numerics are generic over [`Scalar`] (real or complex, single or
//! double precision); the aliases below fix the common double-precision
//! instantiations.

pub mod error;
pub mod krylov;
pub mod lowrank;
pub mod matrix;
pub mod ode;
pub mod problems;
pub mod qr;
pub mod scalar;
pub mod svd;
pub mod tensor;
pub mod tucker;

pub use error::{Error, Result};
pub use lowrank::{LowRankFormat, LowRankMatrix, TuckerTensor};
pub use ode::{OdeRhs, SubstepConfig, SubstepMethod};
pub use scalar::{Real, Scalar};
pub use tensor::DenseArray;

pub use num_complex::Complex64;

pub type RealArray = DenseArray<f64>;
pub type ComplexArray = DenseArray<Complex64>;
pub type RealLowRank = LowRankMatrix<f64>;
pub type ComplexLowRank = LowRankMatrix<Complex64>;
pub type RealTucker = TuckerTensor<f64>;
pub type ComplexTucker = TuckerTensor<Complex64>;
