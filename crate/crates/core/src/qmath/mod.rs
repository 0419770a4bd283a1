//! Dense complex linear algebra for Hilbert spaces of dimension ≤ 64.
//!
//! Everything here is a pure function over immutable values. The tolerance
//! ladder is fixed: construction checks at [`TOL_CONSTRUCTION`], spectral
//! checks at [`TOL_SPECTRAL`], end-to-end assertions at [`TOL_END_TO_END`].

mod density;
mod eigen;
mod ket;
mod matrix;
mod svd;

use num_complex::Complex64;
use thiserror::Error;

pub use density::DensityOp;
pub use eigen::{jacobi_hermitian, HermitianOp, Spectrum};
pub use ket::Ket;
pub use matrix::{gates, Matrix};
pub use svd::{singular_values, svd3, Real3, Svd3};

pub const TOL_CONSTRUCTION: f64 = 1e-12;
pub const TOL_SPECTRAL: f64 = 1e-10;
pub const TOL_END_TO_END: f64 = 1e-9;

pub const MAX_DIM: usize = 64;

pub(crate) const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmathError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("state norm {norm} differs from 1")]
    NotNormalized { norm: f64 },
    #[error("trace {trace} differs from 1")]
    BadTrace { trace: f64 },
    #[error("operator has negative eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("expectation has imaginary part {imag:e}")]
    ComplexExpectation { imag: f64 },
    #[error("invalid subsystem index set")]
    InvalidSubsystems,
    #[error("basis index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("label table does not match subsystem dimensions")]
    InvalidLabels,
    #[error("dephasing strength {0} outside [0, 1]")]
    StrengthOutOfRange(f64),
    #[error("basis is not orthonormal and complete on the target subsystem")]
    BadBasis,
}

/// Kronecker product for kets and observables alike.
pub trait Tensor {
    fn tensor_with(&self, other: &Self) -> Self;
}

impl Tensor for Ket {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for HermitianOp {
    fn tensor_with(&self, other: &Self) -> Self {
        self.tensor(other)
    }
}

impl Tensor for Matrix {
    fn tensor_with(&self, other: &Self) -> Self {
        self.kron(other)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor_with(b)
}

/// Row-major digits of `index` for the given subsystem dimensions.
pub fn unravel(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (slot, &d) in digits.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    digits
}

pub fn ravel(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I`, with `op` acting on consecutive subsystems starting at `first`.
pub fn embed(op: &Matrix, dims: &[usize], first: usize) -> Result<Matrix, QmathError> {
    let mut span = 1;
    let mut last = first;
    while span < op.rows() && last < dims.len() {
        span *= dims[last];
        last += 1;
    }
    if first >= dims.len() || span != op.rows() || !op.is_square() {
        return Err(QmathError::InvalidSubsystems);
    }
    let left: usize = dims[..first].iter().product();
    let right: usize = dims[last..].iter().product();
    Ok(Matrix::identity(left)
        .kron(op)
        .kron(&Matrix::identity(right)))
}

/// Standard basis vectors of a `d`-dimensional space.
pub fn computational_basis(d: usize) -> Vec<Vec<Complex64>> {
    (0..d)
        .map(|k| {
            let mut v = vec![C_ZERO; d];
            v[k] = C_ONE;
            v
        })
        .collect()
}
