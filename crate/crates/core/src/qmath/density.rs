use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ket::real_part;
use super::{
    embed, jacobi_hermitian, ravel, unravel, HermitianOp, Ket, Matrix, QmathError,
    TOL_CONSTRUCTION, TOL_SPECTRAL,
};

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityOp {
    matrix: Matrix,
    dims: Vec<usize>,
}

impl DensityOp {
    pub fn new(matrix: Matrix, dims: Vec<usize>) -> Result<Self, QmathError> {
        let product: usize = dims.iter().product();
        if !matrix.is_square() || matrix.rows() != product {
            return Err(QmathError::DimensionMismatch {
                expected: product,
                found: matrix.rows(),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > TOL_CONSTRUCTION {
            return Err(QmathError::NotHermitian { defect });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TOL_CONSTRUCTION {
            return Err(QmathError::BadTrace { trace });
        }
        let min = jacobi_hermitian(&matrix)?.values[0];
        if min < -TOL_SPECTRAL {
            return Err(QmathError::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self { matrix, dims })
    }

    pub fn from_ket(ket: &Ket) -> Self {
        Self {
            matrix: Matrix::outer(ket.amplitudes(), ket.amplitudes()),
            dims: ket.dims().to_vec(),
        }
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self {
            matrix: Matrix::identity(n).scale(Complex64::new(1.0 / n as f64, 0.0)),
            dims,
        }
    }

    /// Convex combination `Σ w_k ρ_k`. Weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityOp)]) -> Result<Self, QmathError> {
        let first = parts.first().ok_or(QmathError::InvalidSubsystems)?.1;
        let n = first.matrix.rows();
        let mut m = Matrix::zeros(n, n);
        for (w, rho) in parts {
            if rho.dims != first.dims {
                return Err(QmathError::InvalidSubsystems);
            }
            m = &m + &rho.matrix.scale(Complex64::new(*w, 0.0));
        }
        Self::new(m, first.dims.clone())
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr(ρ²)`
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        acc
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi_hermitian(&self.matrix)
            .expect("density operators are Hermitian")
            .values
    }

    /// `Tr(ρ·Op)`
    pub fn expectation(&self, op: &HermitianOp) -> Result<f64, QmathError> {
        self.trace_with(op.matrix())
    }

    pub fn probability(&self, projector: &Matrix) -> Result<f64, QmathError> {
        self.trace_with(projector)
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn fidelity_with(&self, ket: &Ket) -> Result<f64, QmathError> {
        ket.sandwich(&self.matrix).and_then(real_part)
    }

    fn trace_with(&self, m: &Matrix) -> Result<f64, QmathError> {
        let n = self.dim();
        if m.rows() != n || m.cols() != n {
            return Err(QmathError::DimensionMismatch {
                expected: n,
                found: m.rows(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.matrix[(i, j)] * m[(j, i)];
            }
        }
        real_part(acc)
    }

    /// Reduced state on `keep` (kept subsystems appear in ascending order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOp, QmathError> {
        let n_sub = self.dims.len();
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        if kept.is_empty()
            || kept.windows(2).any(|w| w[0] == w[1])
            || kept.iter().any(|&k| k >= n_sub)
        {
            return Err(QmathError::InvalidSubsystems);
        }
        let traced: Vec<usize> = (0..n_sub).filter(|i| !kept.contains(i)).collect();
        let kept_dims: Vec<usize> = kept.iter().map(|&k| self.dims[k]).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| self.dims[k]).collect();
        let kept_len: usize = kept_dims.iter().product();
        let traced_len: usize = traced_dims.iter().product();

        let full_index = |kept_idx: usize, traced_idx: usize| {
            let kd = unravel(kept_idx, &kept_dims);
            let td = unravel(traced_idx, &traced_dims);
            let mut digits = vec![0; n_sub];
            for (pos, &k) in kept.iter().enumerate() {
                digits[k] = kd[pos];
            }
            for (pos, &t) in traced.iter().enumerate() {
                digits[t] = td[pos];
            }
            ravel(&digits, &self.dims)
        };

        let mut out = Matrix::zeros(kept_len, kept_len);
        for i in 0..kept_len {
            for j in 0..kept_len {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..traced_len {
                    acc += self.matrix[(full_index(i, t), full_index(j, t))];
                }
                out[(i, j)] = acc;
            }
        }
        Ok(DensityOp {
            matrix: out,
            dims: kept_dims,
        })
    }

    /// Suppresses coherences of `subsystem` in `basis` by the factor `1 − strength`.
    ///
    /// Implemented as `(1−λ)ρ + λ Σ_k P_k ρ P_k` with `P_k = |e_k⟩⟨e_k|` on the target.
    pub fn dephase(
        &self,
        subsystem: usize,
        basis: &[Vec<Complex64>],
        strength: f64,
    ) -> Result<DensityOp, QmathError> {
        if !(0.0..=1.0).contains(&strength) || strength.is_nan() {
            return Err(QmathError::StrengthOutOfRange(strength));
        }
        let d = *self
            .dims
            .get(subsystem)
            .ok_or(QmathError::InvalidSubsystems)?;
        if basis.len() != d || basis.iter().any(|v| v.len() != d) {
            return Err(QmathError::BadBasis);
        }
        for (i, u) in basis.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                let overlap: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (overlap - Complex64::new(target, 0.0)).norm() > TOL_CONSTRUCTION {
                    return Err(QmathError::BadBasis);
                }
            }
        }
        let keep = Complex64::new(1.0 - strength, 0.0);
        let mut out = self.matrix.scale(keep);
        for e in basis {
            let p = embed(&Matrix::outer(e, e), &self.dims, subsystem)?;
            let term = &(&p * &self.matrix) * &p;
            out = &out + &term.scale(Complex64::new(strength, 0.0));
        }
        Ok(DensityOp {
            matrix: out,
            dims: self.dims.clone(),
        })
    }
}

impl Ket {
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOp, QmathError> {
        self.density().partial_trace(keep)
    }
}
