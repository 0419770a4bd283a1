use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DensityOp, HermitianOp, Matrix, QmathError, TOL_CONSTRUCTION, TOL_SPECTRAL};

/// Normalized pure state over a labeled tensor-product basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ket {
    amplitudes: Vec<Complex64>,
    dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<Vec<String>>>,
}

impl Ket {
    /// Requires `Σ|a|² = 1` within 1e-12.
    pub fn new(amplitudes: Vec<Complex64>, dims: Vec<usize>) -> Result<Self, QmathError> {
        check_dims(&dims, amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if (norm - 1.0).abs() > TOL_CONSTRUCTION {
            return Err(QmathError::NotNormalized { norm });
        }
        Ok(Self {
            amplitudes,
            dims,
            labels: None,
        })
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>, dims: Vec<usize>) -> Result<Self, QmathError> {
        check_dims(&dims, amplitudes.len())?;
        let norm = norm_of(&amplitudes);
        if norm < 1e-300 {
            return Err(QmathError::NotNormalized { norm });
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            amplitudes,
            dims,
            labels: None,
        })
    }

    pub fn from_real(amplitudes: &[f64], dims: Vec<usize>) -> Result<Self, QmathError> {
        Self::new(
            amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            dims,
        )
    }

    pub fn basis(dims: Vec<usize>, index: usize) -> Result<Self, QmathError> {
        let len: usize = dims.iter().product();
        if index >= len {
            return Err(QmathError::IndexOutOfRange { index, len });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self::new(amplitudes, dims)
    }

    /// Single qubit `|0⟩` or `|1⟩`.
    pub fn qubit(bit: usize) -> Self {
        Self::basis(vec![2], bit).expect("bit must be 0 or 1")
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Self, QmathError> {
        if labels.len() != self.dims.len()
            || labels.iter().zip(&self.dims).any(|(l, &d)| l.len() != d)
        {
            return Err(QmathError::InvalidLabels);
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm_of(&self.amplitudes)
    }

    /// Human-readable basis label such as `z+,F_z+`, when labels are attached.
    pub fn basis_label(&self, index: usize) -> Option<String> {
        let labels = self.labels.as_ref()?;
        let digits = super::unravel(index, &self.dims);
        Some(
            digits
                .iter()
                .zip(labels)
                .map(|(&d, names)| names[d].as_str())
                .collect::<Vec<_>>()
                .join(","),
        )
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut amplitudes = Vec::with_capacity(self.len() * other.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ket {
            amplitudes,
            dims,
            labels,
        }
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> Result<Complex64, QmathError> {
        if self.len() != other.len() {
            return Err(QmathError::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &Ket) -> Result<f64, QmathError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Applies a unitary to the whole register; rejects non-unitary input.
    pub fn apply_unitary(&self, u: &Matrix) -> Result<Ket, QmathError> {
        let defect = u.unitarity_defect();
        if defect > TOL_CONSTRUCTION {
            return Err(QmathError::NotUnitary { defect });
        }
        let amplitudes = u.apply(&self.amplitudes)?;
        let out = Ket {
            amplitudes,
            dims: self.dims.clone(),
            labels: self.labels.clone(),
        };
        debug_assert!((out.norm() - 1.0).abs() < TOL_CONSTRUCTION);
        Ok(out)
    }

    /// Unnormalized `M|ψ⟩` as raw amplitudes.
    pub fn apply_raw(&self, m: &Matrix) -> Result<Vec<Complex64>, QmathError> {
        m.apply(&self.amplitudes)
    }

    /// Reorders subsystems: new subsystem `k` is old subsystem `order[k]`.
    pub fn permute_subsystems(&self, order: &[usize]) -> Result<Ket, QmathError> {
        let n = self.dims.len();
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(QmathError::InvalidSubsystems);
        }
        for &o in order {
            if o >= n || seen[o] {
                return Err(QmathError::InvalidSubsystems);
            }
            seen[o] = true;
        }
        let new_dims: Vec<usize> = order.iter().map(|&o| self.dims[o]).collect();
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.len()];
        for (old_index, amp) in self.amplitudes.iter().enumerate() {
            let digits = super::unravel(old_index, &self.dims);
            let new_digits: Vec<usize> = order.iter().map(|&o| digits[o]).collect();
            amplitudes[super::ravel(&new_digits, &new_dims)] = *amp;
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&o| l[o].clone()).collect());
        Ok(Ket {
            amplitudes,
            dims: new_dims,
            labels,
        })
    }

    /// `⟨ψ|M|ψ⟩` for an arbitrary square matrix.
    pub fn sandwich(&self, m: &Matrix) -> Result<Complex64, QmathError> {
        if m.rows() != self.len() || m.cols() != self.len() {
            return Err(QmathError::DimensionMismatch {
                expected: self.len(),
                found: m.rows(),
            });
        }
        let mv = m.apply(&self.amplitudes)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&mv)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn expectation(&self, op: &HermitianOp) -> Result<f64, QmathError> {
        real_part(self.sandwich(op.matrix())?)
    }

    /// Born probability for a projector.
    pub fn probability(&self, projector: &Matrix) -> Result<f64, QmathError> {
        real_part(self.sandwich(projector)?)
    }

    pub fn density(&self) -> DensityOp {
        DensityOp::from_ket(self)
    }
}

pub(crate) fn real_part(z: Complex64) -> Result<f64, QmathError> {
    if z.im.abs() > TOL_SPECTRAL {
        return Err(QmathError::ComplexExpectation { imag: z.im });
    }
    Ok(z.re)
}

fn norm_of(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn check_dims(dims: &[usize], len: usize) -> Result<(), QmathError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(QmathError::InvalidSubsystems);
    }
    let product: usize = dims.iter().product();
    if product != len {
        return Err(QmathError::DimensionMismatch {
            expected: product,
            found: len,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::gates::*;

    #[test]
    fn tensor_of_basis_states() {
        let k = Ket::qubit(0).tensor(&Ket::qubit(1));
        assert_eq!(k.dims(), &[2, 2]);
        assert_eq!(k.amplitudes()[1], Complex64::new(1.0, 0.0));
        assert!((k.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z_tensor_identity_on_10() {
        let k = Ket::qubit(1).tensor(&Ket::qubit(0));
        let zi = HermitianOp::new(pauli_z().kron(&Matrix::identity(2))).unwrap();
        assert!((k.expectation(&zi).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_of_z_on_zero() {
        let z = HermitianOp::new(pauli_z()).unwrap();
        assert_eq!(Ket::qubit(0).expectation(&z).unwrap(), 1.0);
    }

    #[test]
    fn singlet_zz_anticorrelation() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = Ket::from_real(&[0.0, h, -h, 0.0], vec![2, 2]).unwrap();
        let zz = HermitianOp::new(pauli_z().kron(&pauli_z())).unwrap();
        assert!((singlet.expectation(&zz).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized_and_bad_dims() {
        assert!(matches!(
            Ket::from_real(&[1.0, 1.0], vec![2]),
            Err(QmathError::NotNormalized { .. })
        ));
        assert!(Ket::from_real(&[1.0, 0.0, 0.0], vec![2]).is_err());
        assert!(Ket::normalized(vec![Complex64::new(0.0, 0.0); 2], vec![2]).is_err());
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let z = HermitianOp::new(pauli_z()).unwrap();
        let k = Ket::qubit(0).tensor(&Ket::qubit(0));
        assert!(matches!(
            k.expectation(&z),
            Err(QmathError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn permutation_swaps_subsystems() {
        let k = Ket::qubit(0).tensor(&Ket::qubit(1));
        let swapped = k.permute_subsystems(&[1, 0]).unwrap();
        assert_eq!(swapped, Ket::qubit(1).tensor(&Ket::qubit(0)));
        assert!(k.permute_subsystems(&[0, 0]).is_err());
    }

    #[test]
    fn labels_follow_tensor_and_permutation() {
        let spin = Ket::qubit(1)
            .with_labels(vec![vec!["z+".into(), "z-".into()]])
            .unwrap();
        let lab = Ket::qubit(0)
            .with_labels(vec![vec!["F_z+".into(), "F_z-".into()]])
            .unwrap();
        let k = spin.tensor(&lab);
        assert_eq!(k.basis_label(2).unwrap(), "z-,F_z+");
        let p = k.permute_subsystems(&[1, 0]).unwrap();
        assert_eq!(p.basis_label(1).unwrap(), "F_z+,z-");
    }

    #[test]
    fn apply_unitary_rejects_non_unitary() {
        let m = Matrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(
            Ket::qubit(0).apply_unitary(&m),
            Err(QmathError::NotUnitary { .. })
        ));
    }
}
