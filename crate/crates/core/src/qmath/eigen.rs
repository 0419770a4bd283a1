use std::sync::OnceLock;

use num_complex::Complex64;

use super::{Matrix, QmathError, TOL_CONSTRUCTION};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Column `k` of `vectors` is the eigenvector for `values[k]`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Spectrum {
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }
}

/// Cyclic complex Jacobi diagonalization.
///
/// Each pivot `(p, q)` is handled by first rotating the phase of column `q`
/// so that `h[p][q]` becomes real, then applying a real Givens rotation.
pub fn jacobi_hermitian(m: &Matrix) -> Result<Spectrum, QmathError> {
    if !m.is_square() {
        return Err(QmathError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let defect = m.hermiticity_defect();
    if defect > TOL_CONSTRUCTION {
        return Err(QmathError::NotHermitian { defect });
    }
    let n = m.rows();
    let mut h = m.clone();
    let mut w = Matrix::identity(n);
    let scale = h.max_abs().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| h[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = h[(p, q)];
                let babs = b.norm();
                if babs <= 1e-300 {
                    continue;
                }
                // phase: column q *= e^{-iφ}, row q *= e^{iφ}
                let phase = b / babs;
                let phase_c = phase.conj();
                for k in 0..n {
                    h[(k, q)] *= phase_c;
                }
                for k in 0..n {
                    h[(q, k)] *= phase;
                }
                for k in 0..n {
                    w[(k, q)] *= phase_c;
                }

                let a = h[(p, p)].re;
                let d = h[(q, q)].re;
                let tau = (d - a) / (2.0 * babs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let hkp = h[(k, p)];
                    let hkq = h[(k, q)];
                    h[(k, p)] = hkp * c - hkq * s;
                    h[(k, q)] = hkp * s + hkq * c;
                }
                for k in 0..n {
                    let hpk = h[(p, k)];
                    let hqk = h[(q, k)];
                    h[(p, k)] = hpk * c - hqk * s;
                    h[(q, k)] = hpk * s + hqk * c;
                }
                h[(p, q)] = Complex64::new(0.0, 0.0);
                h[(q, p)] = Complex64::new(0.0, 0.0);
                h[(p, p)] = Complex64::new(h[(p, p)].re, 0.0);
                h[(q, q)] = Complex64::new(h[(q, q)].re, 0.0);

                for k in 0..n {
                    let wkp = w[(k, p)];
                    let wkq = w[(k, q)];
                    w[(k, p)] = wkp * c - wkq * s;
                    w[(k, q)] = wkp * s + wkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| h[(i, i)].re.total_cmp(&h[(j, j)].re));
    let values = order.iter().map(|&i| h[(i, i)].re).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = w[(k, old)];
        }
    }
    Ok(Spectrum { values, vectors })
}

/// Hermitian observable with a lazily cached spectral decomposition.
#[derive(Debug, Clone)]
pub struct HermitianOp {
    matrix: Matrix,
    spectrum: OnceLock<Spectrum>,
}

impl HermitianOp {
    pub fn new(matrix: Matrix) -> Result<Self, QmathError> {
        if !matrix.is_square() {
            return Err(QmathError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > TOL_CONSTRUCTION {
            return Err(QmathError::NotHermitian { defect });
        }
        Ok(Self {
            matrix,
            spectrum: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum
            .get_or_init(|| jacobi_hermitian(&self.matrix).expect("validated at construction"))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum().values[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.spectrum().values.last().expect("nonempty operator")
    }

    pub fn tensor(&self, other: &HermitianOp) -> HermitianOp {
        HermitianOp {
            matrix: self.matrix.kron(&other.matrix),
            spectrum: OnceLock::new(),
        }
    }

    pub fn product(&self, other: &HermitianOp) -> Matrix {
        &self.matrix * &other.matrix
    }

    /// `exp(-i t H)` from the spectral decomposition.
    pub fn unitary_evolution(&self, t: f64) -> Matrix {
        let spec = self.spectrum();
        let phases: Vec<Complex64> = spec
            .values
            .iter()
            .map(|&lambda| Complex64::from_polar(1.0, -t * lambda))
            .collect();
        let v = &spec.vectors;
        &(v * &Matrix::diagonal(&phases)) * &v.adjoint()
    }

    /// Orthogonal projector onto the eigenspace of `value` (within `tol`).
    pub fn eigenprojector(&self, value: f64, tol: f64) -> Matrix {
        let spec = self.spectrum();
        let n = self.dim();
        let mut p = Matrix::zeros(n, n);
        for (k, &lambda) in spec.values.iter().enumerate() {
            if (lambda - value).abs() <= tol {
                let v = spec.eigenvector(k);
                p = &p + &Matrix::outer(&v, &v);
            }
        }
        p
    }
}

impl PartialEq for HermitianOp {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}
