//! Maximal CHSH value of a two-macro-qubit state.
//!
//! Two routes: the closed-form bound from the singular values of the
//! correlation matrix, and a see-saw over measurement directions on the
//! macro Bloch sphere. They must agree.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};
use crate::qmath::{svd3, HermitianOp, Ket, QmathError, Real3, TOL_CONSTRUCTION, TOL_SPECTRAL};
use crate::wigner::{restrict_to_spans, weight_outside_spans, MacroAxis, WignerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("state has weight {weight:e} outside the macro spans")]
    OutsideSpans { weight: f64 },
    #[error("expected a two-macro-qubit state (dims [2,2] or [2,2,2,2]), got {0:?}")]
    BadDims(Vec<usize>),
    #[error("setting vector has norm {norm}, expected 1")]
    NotUnit { norm: f64 },
    #[error("see-saw decreased S from {before} to {after}")]
    NotMonotone { before: f64, after: f64 },
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error(transparent)]
    Qmath(#[from] QmathError),
}

/// `T[i][j] = ⟨σ_i ⊗ σ_j⟩` over the macro axes `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix(pub Real3);

impl CorrelationMatrix {
    pub fn entries(&self) -> &Real3 {
        &self.0
    }

    pub fn singular_values(&self) -> [f64; 3] {
        svd3(&self.0).values
    }

    pub fn apply(&self, v: &[f64; 3]) -> [f64; 3] {
        let t = &self.0;
        std::array::from_fn(|i| (0..3).map(|j| t[i][j] * v[j]).sum())
    }

    pub fn apply_transpose(&self, v: &[f64; 3]) -> [f64; 3] {
        let t = &self.0;
        std::array::from_fn(|j| (0..3).map(|i| t[i][j] * v[i]).sum())
    }

    pub fn transpose(&self) -> Self {
        let t = &self.0;
        Self(std::array::from_fn(|i| std::array::from_fn(|j| t[j][i])))
    }

    /// `a · T b`
    pub fn bilinear(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        dot(a, &self.apply(b))
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn add(a: &[f64; 3], b: &[f64; 3], sign: f64) -> [f64; 3] {
    std::array::from_fn(|k| a[k] + sign * b[k])
}

/// Reduces a two-party state to its 4-dimensional macro-space form.
fn macro_form(state: &Ket) -> Result<Ket, OptimizeError> {
    match state.dims() {
        [2, 2] => Ok(state.clone()),
        [2, 2, 2, 2] => {
            let weight = weight_outside_spans(state);
            if weight > TOL_SPECTRAL {
                return Err(OptimizeError::OutsideSpans { weight });
            }
            Ok(restrict_to_spans(state)?)
        }
        other => Err(OptimizeError::BadDims(other.to_vec())),
    }
}

/// Accepts the 4-dimensional macro ket or the 16-dimensional two-lab ket.
pub fn correlation_matrix(state: &Ket) -> Result<CorrelationMatrix, OptimizeError> {
    let ket = macro_form(state)?;
    let mut t = [[0.0; 3]; 3];
    for (i, ai) in MacroAxis::BLOCH.iter().enumerate() {
        for (j, bj) in MacroAxis::BLOCH.iter().enumerate() {
            let op = HermitianOp::new(ai.span_matrix().kron(&bj.span_matrix()))?;
            t[i][j] = ket.expectation(&op)?;
        }
    }
    Ok(CorrelationMatrix(t))
}

/// `2·sqrt(u₁ + u₂)` over the two largest squared singular values.
pub fn tsirelson_bound(t: &CorrelationMatrix) -> f64 {
    let s = t.singular_values();
    2.0 * (s[0] * s[0] + s[1] * s[1]).sqrt()
}

/// Unit direction on the macro Bloch sphere; the observable is `a · (σ_x, σ_y, σ_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingVector([f64; 3]);

impl SettingVector {
    pub const X: SettingVector = SettingVector([1.0, 0.0, 0.0]);
    pub const Y: SettingVector = SettingVector([0.0, 1.0, 0.0]);
    pub const Z: SettingVector = SettingVector([0.0, 0.0, 1.0]);

    pub fn new(v: [f64; 3]) -> Result<Self, OptimizeError> {
        let n = norm(&v);
        if (n - 1.0).abs() > TOL_CONSTRUCTION {
            return Err(OptimizeError::NotUnit { norm: n });
        }
        Ok(Self(v))
    }

    /// `None` for vectors too short to normalize.
    pub fn normalized(v: [f64; 3]) -> Option<Self> {
        let n = norm(&v);
        (n > 1e-12).then(|| Self(v.map(|x| x / n)))
    }

    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        loop {
            let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
            if let Some(s) = Self::normalized(v) {
                return s;
            }
        }
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }
}

/// `(A1, A2, B1, B2)`
pub type Settings = [SettingVector; 4];

/// CHSH value with placement `(+,+,+,−)`: `a1·T(b1+b2) + a2·T(b1−b2)`.
pub fn chsh_of_settings(t: &CorrelationMatrix, s: &Settings) -> f64 {
    let [a1, a2, b1, b2] = s.map(|v| v.0);
    t.bilinear(&a1, &add(&b1, &b2, 1.0)) + t.bilinear(&a2, &add(&b1, &b2, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeesawResult {
    pub settings: Settings,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Zero image vectors replaced by the leading singular direction.
    pub perturbations: usize,
    pub trace: Vec<TracePoint>,
}

/// Best response `normalize(M v)`, falling back to `fallback` when `M v` vanishes.
fn best_response(image: [f64; 3], fallback: [f64; 3], perturbations: &mut usize) -> SettingVector {
    SettingVector::normalized(image).unwrap_or_else(|| {
        *perturbations += 1;
        SettingVector(fallback)
    })
}

/// Leading left and right singular directions of `T` (z axis if `T = 0`).
fn leading_directions(t: &CorrelationMatrix) -> ([f64; 3], [f64; 3]) {
    let svd = svd3(&t.0);
    let v = svd.right[0];
    let u = SettingVector::normalized(t.apply(&v)).map_or([0.0, 0.0, 1.0], |s| s.0);
    let v = if svd.values[0] > 1e-12 {
        v
    } else {
        [0.0, 0.0, 1.0]
    };
    (u, v)
}

/// Alternating exact maximization over Alice's and Bob's directions.
pub fn seesaw_matrix(
    t: &CorrelationMatrix,
    init: Settings,
    opts: SeesawOptions,
) -> Result<SeesawResult, OptimizeError> {
    let (lead_left, lead_right) = leading_directions(t);
    let mut s = init;
    let mut value = chsh_of_settings(t, &s);
    let mut trace = vec![TracePoint {
        iteration: 0,
        value,
    }];
    let mut perturbations = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let before = value;

        let [_, _, b1, b2] = s.map(|v| v.0);
        s[0] = best_response(t.apply(&add(&b1, &b2, 1.0)), lead_left, &mut perturbations);
        s[1] = best_response(t.apply(&add(&b1, &b2, -1.0)), lead_left, &mut perturbations);
        let mid = chsh_of_settings(t, &s);

        let [a1, a2, _, _] = s.map(|v| v.0);
        s[2] = best_response(
            t.apply_transpose(&add(&a1, &a2, 1.0)),
            lead_right,
            &mut perturbations,
        );
        s[3] = best_response(
            t.apply_transpose(&add(&a1, &a2, -1.0)),
            lead_right,
            &mut perturbations,
        );
        value = chsh_of_settings(t, &s);

        for (lo, hi) in [(before, mid), (mid, value)] {
            if hi < lo - TOL_CONSTRUCTION {
                return Err(OptimizeError::NotMonotone {
                    before: lo,
                    after: hi,
                });
            }
        }
        trace.push(TracePoint {
            iteration: iterations,
            value,
        });
        if value - before < opts.tolerance {
            converged = true;
            break;
        }
    }
    Ok(SeesawResult {
        settings: s,
        value,
        iterations,
        converged,
        perturbations,
        trace,
    })
}

pub fn seesaw(
    state: &Ket,
    init: Settings,
    opts: SeesawOptions,
) -> Result<SeesawResult, OptimizeError> {
    seesaw_matrix(&correlation_matrix(state)?, init, opts)
}

pub const DEFAULT_RESTARTS: usize = 5;

/// Seeded random initial settings for restart `index`.
pub fn restart_settings(seed: u64, index: u64) -> Settings {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    std::array::from_fn(|_| SettingVector::random(&mut rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimization {
    pub correlation: CorrelationMatrix,
    pub singular_values: [f64; 3],
    pub bound: f64,
    pub best: SeesawResult,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
}

/// Bound plus the best of `restarts` see-saw runs; ties go to the lowest restart index.
pub fn optimize_matrix(
    t: &CorrelationMatrix,
    seed: u64,
    restarts: usize,
    opts: SeesawOptions,
    exec: Execution,
) -> Result<Optimization, OptimizeError> {
    let runs = map_indexed(exec, restarts.max(1) as u64, |k| {
        seesaw_matrix(t, restart_settings(seed, k), opts)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let mut best_restart = 0;
    for (k, r) in runs.iter().enumerate() {
        if r.value > runs[best_restart].value {
            best_restart = k;
        }
    }
    Ok(Optimization {
        correlation: *t,
        singular_values: t.singular_values(),
        bound: tsirelson_bound(t),
        restart_values: runs.iter().map(|r| r.value).collect(),
        best: runs[best_restart].clone(),
        best_restart,
    })
}

pub fn optimize_state(
    state: &Ket,
    seed: u64,
    restarts: usize,
    opts: SeesawOptions,
    exec: Execution,
) -> Result<Optimization, OptimizeError> {
    optimize_matrix(&correlation_matrix(state)?, seed, restarts, opts, exec)
}

/// Haar-like random two-macro-qubit pure state from complex Gaussian amplitudes.
pub fn random_two_qubit_state(rng: &mut ChaCha8Rng) -> Ket {
    loop {
        let amps: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        if let Ok(k) = Ket::normalized(amps, vec![2, 2]) {
            return k;
        }
    }
}
