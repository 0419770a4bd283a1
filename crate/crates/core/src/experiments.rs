//! CHSH correlators, GHZ parities, Bell-basis verification of the friend's
//! lab, the message-factorization check, and seeded shot sampling.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};
use crate::qmath::{
    computational_basis, HermitianOp, Ket, QmathError, TOL_CONSTRUCTION, TOL_END_TO_END,
    TOL_SPECTRAL,
};
use crate::wigner::{
    self, bell_basis, build_wigner_state, entangled_labs_state, ghz_state, labs_state_macro,
    macro_observable, BellLabel, MacroAxis, MacroObservable, MacroQubit, Outcome, Party,
    WignerError, MESSAGE_OBSERVED,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("complement outcome has probability {probability:e} for setting {setting}")]
    ComplementOutcome { setting: String, probability: f64 },
    #[error("state is not an eigenstate of {word} (residual {residual:e})")]
    NotEigenstate { word: String, residual: f64 },
    #[error("sign placement entries must be +1 or -1, got {0:?}")]
    InvalidSigns(Vec<i64>),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error(transparent)]
    Wigner(#[from] WignerError),
    #[error(transparent)]
    Qmath(#[from] QmathError),
}

// ----------------------------------------------------------------------------
// Correlator tables

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Sampled => "sampled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlator {
    pub setting_a: String,
    pub setting_b: String,
    pub value: f64,
    pub stderr: f64,
    pub mode: Mode,
    pub shots: u64,
}

/// `E[A_i B_j]` for `i, j ∈ {1, 2}`; `entries[i][j]` holds `(A_{i+1}, B_{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTable {
    pub entries: [[Correlator; 2]; 2],
}

impl CorrelatorTable {
    pub fn values(&self) -> [[f64; 2]; 2] {
        [
            [self.entries[0][0].value, self.entries[0][1].value],
            [self.entries[1][0].value, self.entries[1][1].value],
        ]
    }

    /// Builds an exact table from raw values, with the standard CHSH setting labels.
    pub fn exact(values: [[f64; 2]; 2]) -> Self {
        let make = |i: usize, j: usize| Correlator {
            setting_a: CHSH_SETTINGS_A[i].label(),
            setting_b: CHSH_SETTINGS_B[j].label(),
            value: values[i][j],
            stderr: 0.0,
            mode: Mode::Exact,
            shots: 0,
        };
        Self {
            entries: [[make(0, 0), make(0, 1)], [make(1, 0), make(1, 1)]],
        }
    }

    pub fn is_exact(&self) -> bool {
        self.iter().all(|c| c.mode == Mode::Exact)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Correlator> {
        self.entries.iter().flatten()
    }
}

/// Setting labels: `A1 = A_z`, `A2 = A_x`, likewise for Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChshSetting {
    pub party: Party,
    pub axis: MacroAxis,
}

impl ChshSetting {
    pub fn label(&self) -> String {
        format!("{}_{}", self.party.label(), self.axis.symbol())
    }
}

pub const CHSH_SETTINGS_A: [ChshSetting; 2] = [
    ChshSetting {
        party: Party::A,
        axis: MacroAxis::Z,
    },
    ChshSetting {
        party: Party::A,
        axis: MacroAxis::X,
    },
];
pub const CHSH_SETTINGS_B: [ChshSetting; 2] = [
    ChshSetting {
        party: Party::B,
        axis: MacroAxis::Z,
    },
    ChshSetting {
        party: Party::B,
        axis: MacroAxis::X,
    },
];

// ----------------------------------------------------------------------------
// Sign placements

/// Signs on `(E11, E12, E21, E22)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct SignPlacement([i8; 4]);

impl SignPlacement {
    /// The placement with the minus sign on `⟨A_2 B_2⟩`.
    pub const LITERAL: SignPlacement = SignPlacement([1, 1, 1, -1]);

    pub fn new(signs: [i8; 4]) -> Result<Self, ExperimentError> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(ExperimentError::InvalidSigns(
                signs.iter().map(|&s| s as i64).collect(),
            ));
        }
        Ok(Self(signs))
    }

    pub fn signs(&self) -> [i8; 4] {
        self.0
    }

    pub fn sign(&self, i: usize, j: usize) -> i8 {
        self.0[2 * i + j]
    }

    /// An odd number of minus signs.
    pub fn is_chsh(&self) -> bool {
        self.0.iter().filter(|&&s| s < 0).count() % 2 == 1
    }

    /// The eight CHSH placements in lexicographic order (`+` before `−`).
    pub fn all_chsh() -> Vec<SignPlacement> {
        (0u8..16)
            .map(|bits| {
                let mut s = [1i8; 4];
                for (k, slot) in s.iter_mut().enumerate() {
                    if bits & (1 << (3 - k)) != 0 {
                        *slot = -1;
                    }
                }
                SignPlacement(s)
            })
            .filter(SignPlacement::is_chsh)
            .collect()
    }
}

impl TryFrom<Vec<i64>> for SignPlacement {
    type Error = ExperimentError;

    fn try_from(v: Vec<i64>) -> Result<Self, Self::Error> {
        if v.len() != 4 || v.iter().any(|&s| s != 1 && s != -1) {
            return Err(ExperimentError::InvalidSigns(v));
        }
        Ok(Self([v[0] as i8, v[1] as i8, v[2] as i8, v[3] as i8]))
    }
}

impl From<SignPlacement> for Vec<i64> {
    fn from(p: SignPlacement) -> Self {
        p.0.iter().map(|&s| s as i64).collect()
    }
}

impl fmt::Display for SignPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|&s| if s > 0 { "+" } else { "-" })
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

// ----------------------------------------------------------------------------
// Exact CHSH

fn chsh_observables() -> Result<([MacroObservable; 2], [MacroObservable; 2]), ExperimentError> {
    let qa = MacroQubit::standard(Party::A, 2);
    let qb = MacroQubit::standard(Party::B, 2);
    Ok((
        [
            macro_observable(qa, CHSH_SETTINGS_A[0].axis)?,
            macro_observable(qa, CHSH_SETTINGS_A[1].axis)?,
        ],
        [
            macro_observable(qb, CHSH_SETTINGS_B[0].axis)?,
            macro_observable(qb, CHSH_SETTINGS_B[1].axis)?,
        ],
    ))
}

/// Exact correlators of `(A_z, A_x) × (B_z, B_x)` on the 16-dimensional two-lab state.
pub fn chsh_correlators(theta: f64) -> Result<CorrelatorTable, ExperimentError> {
    let state = entangled_labs_state(theta)?;
    correlators_of(&state)
}

/// Exact correlators on any 16-dimensional two-lab state.
pub fn correlators_of(state: &Ket) -> Result<CorrelatorTable, ExperimentError> {
    let (a, b) = chsh_observables()?;
    let mut values = [[0.0; 2]; 2];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let product = HermitianOp::new(ai.op().product(bj.op()))?;
            values[i][j] = state.expectation(&product)?;
        }
    }
    Ok(CorrelatorTable::exact(values))
}

/// Same correlators computed in the 4-dimensional macro space with plain Paulis.
pub fn chsh_correlators_macro(theta: f64) -> Result<CorrelatorTable, ExperimentError> {
    let state = labs_state_macro(theta)?;
    let pauli = |axis: MacroAxis| axis.span_matrix();
    let mut values = [[0.0; 2]; 2];
    for (i, sa) in CHSH_SETTINGS_A.iter().enumerate() {
        for (j, sb) in CHSH_SETTINGS_B.iter().enumerate() {
            let op = HermitianOp::new(pauli(sa.axis).kron(&pauli(sb.axis)))?;
            values[i][j] = state.expectation(&op)?;
        }
    }
    Ok(CorrelatorTable::exact(values))
}

/// `Σ signs_ij · E[A_i B_j]`
pub fn chsh_value(table: &CorrelatorTable, signs: SignPlacement) -> f64 {
    let v = table.values();
    let mut s = 0.0;
    for (i, row) in v.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            s += f64::from(signs.sign(i, j)) * e;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementValue {
    pub placement: SignPlacement,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignScan {
    pub best: SignPlacement,
    /// Signed S of the best placement.
    pub value: f64,
    pub max_abs: f64,
    pub all: Vec<PlacementValue>,
}

/// Exhaustive scan of the eight CHSH placements; ties go to the earliest placement.
pub fn chsh_scan_signs(table: &CorrelatorTable) -> SignScan {
    let all: Vec<PlacementValue> = SignPlacement::all_chsh()
        .into_iter()
        .map(|placement| PlacementValue {
            placement,
            value: chsh_value(table, placement),
        })
        .collect();
    let mut best = &all[0];
    for pv in &all[1..] {
        // strict improvement beyond rounding keeps the earliest of near-ties
        if pv.value.abs() > best.value.abs() + TOL_CONSTRUCTION {
            best = pv;
        }
    }
    SignScan {
        best: best.placement,
        value: best.value,
        max_abs: best.value.abs(),
        all,
    }
}

// ----------------------------------------------------------------------------
// GHZ

/// Per-party GHZ setting. `X` is diagonal in the macro `up/down` basis, `Y` is
/// `i(|up⟩⟨down| − |down⟩⟨up|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GhzSetting {
    X,
    Y,
}

impl GhzSetting {
    pub fn macro_axis(self) -> MacroAxis {
        match self {
            GhzSetting::X => MacroAxis::Z,
            GhzSetting::Y => MacroAxis::Y,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            GhzSetting::X => 'x',
            GhzSetting::Y => 'y',
        }
    }
}

/// The four parity words tested on the GHZ state, in report order.
pub const GHZ_WORDS: [[GhzSetting; 3]; 4] = [
    [GhzSetting::X, GhzSetting::Y, GhzSetting::Y],
    [GhzSetting::Y, GhzSetting::X, GhzSetting::Y],
    [GhzSetting::Y, GhzSetting::Y, GhzSetting::X],
    [GhzSetting::X, GhzSetting::X, GhzSetting::X],
];

pub fn word_name(word: &[GhzSetting; 3]) -> String {
    word.iter().map(|s| s.symbol()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityResult {
    pub word: String,
    pub eigenvalue: i8,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzParities {
    pub parities: Vec<ParityResult>,
}

impl GhzParities {
    pub fn eigenvalue(&self, word: &str) -> Option<i8> {
        self.parities
            .iter()
            .find(|p| p.word == word)
            .map(|p| p.eigenvalue)
    }

    pub fn product(&self) -> i8 {
        self.parities.iter().map(|p| p.eigenvalue).product()
    }
}

fn apply_word(state: &Ket, word: &[GhzSetting; 3]) -> Result<Vec<Complex64>, ExperimentError> {
    let mut amps = state.amplitudes().to_vec();
    for (party, setting) in Party::ALL.iter().zip(word) {
        let obs = macro_observable(MacroQubit::standard(*party, 3), setting.macro_axis())?;
        amps = obs.op().matrix().apply(&amps)?;
    }
    Ok(amps)
}

/// Eigenvalue of each parity word on a 64-dimensional state, with the eigen residual.
pub fn parities_of(state: &Ket) -> Result<GhzParities, ExperimentError> {
    let mut parities = Vec::with_capacity(GHZ_WORDS.len());
    for word in &GHZ_WORDS {
        let image = apply_word(state, word)?;
        let overlap: Complex64 = state
            .amplitudes()
            .iter()
            .zip(&image)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let eigenvalue: i8 = if overlap.re >= 0.0 { 1 } else { -1 };
        let lambda = f64::from(eigenvalue);
        let residual = image
            .iter()
            .zip(state.amplitudes())
            .map(|(w, a)| (w - a * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual > TOL_SPECTRAL {
            return Err(ExperimentError::NotEigenstate {
                word: word_name(word),
                residual,
            });
        }
        parities.push(ParityResult {
            word: word_name(word),
            eigenvalue,
            residual,
        });
    }
    Ok(GhzParities { parities })
}

/// Parity eigenvalues `{xyy, yxy, yyx, xxx}` of the GHZ state.
pub fn ghz_parities() -> Result<GhzParities, ExperimentError> {
    parities_of(&ghz_state()?.full)
}

// ----------------------------------------------------------------------------
// Wigner's Bell-basis verification

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellProbability {
    pub outcome: BellLabel,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellDistribution {
    pub probabilities: Vec<BellProbability>,
}

impl BellDistribution {
    pub fn get(&self, outcome: BellLabel) -> f64 {
        self.probabilities
            .iter()
            .find(|p| p.outcome == outcome)
            .map_or(0.0, |p| p.probability)
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().map(|p| p.probability).sum()
    }
}

/// Born probabilities of the Bell outcomes on the friend's lab, after
/// dephasing the lab register in its pointer basis with strength `lambda`.
pub fn verify_wigner(phase: Complex64, lambda: f64) -> Result<BellDistribution, ExperimentError> {
    let rho = build_wigner_state(phase)?.density().dephase(
        1,
        &computational_basis(wigner::LAB_DIM),
        lambda,
    )?;
    let probabilities = bell_basis()
        .iter()
        .map(|(label, ket)| {
            Ok(BellProbability {
                outcome: *label,
                probability: rho.fidelity_with(ket)?,
            })
        })
        .collect::<Result<Vec<_>, QmathError>>()?;
    Ok(BellDistribution { probabilities })
}

// ----------------------------------------------------------------------------
// Message register

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageReport {
    pub purity: f64,
    pub fidelity: f64,
    pub factorized: bool,
}

/// Purity and "observed" fidelity of the message register (last subsystem) of `state`.
pub fn message_check_for(state: &Ket) -> Result<MessageReport, ExperimentError> {
    let m = state.dims().len() - 1;
    let reduced = state.partial_trace(&[m])?;
    let purity = reduced.purity();
    let fidelity = reduced.fidelity_with(&Ket::basis(vec![2], MESSAGE_OBSERVED)?)?;
    let factorized =
        (purity - 1.0).abs() <= TOL_END_TO_END && (fidelity - 1.0).abs() <= TOL_END_TO_END;
    Ok(MessageReport {
        purity,
        fidelity,
        factorized,
    })
}

pub fn message_check() -> Result<MessageReport, ExperimentError> {
    message_check_for(&wigner::build_message_state()?)
}

// ----------------------------------------------------------------------------
// Sampling

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub seed: u64,
    /// 0 for `A_1`, 1 for `A_2`.
    pub setting_a: u8,
    pub setting_b: u8,
    pub outcome_a: i8,
    pub outcome_b: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub table: CorrelatorTable,
    pub records: Vec<ShotRecord>,
}

/// Joint probabilities of `(+,+), (+,−), (−,+), (−,−)` per setting pair.
type JointTable = [[[f64; 4]; 2]; 2];

const OUTCOME_PAIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];

fn joint_distributions(state: &Ket) -> Result<JointTable, ExperimentError> {
    let (a, b) = chsh_observables()?;
    let outcomes = [Outcome::Plus, Outcome::Minus, Outcome::Complement];
    let mut table = [[[0.0; 4]; 2]; 2];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let mut k = 0;
            for oa in outcomes {
                for ob in outcomes {
                    let proj = ai.projector(oa) * bj.projector(ob);
                    let p = state.probability(&proj)?;
                    if oa == Outcome::Complement || ob == Outcome::Complement {
                        if p > TOL_CONSTRUCTION {
                            return Err(ExperimentError::ComplementOutcome {
                                setting: format!("{}{}", ai.label(), bj.label()),
                                probability: p,
                            });
                        }
                    } else {
                        table[i][j][k] = p.max(0.0);
                        k += 1;
                    }
                }
            }
        }
    }
    Ok(table)
}

fn draw_shot(joint: &JointTable, seed: u64, shot: u64) -> ShotRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    let setting_a = u8::from(rng.random::<bool>());
    let setting_b = u8::from(rng.random::<bool>());
    let probs = &joint[setting_a as usize][setting_b as usize];
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut pick = OUTCOME_PAIRS.len() - 1;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            pick = k;
            break;
        }
    }
    let (outcome_a, outcome_b) = OUTCOME_PAIRS[pick];
    ShotRecord {
        shot,
        seed,
        setting_a,
        setting_b,
        outcome_a,
        outcome_b,
    }
}

/// Aggregates shot records into empirical correlators with `sqrt((1−Ê²)/N)` errors.
pub fn aggregate(records: &[ShotRecord]) -> CorrelatorTable {
    let mut sums = [[0i64; 2]; 2];
    let mut counts = [[0u64; 2]; 2];
    for r in records {
        let (i, j) = (r.setting_a as usize, r.setting_b as usize);
        sums[i][j] += i64::from(r.outcome_a * r.outcome_b);
        counts[i][j] += 1;
    }
    let make = |i: usize, j: usize| {
        let n = counts[i][j];
        let value = if n == 0 {
            0.0
        } else {
            sums[i][j] as f64 / n as f64
        };
        let stderr = if n < 2 {
            1.0
        } else {
            ((1.0 - value * value).max(0.0) / n as f64).sqrt()
        };
        Correlator {
            setting_a: CHSH_SETTINGS_A[i].label(),
            setting_b: CHSH_SETTINGS_B[j].label(),
            value,
            stderr,
            mode: Mode::Sampled,
            shots: n,
        }
    };
    CorrelatorTable {
        entries: [[make(0, 0), make(0, 1)], [make(1, 0), make(1, 1)]],
    }
}

/// Seeded Monte Carlo run of the Bell test on the two-lab state.
///
/// Shot `k` draws its settings and outcomes from a ChaCha8 stream keyed by
/// `(seed, k)`, so the record stream is identical under any execution mode.
pub fn sample_run(
    theta: f64,
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<SampleRun, ExperimentError> {
    if shots == 0 {
        return Err(ExperimentError::ZeroShots);
    }
    let joint = joint_distributions(&entangled_labs_state(theta)?)?;
    let records = map_indexed(exec, shots, |shot| draw_shot(&joint, seed, shot));
    Ok(SampleRun {
        table: aggregate(&records),
        records,
    })
}

/// Propagated standard error of `Σ s_ij Ê_ij`.
pub fn chsh_stderr(table: &CorrelatorTable) -> f64 {
    table
        .iter()
        .map(|c| c.stderr * c.stderr)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::Matrix;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    /// Independent oracle: amplitudes of `−sin(θ/2)Φ⁺ + cos(θ/2)Ψ⁻` and
    /// hand-written real Pauli products, no crate machinery.
    fn oracle_correlators(theta: f64) -> [[f64; 2]; 2] {
        let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [-s * h, c * h, -c * h, -s * h];
        let z = [[1.0, 0.0], [0.0, -1.0]];
        let x = [[0.0, 1.0], [1.0, 0.0]];
        let ops = [z, x];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for r in 0..4 {
                    for col in 0..4 {
                        let m = ops[i][r / 2][col / 2] * ops[j][r % 2][col % 2];
                        acc += psi[r] * m * psi[col];
                    }
                }
                out[i][j] = acc;
            }
        }
        out
    }

    #[test]
    fn correlators_at_pi_over_4() {
        let t = chsh_correlators(FRAC_PI_4).unwrap().values();
        let r = SQRT_2 / 2.0;
        let want = [[-r, -r], [r, -r]];
        let oracle = oracle_correlators(FRAC_PI_4);
        for i in 0..2 {
            for j in 0..2 {
                assert!((t[i][j] - want[i][j]).abs() < 1e-10);
                assert!((t[i][j] - oracle[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn singlet_correlators() {
        let t = chsh_correlators(0.0).unwrap().values();
        assert!((t[0][0] + 1.0).abs() < 1e-12);
        assert!((t[1][1] + 1.0).abs() < 1e-12);
        assert!(t[0][1].abs() < 1e-12 && t[1][0].abs() < 1e-12);
    }

    #[test]
    fn full_and_macro_routes_agree() {
        for k in 0..20 {
            let theta = -3.0 + 0.31 * k as f64;
            let full = chsh_correlators(theta).unwrap().values();
            let small = chsh_correlators_macro(theta).unwrap().values();
            let oracle = oracle_correlators(theta);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((full[i][j] - small[i][j]).abs() < 1e-10);
                    assert!((full[i][j] - oracle[i][j]).abs() < 1e-10);
                    assert!(full[i][j].abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn chsh_values_for_named_placements() {
        let t = chsh_correlators(FRAC_PI_4).unwrap();
        assert!(chsh_value(&t, SignPlacement::LITERAL).abs() < 1e-12);
        let p = SignPlacement::new([1, 1, -1, 1]).unwrap();
        assert!((chsh_value(&t, p) + 2.0 * SQRT_2).abs() < 1e-12);
        let singlet = chsh_correlators(0.0).unwrap();
        let all_plus = SignPlacement::new([1, 1, 1, 1]).unwrap();
        assert!((chsh_value(&singlet, all_plus) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn literal_placement_vanishes_for_every_angle() {
        for k in 0..40 {
            let t = chsh_correlators(0.17 * k as f64).unwrap();
            assert!(chsh_value(&t, SignPlacement::LITERAL).abs() < 1e-12);
        }
    }

    #[test]
    fn placements_enumerated_in_order() {
        let all = SignPlacement::all_chsh();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], SignPlacement::LITERAL);
        assert_eq!(all[1].signs(), [1, 1, -1, 1]);
        assert!(all.iter().all(SignPlacement::is_chsh));
        assert!(SignPlacement::new([1, 0, 1, 1]).is_err());
    }

    #[test]
    fn sign_scan_examples() {
        let scan = chsh_scan_signs(&chsh_correlators(FRAC_PI_4).unwrap());
        assert!((scan.max_abs - 2.0 * SQRT_2).abs() < 1e-9);
        assert_eq!(scan.best.signs(), [1, 1, -1, 1]);
        let scan0 = chsh_scan_signs(&chsh_correlators(0.0).unwrap());
        assert!((scan0.max_abs - 2.0).abs() < 1e-12);
        let scan90 = chsh_scan_signs(&chsh_correlators(FRAC_PI_2).unwrap());
        assert!((scan90.max_abs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tsirelson_ceiling_over_angles() {
        for k in 0..100 {
            let t = chsh_correlators(0.0628 * k as f64).unwrap();
            for p in SignPlacement::all_chsh() {
                assert!(chsh_value(&t, p).abs() <= 2.0 * SQRT_2 + 1e-9);
            }
        }
    }

    #[test]
    fn ghz_parity_eigenvalues() {
        let p = ghz_parities().unwrap();
        assert_eq!(p.eigenvalue("xyy"), Some(1));
        assert_eq!(p.eigenvalue("yxy"), Some(1));
        assert_eq!(p.eigenvalue("yyx"), Some(1));
        assert_eq!(p.eigenvalue("xxx"), Some(-1));
        assert_eq!(p.product(), -1);
        assert!(p.parities.iter().all(|r| r.residual < 1e-10));
    }

    #[test]
    fn non_eigenstate_is_reported() {
        let product = wigner::embed_macro(&Ket::basis(vec![2, 2, 2], 0).unwrap()).unwrap();
        assert!(matches!(
            parities_of(&product),
            Err(ExperimentError::NotEigenstate { .. })
        ));
    }

    /// Oracle for the dephased Bell verification: the 4×4 density matrix of
    /// `Φ⁺` with coherences scaled by `1 − λ`, read against `Φ±`.
    fn oracle_phi_probabilities(lambda: f64) -> (f64, f64) {
        let coh = 0.5 * (1.0 - lambda);
        let rho00 = 0.5;
        let rho33 = 0.5;
        // ⟨Φ±|ρ|Φ±⟩ = (ρ00 + ρ33 ± 2ρ03)/2
        (
            (rho00 + rho33 + 2.0 * coh) / 2.0,
            (rho00 + rho33 - 2.0 * coh) / 2.0,
        )
    }

    #[test]
    fn verify_wigner_examples() {
        let one = Complex64::new(1.0, 0.0);
        let d0 = verify_wigner(one, 0.0).unwrap();
        assert!((d0.get(BellLabel::PhiPlus) - 1.0).abs() < 1e-12);
        let d1 = verify_wigner(one, 1.0).unwrap();
        let (pp, pm) = oracle_phi_probabilities(1.0);
        assert!((d1.get(BellLabel::PhiPlus) - pp).abs() < 1e-12);
        assert!((d1.get(BellLabel::PhiMinus) - pm).abs() < 1e-12);
        assert!((pp - 0.5).abs() < 1e-15);
        let dh = verify_wigner(one, 0.5).unwrap();
        assert!((dh.get(BellLabel::PhiPlus) - 0.75).abs() < 1e-12);
        assert!((dh.get(BellLabel::PhiMinus) - 0.25).abs() < 1e-12);
        assert!(dh.get(BellLabel::PsiPlus).abs() < 1e-12);
        assert!(matches!(
            verify_wigner(one, 1.2),
            Err(ExperimentError::Qmath(QmathError::StrengthOutOfRange(_)))
        ));
    }

    #[test]
    fn verify_probabilities_sum_to_one() {
        for k in 0..=10 {
            let lambda = k as f64 / 10.0;
            let d = verify_wigner(Complex64::new(1.0, 0.0), lambda).unwrap();
            assert!((d.total() - 1.0).abs() < 1e-12);
            let (pp, _) = oracle_phi_probabilities(lambda);
            assert!((d.get(BellLabel::PhiPlus) - pp).abs() < 1e-12);
        }
    }

    #[test]
    fn message_report_default_and_leaking() {
        let r = message_check().unwrap();
        assert!(r.factorized);
        assert!((r.purity - 1.0).abs() < 1e-12);
        // leaking fixture: flips the message only on the F_z− record
        let mut per = Matrix::identity(4);
        per[(2, 2)] = Complex64::new(0.0, 0.0);
        per[(3, 3)] = Complex64::new(0.0, 0.0);
        per[(2, 3)] = Complex64::new(1.0, 0.0);
        per[(3, 2)] = Complex64::new(1.0, 0.0);
        let leak = Matrix::identity(2).kron(&per);
        let state = wigner::message_state_with_writer(&leak).unwrap();
        let r = message_check_for(&state).unwrap();
        assert!((r.purity - 0.5).abs() < 1e-12);
        assert!(!r.factorized);
    }

    #[test]
    fn zero_shots_rejected() {
        assert_eq!(
            sample_run(FRAC_PI_4, 0, 1, Execution::Sequential),
            Err(ExperimentError::ZeroShots)
        );
    }

    #[test]
    fn single_shot_degenerate_table() {
        let run = sample_run(FRAC_PI_4, 1, 9, Execution::Sequential).unwrap();
        assert_eq!(run.records.len(), 1);
        for c in run.table.iter() {
            assert_eq!(c.stderr, 1.0);
            assert!(c.value == 0.0 || c.value.abs() == 1.0);
        }
        let r = run.records[0];
        let hit = &run.table.entries[r.setting_a as usize][r.setting_b as usize];
        assert_eq!(hit.value, f64::from(r.outcome_a * r.outcome_b));
    }

    #[test]
    fn sampling_is_deterministic_across_modes() {
        let a = sample_run(FRAC_PI_4, 2000, 42, Execution::Sequential).unwrap();
        let b = sample_run(FRAC_PI_4, 2000, 42, Execution::Parallel).unwrap();
        let c = sample_run(FRAC_PI_4, 2000, 42, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
        let d = sample_run(FRAC_PI_4, 2000, 43, Execution::Sequential).unwrap();
        assert_ne!(a.records, d.records);
    }

    #[test]
    fn sampled_best_s_within_statistical_bound() {
        let run = sample_run(FRAC_PI_4, 100_000, 42, Execution::default()).unwrap();
        let scan = chsh_scan_signs(&run.table);
        let sigma = chsh_stderr(&run.table);
        assert!((scan.max_abs - 2.0 * SQRT_2).abs() <= 4.0 * sigma);
        for c in run.table.iter() {
            assert!(c.value.abs() <= 1.0 + 3.0 * c.stderr);
        }
    }
}
