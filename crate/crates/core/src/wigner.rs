//! Physical objects of the Wigner-friend scenarios.
//!
//! Each party owns a `spin ⊗ lab` factor of dimension 4. The global wire
//! order is `[S1, L1, S2, L2, ...]` with row-major indexing; for the
//! two-party Bell scenario that is `[S1, C, S2, D]`. Inside a factor the
//! local index is `2·spin + lab`, spin `0 = z+` and `1 = z−`.
//!
//! The friend's measurement is a controlled record: the lab register's
//! ready state doubles as the `z+` record, so the interaction is a CNOT
//! from spin to lab.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qmath::{embed, gates, HermitianOp, Ket, Matrix, QmathError, TOL_CONSTRUCTION};

pub const SPIN_DIM: usize = 2;
pub const LAB_DIM: usize = 2;
pub const FACTOR_DIM: usize = SPIN_DIM * LAB_DIM;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WignerError {
    #[error("phase must have unit modulus, got |phase| = {0}")]
    NonUnitPhase(f64),
    #[error("ready state index {0} is not a lab basis vector")]
    BadReadyState(usize),
    #[error("party {party:?} is not present in a {parties}-party register")]
    MissingParty { party: Party, parties: usize },
    #[error(transparent)]
    Qmath(#[from] QmathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub const ALL: [Party; 3] = [Party::A, Party::B, Party::C];

    pub fn position(self) -> usize {
        match self {
            Party::A => 0,
            Party::B => 1,
            Party::C => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Party::A => "A",
            Party::B => "B",
            Party::C => "C",
        }
    }
}

/// Lab register layout: dimension 2 with basis `{F_z+, F_z−}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabEncoding {
    ready: usize,
}

impl LabEncoding {
    pub fn new(ready: usize) -> Result<Self, WignerError> {
        if ready >= LAB_DIM {
            return Err(WignerError::BadReadyState(ready));
        }
        Ok(Self { ready })
    }

    pub fn ready(&self) -> usize {
        self.ready
    }

    /// Lab basis index of the record for spin outcome `spin` (0 = up).
    pub fn record(&self, spin: usize) -> usize {
        (self.ready + spin) % LAB_DIM
    }

    pub fn labels() -> Vec<String> {
        vec!["F_z+".to_string(), "F_z-".to_string()]
    }
}

/// The two-dimensional `|X_up⟩, |X_down⟩` span inside one party's factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroQubit {
    pub party: Party,
    /// Number of parties in the enclosing register.
    pub parties: usize,
    pub up: usize,
    pub down: usize,
    pub complement: [usize; 2],
}

impl MacroQubit {
    pub fn new(party: Party, parties: usize, encoding: LabEncoding) -> Result<Self, WignerError> {
        if party.position() >= parties {
            return Err(WignerError::MissingParty { party, parties });
        }
        let up = encoding.record(0);
        let down = LAB_DIM + encoding.record(1);
        let mut complement = [0; 2];
        let mut k = 0;
        for idx in 0..FACTOR_DIM {
            if idx != up && idx != down {
                complement[k] = idx;
                k += 1;
            }
        }
        Ok(Self {
            party,
            parties,
            up,
            down,
            complement,
        })
    }

    pub fn standard(party: Party, parties: usize) -> Self {
        Self::new(party, parties, LabEncoding::default()).expect("party within register")
    }

    pub fn full_dims(&self) -> Vec<usize> {
        [SPIN_DIM, LAB_DIM].repeat(self.parties)
    }

    pub fn first_subsystem(&self) -> usize {
        2 * self.party.position()
    }

    /// Lifts a 4×4 factor operator to the whole register.
    pub fn lift(&self, local: &Matrix) -> Result<Matrix, QmathError> {
        embed(local, &self.full_dims(), self.first_subsystem())
    }

    /// 4×4 matrix that acts as `m` (2×2, basis `up, down`) on the span and 0 on the complement.
    pub fn on_span(&self, m: &Matrix) -> Matrix {
        let idx = [self.up, self.down];
        let mut out = Matrix::zeros(FACTOR_DIM, FACTOR_DIM);
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                out[(r, c)] = m[(i, j)];
            }
        }
        out
    }

    pub fn span_projector(&self) -> Matrix {
        self.on_span(&Matrix::identity(2))
    }

    pub fn complement_projector(&self) -> Matrix {
        &Matrix::identity(FACTOR_DIM) - &self.span_projector()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MacroAxis {
    X,
    Y,
    Z,
}

impl MacroAxis {
    pub const BLOCH: [MacroAxis; 3] = [MacroAxis::X, MacroAxis::Y, MacroAxis::Z];

    /// Operator on the span in the `(up, down)` basis.
    ///
    /// `Z = |up⟩⟨up| − |down⟩⟨down|`, `X = |up⟩⟨down| + |down⟩⟨up|`,
    /// `Y = i(|up⟩⟨down| − |down⟩⟨up|)`. The `Y` sign is the opposite of
    /// the usual `σ_y`; every parity word used here contains an even number
    /// of `Y` factors, so nothing downstream depends on it.
    pub fn span_matrix(self) -> Matrix {
        match self {
            MacroAxis::X => gates::pauli_x(),
            MacroAxis::Y => gates::pauli_y().scale(Complex64::new(-1.0, 0.0)),
            MacroAxis::Z => gates::pauli_z(),
        }
    }

    /// Eigenvectors `(+1, −1)` on the span, basis `(up, down)`.
    pub fn span_eigenvectors(self) -> [[Complex64; 2]; 2] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let i = Complex64::new(0.0, FRAC_1_SQRT_2);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            MacroAxis::Z => [[one, zero], [zero, one]],
            MacroAxis::X => [[h, h], [h, -h]],
            MacroAxis::Y => [[h, -i], [h, i]],
        }
    }

    pub fn symbol(self) -> char {
        match self {
            MacroAxis::X => 'x',
            MacroAxis::Y => 'y',
            MacroAxis::Z => 'z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
    Complement,
}

impl Outcome {
    pub fn value(self) -> Option<i8> {
        match self {
            Outcome::Plus => Some(1),
            Outcome::Minus => Some(-1),
            Outcome::Complement => None,
        }
    }
}

/// A macro observable lifted to the full register, with its three outcome projectors.
#[derive(Debug, Clone)]
pub struct MacroObservable {
    pub qubit: MacroQubit,
    pub axis: MacroAxis,
    op: HermitianOp,
    local: Matrix,
    plus: Matrix,
    minus: Matrix,
    complement: Matrix,
}

impl MacroObservable {
    pub fn op(&self) -> &HermitianOp {
        &self.op
    }

    /// The 4×4 factor operator before lifting.
    pub fn local(&self) -> &Matrix {
        &self.local
    }

    pub fn projector(&self, outcome: Outcome) -> &Matrix {
        match outcome {
            Outcome::Plus => &self.plus,
            Outcome::Minus => &self.minus,
            Outcome::Complement => &self.complement,
        }
    }

    pub fn label(&self) -> String {
        format!("{}_{}", self.qubit.party.label(), self.axis.symbol())
    }
}

/// Observable on a party's macro span, extended by 0 on the complement.
pub fn macro_observable(
    qubit: MacroQubit,
    axis: MacroAxis,
) -> Result<MacroObservable, WignerError> {
    let local = qubit.on_span(&axis.span_matrix());
    let [plus_vec, minus_vec] = axis.span_eigenvectors();
    let local_plus = qubit.on_span(&Matrix::outer(&plus_vec, &plus_vec));
    let local_minus = qubit.on_span(&Matrix::outer(&minus_vec, &minus_vec));
    let op = HermitianOp::new(qubit.lift(&local)?)?;
    Ok(MacroObservable {
        qubit,
        axis,
        op,
        plus: qubit.lift(&local_plus)?,
        minus: qubit.lift(&local_minus)?,
        complement: qubit.lift(&qubit.complement_projector())?,
        local,
    })
}

/// 4×4 measurement interaction `|z±⟩|ready⟩ → |z±⟩|F_z±⟩` on `spin ⊗ lab`.
///
/// Completed to a permutation on the non-ready lab states.
pub fn friend_measurement_unitary(encoding: LabEncoding) -> Matrix {
    let mut u = Matrix::zeros(FACTOR_DIM, FACTOR_DIM);
    for spin in 0..SPIN_DIM {
        for lab in 0..LAB_DIM {
            let record = encoding.record(spin);
            let target = if lab == encoding.ready() {
                record
            } else {
                LAB_DIM - 1 - record
            };
            u[(spin * LAB_DIM + target, spin * LAB_DIM + lab)] = Complex64::new(1.0, 0.0);
        }
    }
    u
}

fn spin_labels() -> Vec<String> {
    vec!["z+".to_string(), "z-".to_string()]
}

fn factor_labels() -> Vec<Vec<String>> {
    vec![spin_labels(), LabEncoding::labels()]
}

fn check_phase(phase: Complex64) -> Result<(), WignerError> {
    let modulus = phase.norm();
    if (modulus - 1.0).abs() > TOL_CONSTRUCTION {
        return Err(WignerError::NonUnitPhase(modulus));
    }
    Ok(())
}

/// `(|z+⟩|F_z+⟩ + phase·|z−⟩|F_z−⟩)/√2` on `spin ⊗ lab`.
pub fn build_wigner_state(phase: Complex64) -> Result<Ket, WignerError> {
    check_phase(phase)?;
    let enc = LabEncoding::default();
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); FACTOR_DIM];
    amps[enc.record(0)] = h;
    amps[LAB_DIM + enc.record(1)] = h * phase;
    Ok(Ket::new(amps, vec![SPIN_DIM, LAB_DIM])?.with_labels(factor_labels())?)
}

/// The same state obtained dynamically: `U_friend (|x+⟩ ⊗ |ready⟩)` with a
/// relative phase on `|z−⟩` before the interaction.
pub fn measured_wigner_state(phase: Complex64) -> Result<Ket, WignerError> {
    check_phase(phase)?;
    let enc = LabEncoding::default();
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let spin = Ket::new(vec![h, h * phase], vec![SPIN_DIM])?;
    let lab = Ket::basis(vec![LAB_DIM], enc.ready())?;
    let ket = spin
        .tensor(&lab)
        .apply_unitary(&friend_measurement_unitary(enc))?;
    Ok(ket.with_labels(factor_labels())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "Phi+",
            BellLabel::PhiMinus => "Phi-",
            BellLabel::PsiPlus => "Psi+",
            BellLabel::PsiMinus => "Psi-",
        }
    }
}

/// Φ±, Ψ± over `spin ⊗ lab`, in that order.
pub fn bell_basis() -> [(BellLabel, Ket); 4] {
    let h = FRAC_1_SQRT_2;
    let make = |a: [f64; 4]| {
        Ket::from_real(&a, vec![SPIN_DIM, LAB_DIM])
            .and_then(|k| k.with_labels(factor_labels()))
            .expect("Bell vectors are normalized")
    };
    [
        (BellLabel::PhiPlus, make([h, 0.0, 0.0, h])),
        (BellLabel::PhiMinus, make([h, 0.0, 0.0, -h])),
        (BellLabel::PsiPlus, make([0.0, h, h, 0.0])),
        (BellLabel::PsiMinus, make([0.0, h, -h, 0.0])),
    ]
}

/// Message register basis: index 0 is "observed a definite outcome".
pub const MESSAGE_OBSERVED: usize = 0;
pub const MESSAGE_NOT_OBSERVED: usize = 1;

pub fn message_labels() -> Vec<String> {
    vec!["observed".to_string(), "not-observed".to_string()]
}

/// Writes "observed" into the message register whenever the lab holds a
/// record in the pointer basis, i.e. on both branches alike. Acts on `[S, F, M]`.
pub fn message_writer_unitary() -> Matrix {
    let mut per_record = Matrix::zeros(LAB_DIM * 2, LAB_DIM * 2);
    for record in 0..LAB_DIM {
        // |record⟩|not⟩ ↔ |record⟩|observed⟩
        per_record[(
            record * 2 + MESSAGE_OBSERVED,
            record * 2 + MESSAGE_NOT_OBSERVED,
        )] = Complex64::new(1.0, 0.0);
        per_record[(
            record * 2 + MESSAGE_NOT_OBSERVED,
            record * 2 + MESSAGE_OBSERVED,
        )] = Complex64::new(1.0, 0.0);
    }
    Matrix::identity(SPIN_DIM).kron(&per_record)
}

/// Runs the friend measurement on `|x+⟩|ready⟩|not-observed⟩`, then `writer` on `[S, F, M]`.
pub fn message_state_with_writer(writer: &Matrix) -> Result<Ket, WignerError> {
    let enc = LabEncoding::default();
    let h = FRAC_1_SQRT_2;
    let spin = Ket::from_real(&[h, h], vec![SPIN_DIM])?;
    let initial = spin
        .tensor(&Ket::basis(vec![LAB_DIM], enc.ready())?)
        .tensor(&Ket::basis(vec![2], MESSAGE_NOT_OBSERVED)?);
    let measure = friend_measurement_unitary(enc).kron(&Matrix::identity(2));
    let ket = initial.apply_unitary(&measure)?.apply_unitary(writer)?;
    Ok(ket.with_labels(vec![spin_labels(), LabEncoding::labels(), message_labels()])?)
}

/// `Φ_SF ⊗ |observed⟩_M`, produced by measurement then message writing.
pub fn build_message_state() -> Result<Ket, WignerError> {
    message_state_with_writer(&message_writer_unitary())
}

/// `(𝟙 ⊗ exp(−iθσ_y/2))|ψ⁻⟩` on `[S1, S2]`.
pub fn build_pair_state(theta: f64) -> Result<Ket, WignerError> {
    let h = FRAC_1_SQRT_2;
    let singlet = Ket::from_real(&[0.0, h, -h, 0.0], vec![SPIN_DIM, SPIN_DIM])?;
    let rotation = HermitianOp::new(gates::pauli_y())?.unitary_evolution(theta / 2.0);
    let u = Matrix::identity(SPIN_DIM).kron(&rotation);
    Ok(singlet.apply_unitary(&u)?)
}

/// `−sin(θ/2)|φ⁺⟩ + cos(θ/2)|ψ⁻⟩` written out term by term.
pub fn pair_state_expansion(theta: f64) -> Result<Ket, WignerError> {
    let (s, c) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let h = FRAC_1_SQRT_2;
    let phi_plus = [h, 0.0, 0.0, h];
    let psi_minus = [0.0, h, -h, 0.0];
    let amps: Vec<f64> = (0..4)
        .map(|i| -s * phi_plus[i] + c * psi_minus[i])
        .collect();
    Ok(Ket::from_real(&amps, vec![SPIN_DIM, SPIN_DIM])?)
}

/// Lifts an `n`-spin state to `[S1, L1, …, Sn, Ln]` with ready labs, then lets
/// every friend measure.
pub fn friends_measure(spins: &Ket, encoding: LabEncoding) -> Result<Ket, WignerError> {
    let n = spins.dims().len();
    let mut ket = spins.clone();
    for _ in 0..n {
        ket = ket.tensor(&Ket::basis(vec![LAB_DIM], encoding.ready())?);
    }
    let order: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
    let mut ket = ket.permute_subsystems(&order)?;
    let dims = ket.dims().to_vec();
    let u = friend_measurement_unitary(encoding);
    for k in 0..n {
        ket = ket.apply_unitary(&embed(&u, &dims, 2 * k)?)?;
    }
    let labels = (0..n).flat_map(|_| factor_labels()).collect();
    Ok(ket.with_labels(labels)?)
}

/// Two-lab state on `[S1, C, S2, D]` after Charlie and Debbie measure.
pub fn entangled_labs_state(theta: f64) -> Result<Ket, WignerError> {
    friends_measure(&build_pair_state(theta)?, LabEncoding::default())
}

/// Full-register basis index of each macro basis state (bit 0 = up, 1 = down per party).
pub fn span_isometry(parties: usize) -> Vec<usize> {
    let qubits: Vec<MacroQubit> = Party::ALL[..parties]
        .iter()
        .map(|&p| MacroQubit::standard(p, parties))
        .collect();
    (0..(1usize << parties))
        .map(|macro_index| {
            qubits.iter().enumerate().fold(0, |acc, (k, q)| {
                let bit = (macro_index >> (parties - 1 - k)) & 1;
                acc * FACTOR_DIM + if bit == 0 { q.up } else { q.down }
            })
        })
        .collect()
}

/// Embeds a `2^n`-dimensional macro-space ket into the full register.
pub fn embed_macro(macro_ket: &Ket) -> Result<Ket, WignerError> {
    let parties = macro_ket.dims().len();
    let map = span_isometry(parties);
    let mut amps = vec![Complex64::new(0.0, 0.0); FACTOR_DIM.pow(parties as u32)];
    for (m, &full) in map.iter().enumerate() {
        amps[full] = macro_ket.amplitudes()[m];
    }
    Ok(Ket::new(amps, [SPIN_DIM, LAB_DIM].repeat(parties))?)
}

/// Probability weight of `ket` outside the macro spans.
pub fn weight_outside_spans(ket: &Ket) -> f64 {
    let parties = ket.dims().len() / 2;
    let inside: f64 = span_isometry(parties)
        .iter()
        .map(|&i| ket.amplitudes()[i].norm_sqr())
        .sum();
    (1.0 - inside).max(0.0)
}

/// Restricts a full-register ket to its macro-space amplitudes.
pub fn restrict_to_spans(ket: &Ket) -> Result<Ket, WignerError> {
    let parties = ket.dims().len() / 2;
    let amps = span_isometry(parties)
        .iter()
        .map(|&i| ket.amplitudes()[i])
        .collect();
    Ok(Ket::normalized(amps, vec![2; parties])?)
}

/// Macro-space form of the two-lab state: `−sin(θ/2)|Φ⁺⟩ + cos(θ/2)|Ψ⁻⟩`.
pub fn labs_state_macro(theta: f64) -> Result<Ket, WignerError> {
    pair_state_expansion(theta)
        .map(|k| Ket::new(k.amplitudes().to_vec(), vec![2, 2]).expect("same amplitudes"))
}

/// GHZ state in both representations.
#[derive(Debug, Clone)]
pub struct GhzState {
    /// 64-dimensional `[S1, L1, S2, L2, S3, L3]` ket.
    pub full: Ket,
    /// 8-dimensional macro-space ket.
    pub macro_space: Ket,
}

fn plus_minus(sign: f64) -> Ket {
    let h = FRAC_1_SQRT_2;
    Ket::from_real(&[h, sign * h], vec![2]).expect("normalized")
}

/// `(|+++⟩ − |−−−⟩)/√2` with `|±⟩ = (|up⟩ ± |down⟩)/√2`.
///
/// The 64-dimensional form is produced by letting three friends measure a
/// spin GHZ state; the 8-dimensional form is expanded directly.
pub fn ghz_state() -> Result<GhzState, WignerError> {
    let (p, m) = (plus_minus(1.0), plus_minus(-1.0));
    let ppp = p.tensor(&p).tensor(&p);
    let mmm = m.tensor(&m).tensor(&m);
    let amps: Vec<Complex64> = ppp
        .amplitudes()
        .iter()
        .zip(mmm.amplitudes())
        .map(|(a, b)| (a - b) * FRAC_1_SQRT_2)
        .collect();
    let macro_space = Ket::new(amps, vec![2, 2, 2])?;
    let full = friends_measure(&macro_space, LabEncoding::default())?;
    Ok(GhzState { full, macro_space })
}
