//! Observer-independent value assignments.
//!
//! A deterministic strategy fixes a ±1 value for every setting at once; a
//! joint distribution is a probability measure over those strategies. The
//! enumeration side is pure integer arithmetic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_indexed, Execution};
use crate::experiments::{
    chsh_value, CorrelatorTable, GhzSetting, PlacementValue, SignPlacement, GHZ_WORDS,
};
use crate::qmath::TOL_END_TO_END;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LhvError {
    #[error("feasibility is only decided for exact tables; got a sampled table")]
    SampledTable,
}

/// Total ±1 assignment over a scenario's settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub assignment: BTreeMap<String, i8>,
}

impl DeterministicStrategy {
    pub fn value(&self, setting: &str) -> Option<i8> {
        self.assignment.get(setting).copied()
    }
}

// ----------------------------------------------------------------------------
// CHSH scenario

/// Values of `A1, A2, B1, B2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChshStrategy {
    pub a: [i8; 2],
    pub b: [i8; 2],
}

impl ChshStrategy {
    /// Bit `3` is `A1`, bit `0` is `B2`; a set bit means −1.
    pub fn from_index(index: u8) -> Self {
        let v = |bit: u8| if index & (1 << bit) != 0 { -1 } else { 1 };
        Self {
            a: [v(3), v(2)],
            b: [v(1), v(0)],
        }
    }

    pub fn correlator(&self, i: usize, j: usize) -> i8 {
        self.a[i] * self.b[j]
    }

    pub fn s_value(&self, placement: SignPlacement) -> i32 {
        let mut s = 0i32;
        for i in 0..2 {
            for j in 0..2 {
                s += i32::from(placement.sign(i, j)) * i32::from(self.correlator(i, j));
            }
        }
        s
    }

    pub fn flipped(&self) -> Self {
        Self {
            a: [-self.a[0], -self.a[1]],
            b: [-self.b[0], -self.b[1]],
        }
    }

    pub fn to_deterministic(&self) -> DeterministicStrategy {
        let assignment = [
            ("A1", self.a[0]),
            ("A2", self.a[1]),
            ("B1", self.b[0]),
            ("B2", self.b[1]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        DeterministicStrategy { assignment }
    }
}

pub const CHSH_STRATEGY_COUNT: usize = 16;

pub fn chsh_strategies() -> Vec<ChshStrategy> {
    (0..CHSH_STRATEGY_COUNT as u8)
        .map(ChshStrategy::from_index)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementSummary {
    pub placement: SignPlacement,
    /// S of every strategy, in strategy order.
    pub values: Vec<i32>,
    pub max_abs: i32,
    pub max: i32,
    /// Number of strategies with `S = max`.
    pub attaining_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEnumeration {
    pub strategies: Vec<ChshStrategy>,
    pub placements: Vec<PlacementSummary>,
}

impl ChshEnumeration {
    pub fn max_abs(&self) -> i32 {
        self.placements.iter().map(|p| p.max_abs).max().unwrap_or(0)
    }

    pub fn summary(&self, placement: SignPlacement) -> Option<&PlacementSummary> {
        self.placements.iter().find(|p| p.placement == placement)
    }
}

/// All 16 strategies and their S values under each of the eight CHSH placements.
pub fn enumerate_chsh_strategies() -> ChshEnumeration {
    let strategies = chsh_strategies();
    let placements = SignPlacement::all_chsh()
        .into_iter()
        .map(|placement| {
            let values: Vec<i32> = strategies.iter().map(|s| s.s_value(placement)).collect();
            let max = *values.iter().max().expect("16 strategies");
            PlacementSummary {
                placement,
                max_abs: values.iter().map(|v| v.abs()).max().expect("16 strategies"),
                max,
                attaining_max: values.iter().filter(|&&v| v == max).count(),
                values,
            }
        })
        .collect();
    ChshEnumeration {
        strategies,
        placements,
    }
}

// ----------------------------------------------------------------------------
// GHZ scenario

/// Values of `(A_x, A_y), (B_x, B_y), (C_x, C_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GhzAssignment {
    pub values: [[i8; 2]; 3],
}

impl GhzAssignment {
    pub fn from_index(index: u8) -> Self {
        let v = |bit: u8| if index & (1 << bit) != 0 { -1 } else { 1 };
        Self {
            values: [[v(5), v(4)], [v(3), v(2)], [v(1), v(0)]],
        }
    }

    pub fn value(&self, party: usize, setting: GhzSetting) -> i8 {
        self.values[party][match setting {
            GhzSetting::X => 0,
            GhzSetting::Y => 1,
        }]
    }

    pub fn parity(&self, word: &[GhzSetting; 3]) -> i8 {
        word.iter()
            .enumerate()
            .map(|(party, &s)| self.value(party, s))
            .product()
    }

    pub fn to_deterministic(&self) -> DeterministicStrategy {
        let mut assignment = BTreeMap::new();
        for (party, name) in ["A", "B", "C"].iter().enumerate() {
            assignment.insert(format!("{name}x"), self.values[party][0]);
            assignment.insert(format!("{name}y"), self.values[party][1]);
        }
        DeterministicStrategy { assignment }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzEnumeration {
    pub total: usize,
    /// `xyy = +1`
    pub satisfying_first: usize,
    /// `xyy = yxy = yyx = +1`
    pub satisfying_three: usize,
    /// Of those, how many have `xxx = +1`.
    pub three_with_xxx_plus: usize,
    /// All three plus `xxx = −1`.
    pub satisfying_all_four: usize,
}

pub fn ghz_assignments() -> Vec<GhzAssignment> {
    (0..64u8).map(GhzAssignment::from_index).collect()
}

/// Counts assignments against the quantum parity constraints.
pub fn enumerate_ghz_strategies() -> GhzEnumeration {
    let [xyy, yxy, yyx, xxx] = GHZ_WORDS;
    let all = ghz_assignments();
    let three: Vec<&GhzAssignment> = all
        .iter()
        .filter(|g| g.parity(&xyy) == 1 && g.parity(&yxy) == 1 && g.parity(&yyx) == 1)
        .collect();
    GhzEnumeration {
        total: all.len(),
        satisfying_first: all.iter().filter(|g| g.parity(&xyy) == 1).count(),
        satisfying_three: three.len(),
        three_with_xxx_plus: three.iter().filter(|g| g.parity(&xxx) == 1).count(),
        satisfying_all_four: three.iter().filter(|g| g.parity(&xxx) == -1).count(),
    }
}

// ----------------------------------------------------------------------------
// Joint distributions and feasibility

/// Probability weights over the 16 CHSH strategies, in [`chsh_strategies`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub weights: Vec<f64>,
}

impl JointDistribution {
    /// Clamps weights above `−1e-12` to zero and validates normalization.
    pub fn new(mut weights: Vec<f64>) -> Option<Self> {
        if weights.len() != CHSH_STRATEGY_COUNT || weights.iter().any(|&w| w < -1e-12) {
            return None;
        }
        for w in weights.iter_mut() {
            *w = w.max(0.0);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return None;
        }
        Some(Self { weights })
    }

    pub fn uniform() -> Self {
        Self {
            weights: vec![1.0 / CHSH_STRATEGY_COUNT as f64; CHSH_STRATEGY_COUNT],
        }
    }

    pub fn correlators(&self) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for (w, s) in self.weights.iter().zip(chsh_strategies()) {
            for (i, row) in out.iter_mut().enumerate() {
                for (j, e) in row.iter_mut().enumerate() {
                    *e += w * f64::from(s.correlator(i, j));
                }
            }
        }
        out
    }

    /// `max |E_witness − E_target|`
    pub fn max_deviation(&self, target: &[[f64; 2]; 2]) -> f64 {
        let c = self.correlators();
        (0..4)
            .map(|k| (c[k / 2][k % 2] - target[k / 2][k % 2]).abs())
            .fold(0.0, f64::max)
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumulative += x;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if x - candidate > 0.0 {
            shift = candidate;
        }
    }
    v.iter().map(|&x| (x - shift).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSearch {
    pub weights: Vec<f64>,
    /// `max |M w − E|` at the final iterate.
    pub residual: f64,
    pub iterations: usize,
}

const SEARCH_MAX_ITER: usize = 200_000;

/// Searches the strategy simplex for weights reproducing `target`.
///
/// Alternates the exact least-squares projection onto `{w : M w = E}` with
/// the projection onto the simplex. The strategy-correlator matrix `M`
/// satisfies `M Mᵀ = 16·I`, so the first projection is a single step.
pub fn search_weights(target: &[[f64; 2]; 2]) -> WeightSearch {
    let strategies = chsh_strategies();
    let rows: Vec<[f64; 4]> = strategies
        .iter()
        .map(|s| {
            [
                f64::from(s.correlator(0, 0)),
                f64::from(s.correlator(0, 1)),
                f64::from(s.correlator(1, 0)),
                f64::from(s.correlator(1, 1)),
            ]
        })
        .collect();
    let e = [target[0][0], target[0][1], target[1][0], target[1][1]];
    let n = CHSH_STRATEGY_COUNT as f64;

    let image = |w: &[f64]| -> [f64; 4] {
        let mut out = [0.0; 4];
        for (wk, row) in w.iter().zip(&rows) {
            for (o, r) in out.iter_mut().zip(row) {
                *o += wk * r;
            }
        }
        out
    };
    let residual_of = |w: &[f64]| -> f64 {
        image(w)
            .iter()
            .zip(&e)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };

    let mut w = vec![1.0 / n; CHSH_STRATEGY_COUNT];
    let mut iterations = 0;
    while iterations < SEARCH_MAX_ITER {
        iterations += 1;
        let r = image(&w);
        let diff: Vec<f64> = r.iter().zip(&e).map(|(a, b)| a - b).collect();
        let affine: Vec<f64> = w
            .iter()
            .zip(&rows)
            .map(|(wk, row)| wk - row.iter().zip(&diff).map(|(a, d)| a * d).sum::<f64>() / n)
            .collect();
        let next = project_simplex(&affine);
        let step = next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next;
        if residual_of(&w) <= 1e-13 || step <= 1e-16 {
            break;
        }
    }
    WeightSearch {
        residual: residual_of(&w),
        weights: w,
        iterations,
    }
}

/// Facet test: all eight CHSH placements `≤ 2` and every correlator in `[−1, 1]`.
///
/// Returns the most violated placement, if any.
pub fn facet_violation(values: &[[f64; 2]; 2]) -> Option<PlacementValue> {
    let table = CorrelatorTable::exact(*values);
    let worst = SignPlacement::all_chsh()
        .into_iter()
        .map(|placement| PlacementValue {
            placement,
            value: chsh_value(&table, placement),
        })
        .fold(None::<PlacementValue>, |best, pv| match best {
            Some(b) if b.value >= pv.value - 1e-15 => Some(b),
            _ => Some(pv),
        })
        .expect("eight placements");
    let box_ok = values
        .iter()
        .flatten()
        .all(|e| e.abs() <= 1.0 + TOL_END_TO_END);
    if worst.value > 2.0 + TOL_END_TO_END || !box_ok {
        Some(worst)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<JointDistribution>,
    pub violation: Option<PlacementValue>,
    /// Residual of the secondary weight search.
    pub search_residual: f64,
}

/// Decides whether some joint distribution over deterministic strategies
/// reproduces the four correlators.
pub fn joint_feasibility(table: &CorrelatorTable) -> Result<Feasibility, LhvError> {
    if !table.is_exact() {
        return Err(LhvError::SampledTable);
    }
    let values = table.values();
    let violation = facet_violation(&values);
    let search = search_weights(&values);
    if violation.is_some() {
        return Ok(Feasibility {
            feasible: false,
            witness: None,
            violation,
            search_residual: search.residual,
        });
    }
    let witness = JointDistribution::new(search.weights)
        .filter(|w| w.max_deviation(&values) <= TOL_END_TO_END);
    Ok(Feasibility {
        feasible: true,
        witness,
        violation: None,
        search_residual: search.residual,
    })
}

/// Facet and weight-search verdicts for a batch of tables.
pub fn feasibility_agreement(tables: &[[[f64; 2]; 2]], exec: Execution) -> Vec<(bool, bool)> {
    map_indexed(exec, tables.len() as u64, |k| {
        let t = &tables[k as usize];
        let facet = facet_violation(t).is_none();
        let search = search_weights(t).residual <= TOL_END_TO_END;
        (facet, search)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::chsh_correlators;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    #[test]
    fn chsh_ceiling_is_two_for_every_placement() {
        let e = enumerate_chsh_strategies();
        assert_eq!(e.strategies.len(), 16);
        assert_eq!(e.placements.len(), 8);
        for p in &e.placements {
            assert_eq!(p.max_abs, 2);
            assert_eq!(p.max, 2);
        }
        assert_eq!(e.max_abs(), 2);
    }

    #[test]
    fn eight_strategies_attain_two_for_literal_placement() {
        // oracle: brute force over the 16 sign tuples directly
        let mut count = 0;
        for a1 in [1i32, -1] {
            for a2 in [1i32, -1] {
                for b1 in [1i32, -1] {
                    for b2 in [1i32, -1] {
                        if a1 * b1 + a1 * b2 + a2 * b1 - a2 * b2 == 2 {
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(count, 8);
        let e = enumerate_chsh_strategies();
        assert_eq!(
            e.summary(SignPlacement::LITERAL).unwrap().attaining_max,
            count
        );
    }

    #[test]
    fn global_flip_preserves_s() {
        for s in chsh_strategies() {
            for p in SignPlacement::all_chsh() {
                assert_eq!(s.s_value(p), s.flipped().s_value(p));
            }
        }
    }

    #[test]
    fn deterministic_view_is_total() {
        let d = ChshStrategy::from_index(0b1010).to_deterministic();
        assert_eq!(d.assignment.len(), 4);
        assert_eq!(d.value("A1"), Some(-1));
        assert_eq!(d.value("B1"), Some(-1));
        assert_eq!(d.value("B2"), Some(1));
        let g = GhzAssignment::from_index(63).to_deterministic();
        assert_eq!(g.assignment.len(), 6);
        assert!(g.assignment.values().all(|&v| v == -1));
    }

    #[test]
    fn ghz_counts() {
        let g = enumerate_ghz_strategies();
        assert_eq!(g.total, 64);
        assert_eq!(g.satisfying_first, 32);
        assert_eq!(g.satisfying_three, 8);
        assert_eq!(g.three_with_xxx_plus, 8);
        assert_eq!(g.satisfying_all_four, 0);
    }

    #[test]
    fn ghz_parity_product_is_always_plus_one() {
        for g in ghz_assignments() {
            let p: i8 = GHZ_WORDS.iter().map(|w| g.parity(w)).product();
            assert_eq!(p, 1);
        }
    }

    #[test]
    fn singlet_table_is_feasible_with_witness() {
        let f = joint_feasibility(&chsh_correlators(0.0).unwrap()).unwrap();
        assert!(f.feasible);
        let w = f.witness.expect("witness");
        assert!(w.max_deviation(&chsh_correlators(0.0).unwrap().values()) <= 1e-9);
        assert!((w.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pi_over_4_table_is_infeasible() {
        let f = joint_feasibility(&chsh_correlators(FRAC_PI_4).unwrap()).unwrap();
        assert!(!f.feasible);
        let v = f.violation.unwrap();
        assert!((v.value.abs() - 2.0 * SQRT_2).abs() < 1e-9);
        assert!(f.search_residual > 1e-3);
    }

    #[test]
    fn zero_table_gives_uniform_weights() {
        let f = joint_feasibility(&CorrelatorTable::exact([[0.0; 2]; 2])).unwrap();
        assert!(f.feasible);
        let w = f.witness.unwrap();
        for x in w.weights {
            assert!((x - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_tables_are_refused() {
        let run = crate::experiments::sample_run(FRAC_PI_4, 10, 1, Execution::Sequential).unwrap();
        assert_eq!(joint_feasibility(&run.table), Err(LhvError::SampledTable));
    }

    #[test]
    fn out_of_box_table_is_infeasible() {
        let v = [[1.5, 0.0], [0.0, 0.0]];
        assert!(facet_violation(&v).is_some());
        assert!(search_weights(&v).residual > 0.1);
    }

    #[test]
    fn facet_and_search_agree_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let tables: Vec<[[f64; 2]; 2]> = (0..200)
            .map(|_| {
                let mut t = [[0.0; 2]; 2];
                for e in t.iter_mut().flatten() {
                    *e = rng.random_range(-1.0..=1.0);
                }
                t
            })
            .collect();
        let verdicts = feasibility_agreement(&tables, Execution::default());
        let feasible = verdicts.iter().filter(|(f, _)| *f).count();
        assert!(feasible > 0 && feasible < 200);
        for (k, (facet, search)) in verdicts.iter().enumerate() {
            assert_eq!(facet, search, "table {k}: {:?}", tables[k]);
        }
    }

    #[test]
    fn simplex_projection_basics() {
        let p = project_simplex(&[0.5, 0.5]);
        assert_eq!(p, vec![0.5, 0.5]);
        let p = project_simplex(&[2.0, 0.0, -1.0]);
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
        let p = project_simplex(&[0.3, 0.3, 0.3]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }
}
