//! Experiment dispatch.

use std::f64::consts::SQRT_2;
use std::time::Instant;

use serde_json::{json, Map, Value};
use thiserror::Error;

use num_complex::Complex64;
use wbl_core::exec::Execution;
use wbl_core::experiments::{
    chsh_correlators, chsh_correlators_macro, chsh_scan_signs, chsh_stderr, chsh_value,
    ghz_parities, message_check, sample_run, verify_wigner, CorrelatorTable, ExperimentError,
    SignPlacement,
};
use wbl_core::lhv::{
    enumerate_chsh_strategies, enumerate_ghz_strategies, joint_feasibility, LhvError,
};
use wbl_core::optimize::{optimize_state, OptimizeError, SeesawOptions, DEFAULT_RESTARTS};
use wbl_core::qmath::{TOL_CONSTRUCTION, TOL_END_TO_END, TOL_SPECTRAL};
use wbl_core::reasoning::{
    audit, build_fr_chain, derive, merge_into_single_algebra, satisfiability, Kind, ReasoningError,
};
use wbl_core::wigner::{embed_macro, entangled_labs_state, ghz_state, WignerError};

use crate::report::{Provenance, Report};
use crate::scenario::{Experiment, Scenario, ScenarioError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => EXIT_VALIDATION,
            RunError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<ScenarioError> for RunError {
    fn from(e: ScenarioError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<ExperimentError> for RunError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::ZeroShots | ExperimentError::InvalidSigns(_) => {
                RunError::Validation(e.to_string())
            }
            other => RunError::Internal(other.to_string()),
        }
    }
}

macro_rules! internal_from {
    ($($t:ty),*) => {$(
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Internal(e.to_string())
            }
        }
    )*};
}
internal_from!(
    WignerError,
    LhvError,
    OptimizeError,
    ReasoningError,
    serde_json::Error
);

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), RunError> {
    if ok {
        Ok(())
    } else {
        Err(RunError::Internal(what()))
    }
}

fn max_gap(a: &CorrelatorTable, b: &CorrelatorTable) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x.value - y.value).abs())
        .fold(0.0, f64::max)
}

/// Runs the scenario and assembles its report.
pub fn run(scenario: &Scenario) -> Result<Report, RunError> {
    let start = Instant::now();
    let exec = Execution::default();
    let (results, table) = match scenario.experiment {
        Experiment::Chsh => chsh(scenario)?,
        Experiment::Ghz => (ghz()?, None),
        Experiment::Verify => (verify(scenario)?, None),
        Experiment::Message => (message()?, None),
        Experiment::Lhv => lhv(scenario)?,
        Experiment::Optimize => (optimize(scenario, exec)?, None),
        Experiment::Reason => (reason()?, None),
        Experiment::Sample => sample(scenario, exec)?,
    };
    Ok(Report {
        scenario: scenario.clone(),
        results,
        provenance: Provenance::new(scenario.seed, exec),
        wall_time_s: start.elapsed().as_secs_f64(),
        table,
    })
}

type Outcome = (Value, Option<CorrelatorTable>);

fn chsh(s: &Scenario) -> Result<Outcome, RunError> {
    let theta = s.theta.radians;
    let table = chsh_correlators(theta)?;
    let gap = max_gap(&table, &chsh_correlators_macro(theta)?);
    check(gap <= TOL_SPECTRAL, || {
        format!("macro and full-space correlators differ by {gap:e}")
    })?;
    let scan = chsh_scan_signs(&table);
    let literal = chsh_value(&table, SignPlacement::LITERAL);
    let requested = match s.signs {
        Some(signs) => {
            let p = SignPlacement::new(signs)?;
            json!({ "placement": p.to_string(), "value": chsh_value(&table, p) })
        }
        None => Value::Null,
    };
    let results = json!({
        "theta": theta,
        "correlators": table,
        "representation_gap": gap,
        "max_abs_s": scan.max_abs,
        "attaining_placement": scan.best.to_string(),
        "attaining_value": scan.value,
        "placements": scan.all.iter().map(|pv| json!({
            "placement": pv.placement.to_string(),
            "value": pv.value,
        })).collect::<Vec<_>>(),
        "literal_placement": {
            "placement": SignPlacement::LITERAL.to_string(),
            "value": literal,
            "note": "with A1=A_z, A2=A_x, B1=B_z, B2=B_x the placement (+,+,+,-) cancels to 0 for every theta; the maximum is attained by another placement",
        },
        "requested": requested,
        "tsirelson": 2.0 * SQRT_2,
        "lhv_ceiling": 2,
    });
    Ok((results, Some(table)))
}

fn ghz() -> Result<Value, RunError> {
    let parities = ghz_parities()?;
    let state = ghz_state()?;
    let embedded = embed_macro(&state.macro_space)?;
    let gap = embedded
        .amplitudes()
        .iter()
        .zip(state.full.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    check(gap <= TOL_CONSTRUCTION, || {
        format!("8- and 64-dim GHZ forms differ by {gap:e}")
    })?;
    let product = parities.product();
    check(product == -1, || {
        format!("parity product is {product}, expected -1")
    })?;
    let table: Map<String, Value> = parities
        .parities
        .iter()
        .map(|p| (p.word.clone(), Value::from(p.eigenvalue)))
        .collect();
    let lhv = enumerate_ghz_strategies();
    Ok(json!({
        "parities": table,
        "residuals": parities.parities.iter().map(|p| json!({"word": p.word, "residual": p.residual})).collect::<Vec<_>>(),
        "product": product,
        "representation_gap": gap,
        "lhv": lhv,
        "lhv_count": format!("{}/{}", lhv.satisfying_all_four, lhv.total),
    }))
}

fn verify(s: &Scenario) -> Result<Value, RunError> {
    let phase = Complex64::new(s.phase[0], s.phase[1]);
    let dist = verify_wigner(phase, s.dephase)?;
    let total = dist.total();
    check((total - 1.0).abs() <= TOL_END_TO_END, || {
        format!("Bell probabilities sum to {total}")
    })?;
    let probs: Map<String, Value> = dist
        .probabilities
        .iter()
        .map(|p| (p.outcome.name().to_string(), Value::from(p.probability)))
        .collect();
    Ok(json!({
        "phase": s.phase,
        "dephase": s.dephase,
        "probabilities": probs,
        "total": total,
    }))
}

fn message() -> Result<Value, RunError> {
    let m = message_check()?;
    Ok(json!({
        "purity": m.purity,
        "fidelity_observed": m.fidelity,
        "factorized": m.factorized,
    }))
}

fn lhv(s: &Scenario) -> Result<Outcome, RunError> {
    let chsh = enumerate_chsh_strategies();
    check(chsh.max_abs() == 2, || {
        format!("LHV ceiling is {}", chsh.max_abs())
    })?;
    let table = chsh_correlators(s.theta.radians)?;
    let feasibility = joint_feasibility(&table)?;
    let results = json!({
        "chsh": {
            "strategies": chsh.strategies.len(),
            "max_abs_s": chsh.max_abs(),
            "placements": chsh.placements.iter().map(|p| json!({
                "placement": p.placement.to_string(),
                "max": p.max,
                "max_abs": p.max_abs,
                "attaining_max": p.attaining_max,
            })).collect::<Vec<_>>(),
        },
        "ghz": enumerate_ghz_strategies(),
        "theta": s.theta.radians,
        "correlators": table,
        "feasibility": {
            "feasible": feasibility.feasible,
            "witness": feasibility.witness,
            "violation": feasibility.violation.map(|v| json!({
                "placement": v.placement.to_string(),
                "value": v.value,
            })),
            "search_residual": feasibility.search_residual,
        },
    });
    Ok((results, Some(table)))
}

fn optimize(s: &Scenario, exec: Execution) -> Result<Value, RunError> {
    let state = entangled_labs_state(s.theta.radians)?;
    let opt = optimize_state(
        &state,
        s.seed,
        DEFAULT_RESTARTS,
        SeesawOptions::default(),
        exec,
    )?;
    check(opt.best.value <= opt.bound + TOL_END_TO_END, || {
        format!(
            "see-saw value {} exceeds bound {}",
            opt.best.value, opt.bound
        )
    })?;
    Ok(json!({
        "theta": s.theta.radians,
        "correlation_matrix": opt.correlation,
        "singular_values": opt.singular_values,
        "bound": opt.bound,
        "seesaw": {
            "value": opt.best.value,
            "gap": opt.bound - opt.best.value,
            "settings": opt.best.settings,
            "iterations": opt.best.iterations,
            "converged": opt.best.converged,
            "perturbations": opt.best.perturbations,
            "best_restart": opt.best_restart,
            "restart_values": opt.restart_values,
            "trace": opt.best.trace,
        },
    }))
}

fn reason() -> Result<Value, RunError> {
    let chain = build_fr_chain();
    let refusal = match derive(&chain) {
        Err(e @ ReasoningError::MixedOwnership { .. }) => e.to_string(),
        Err(e) => return Err(e.into()),
        Ok(_) => return Err(RunError::Internal("unmerged chain was not refused".into())),
    };
    let merged = merge_into_single_algebra(&chain);
    let run = derive(&merged)?;
    audit(&merged, &run)?;
    let model = satisfiability(&merged)?;
    check(run.contradiction == model.is_none(), || {
        "derive and brute-force satisfiability disagree".into()
    })?;
    let deletions = merged
        .premises()
        .iter()
        .filter(|id| {
            matches!(
                merged.get(id).map(|p| &p.kind),
                Some(Kind::Implication { .. })
            )
        })
        .map(|id| {
            let reduced = merged.without_premise(id);
            Ok(json!({
                "removed": id,
                "contradiction": derive(&reduced)?.contradiction,
                "model": satisfiability(&reduced)?,
            }))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    Ok(json!({
        "chain": chain,
        "unmerged": { "refused": true, "error": refusal },
        "merged": {
            "contradiction": run.contradiction,
            "trace_length": run.steps.len(),
            "run": run,
            "transcript": run.transcript(&merged).lines().collect::<Vec<_>>(),
            "model": model,
        },
        "deletions": deletions,
    }))
}

fn sample(s: &Scenario, exec: Execution) -> Result<Outcome, RunError> {
    let theta = s.theta.radians;
    let run = sample_run(theta, s.shots, s.seed, exec)?;
    let exact = chsh_correlators(theta)?;
    let placement = match s.signs {
        Some(signs) => SignPlacement::new(signs)?,
        None => chsh_scan_signs(&exact).best,
    };
    let s_hat = chsh_value(&run.table, placement);
    let s_exact = chsh_value(&exact, placement);
    let s_err = chsh_stderr(&run.table);
    let deviations: Vec<f64> = run
        .table
        .iter()
        .zip(exact.iter())
        .map(|(c, e)| (c.value - e.value).abs() / c.stderr.max(f64::MIN_POSITIVE))
        .collect();
    let results = json!({
        "theta": theta,
        "shots": s.shots,
        "seed": s.seed,
        "correlators": run.table,
        "exact": exact.values(),
        "placement": placement.to_string(),
        "s": s_hat,
        "s_stderr": s_err,
        "s_exact": s_exact,
        "max_deviation_sigma": deviations.iter().copied().fold(0.0, f64::max),
    });
    Ok((results, Some(run.table)))
}
