//! Acceptance gate: every criterion at its stated tolerance, one line each.
//!
//! Run with `cargo test -p wbl-cli --test acceptance -- --nocapture`.

use std::f64::consts::{FRAC_PI_4, SQRT_2};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wbl_cli::{run, Experiment, Scenario};
use wbl_core::exec::Execution;
use wbl_core::experiments::{
    chsh_correlators, chsh_correlators_macro, chsh_scan_signs, chsh_value, ghz_parities,
    message_check, sample_run, verify_wigner, SignPlacement,
};
use wbl_core::lhv::{enumerate_chsh_strategies, enumerate_ghz_strategies, joint_feasibility};
use wbl_core::optimize::{
    correlation_matrix, optimize_state, random_two_qubit_state, tsirelson_bound, SeesawOptions,
    DEFAULT_RESTARTS,
};
use wbl_core::reasoning::{
    build_fr_chain, derive, merge_into_single_algebra, random_chain, satisfiability, Kind,
};
use wbl_core::wigner::{embed_macro, ghz_state, labs_state_macro, BellLabel};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn chsh_maximum() -> Verdict {
    let table = chsh_correlators(FRAC_PI_4).map_err(|e| e.to_string())?;
    let scan = chsh_scan_signs(&table);
    ensure(
        (scan.max_abs - 2.0 * SQRT_2).abs() <= 1e-9,
        format!("max |S| = {}", scan.max_abs),
    )?;
    let literal = chsh_value(&table, SignPlacement::LITERAL);
    ensure(
        literal.abs() <= 1e-9,
        format!("literal placement gives {literal}"),
    )?;
    let report = run(&Scenario::new(Experiment::Chsh)).map_err(|e| e.to_string())?;
    let documented = report.results["literal_placement"]["value"]
        .as_f64()
        .ok_or("report lacks the literal placement value")?;
    ensure(documented.abs() <= 1e-9, "report literal value is not 0")?;
    Ok(format!(
        "max |S| = {:.12} at {}; literal (+,+,+,-) = {literal:.1e}",
        scan.max_abs, scan.best
    ))
}

fn lhv_ceiling() -> Verdict {
    let e = enumerate_chsh_strategies();
    ensure(e.strategies.len() == 16, "strategy count")?;
    ensure(e.placements.len() == 8, "placement count")?;
    for p in &e.placements {
        ensure(
            p.max_abs == 2,
            format!("{} reaches {}", p.placement, p.max_abs),
        )?;
    }
    Ok("16 strategies, max |S| = 2 for all 8 placements".into())
}

fn ghz_contradiction() -> Verdict {
    let parities = ghz_parities().map_err(|e| e.to_string())?;
    for (word, expected) in [("xyy", 1), ("yxy", 1), ("yyx", 1), ("xxx", -1)] {
        let p = parities
            .parities
            .iter()
            .find(|p| p.word == word)
            .ok_or(format!("missing {word}"))?;
        ensure(
            p.residual < 1e-10,
            format!("{word} residual {:e}", p.residual),
        )?;
        ensure(
            p.eigenvalue == expected,
            format!("{word} = {}", p.eigenvalue),
        )?;
    }
    let g = enumerate_ghz_strategies();
    ensure(g.total == 64, "total")?;
    ensure(
        g.satisfying_three == 8,
        format!("{} satisfy the three", g.satisfying_three),
    )?;
    ensure(g.three_with_xxx_plus == 8, "xxx product among the eight")?;
    ensure(
        g.satisfying_all_four == 0,
        "some assignment satisfies all four",
    )?;
    Ok("eigenvalues (+1,+1,+1,-1); 8/64 satisfy three, all with xxx=+1; 0/64 all four".into())
}

fn message_factorization() -> Verdict {
    let m = message_check().map_err(|e| e.to_string())?;
    ensure(
        (m.purity - 1.0).abs() <= 1e-9,
        format!("purity {}", m.purity),
    )?;
    ensure(
        (m.fidelity - 1.0).abs() <= 1e-9,
        format!("fidelity {}", m.fidelity),
    )?;
    Ok(format!(
        "purity {:.12}, fidelity {:.12}",
        m.purity, m.fidelity
    ))
}

fn collapse_contrast() -> Verdict {
    let one = Complex64::new(1.0, 0.0);
    let p0 = verify_wigner(one, 0.0)
        .map_err(|e| e.to_string())?
        .get(BellLabel::PhiPlus);
    let p1 = verify_wigner(one, 1.0)
        .map_err(|e| e.to_string())?
        .get(BellLabel::PhiPlus);
    ensure((p0 - 1.0).abs() <= 1e-9, format!("P(Phi+) at 0 = {p0}"))?;
    ensure((p1 - 0.5).abs() <= 1e-9, format!("P(Phi+) at 1 = {p1}"))?;
    Ok(format!(
        "P(Phi+) = {p0:.12} at lambda=0, {p1:.12} at lambda=1"
    ))
}

fn optimization_consistency() -> Verdict {
    let t = correlation_matrix(&labs_state_macro(FRAC_PI_4).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let bound = tsirelson_bound(&t);
    ensure(
        (bound - 2.0 * SQRT_2).abs() <= 1e-9,
        format!("bound {bound}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_gap, mut worst_excess) = (0.0f64, f64::NEG_INFINITY);
    for k in 0..100 {
        let state = random_two_qubit_state(&mut rng);
        let opt = optimize_state(
            &state,
            k,
            DEFAULT_RESTARTS,
            SeesawOptions::default(),
            Execution::default(),
        )
        .map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(opt.bound - opt.best.value);
        worst_excess = worst_excess.max(opt.best.value - opt.bound);
    }
    ensure(worst_gap <= 1e-4, format!("see-saw short by {worst_gap:e}"))?;
    ensure(
        worst_excess <= 1e-9,
        format!("see-saw exceeds bound by {worst_excess:e}"),
    )?;
    Ok(format!(
        "bound(pi/4) = {bound:.12}; 100 states: max shortfall {worst_gap:.1e}, max excess {worst_excess:.1e}"
    ))
}

fn feasibility_dichotomy() -> Verdict {
    let singlet = chsh_correlators(0.0).map_err(|e| e.to_string())?;
    let f0 = joint_feasibility(&singlet).map_err(|e| e.to_string())?;
    ensure(f0.feasible, "theta=0 reported infeasible")?;
    let witness = f0.witness.ok_or("no witness at theta=0")?;
    let dev = witness.max_deviation(&singlet.values());
    ensure(dev <= 1e-9, format!("witness deviation {dev:e}"))?;
    let f1 = joint_feasibility(&chsh_correlators(FRAC_PI_4).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(!f1.feasible, "pi/4 reported feasible")?;
    let v = f1.violation.ok_or("no violating placement")?;
    ensure(
        (v.value.abs() - 2.0 * SQRT_2).abs() <= 1e-9,
        format!("violation {}", v.value),
    )?;
    Ok(format!(
        "theta=0 witness within {dev:.1e}; pi/4 infeasible, {} gives {:.12}",
        v.placement, v.value
    ))
}

fn sampling_convergence() -> Verdict {
    let exact = chsh_correlators(FRAC_PI_4).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let a = sample_run(FRAC_PI_4, 100_000, seed, Execution::default())
            .map_err(|e| e.to_string())?;
        for (c, e) in a.table.iter().zip(exact.iter()) {
            let z = (c.value - e.value).abs() / c.stderr;
            worst = worst.max(z);
            ensure(
                z <= 5.0,
                format!(
                    "seed {seed}: {} {} off by {z:.2} sigma",
                    c.setting_a, c.setting_b
                ),
            )?;
        }
        let b = sample_run(FRAC_PI_4, 100_000, seed, Execution::Sequential)
            .map_err(|e| e.to_string())?;
        ensure(a == b, format!("seed {seed} not reproducible"))?;
    }
    let scenario = Scenario {
        shots: 100_000,
        seed: 3,
        ..Scenario::new(Experiment::Sample)
    };
    let r1 = run(&scenario).map_err(|e| e.to_string())?.to_json(true);
    let r2 = run(&scenario).map_err(|e| e.to_string())?.to_json(true);
    ensure(r1 == r2, "canonical reports differ")?;
    Ok(format!(
        "10 seeds x 1e5 shots: worst {worst:.2} sigma; reruns bit-identical"
    ))
}

fn reasoning_chain() -> Verdict {
    let chain = build_fr_chain();
    ensure(derive(&chain).is_err(), "unmerged chain not refused")?;
    let merged = merge_into_single_algebra(&chain);
    let run = derive(&merged).map_err(|e| e.to_string())?;
    ensure(run.contradiction, "no contradiction")?;
    ensure(
        run.steps.len() == 4,
        format!("trace length {}", run.steps.len()),
    )?;
    for id in merged.premises() {
        if !matches!(
            merged.get(id).map(|p| &p.kind),
            Some(Kind::Implication { .. })
        ) {
            continue;
        }
        let reduced = merged.without_premise(id);
        let model = satisfiability(&reduced).map_err(|e| e.to_string())?;
        ensure(
            model.is_some(),
            format!("removing {id} leaves it unsatisfiable"),
        )?;
        ensure(
            !derive(&reduced).map_err(|e| e.to_string())?.contradiction,
            format!("removing {id} still contradicts"),
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 0..100 {
        let c = random_chain(&mut rng, 8);
        let flag = derive(&c).map_err(|e| e.to_string())?.contradiction;
        let unsat = satisfiability(&c).map_err(|e| e.to_string())?.is_none();
        ensure(flag == unsat, format!("random chain {k} disagrees"))?;
    }
    Ok("merged: contradiction in 4 steps; unmerged refused; each deletion satisfiable; 100/100 agree".into())
}

fn representation_cross_checks() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let full = chsh_correlators(theta).map_err(|e| e.to_string())?;
        let small = chsh_correlators_macro(theta).map_err(|e| e.to_string())?;
        for (a, b) in full.iter().zip(small.iter()) {
            worst = worst.max((a.value - b.value).abs());
        }
    }
    ensure(
        worst <= 1e-10,
        format!("CHSH representations differ by {worst:e}"),
    )?;
    let g = ghz_state().map_err(|e| e.to_string())?;
    let embedded = embed_macro(&g.macro_space).map_err(|e| e.to_string())?;
    let gap = embedded
        .amplitudes()
        .iter()
        .zip(g.full.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    ensure(
        gap <= 1e-12,
        format!("GHZ representations differ by {gap:e}"),
    )?;
    Ok(format!(
        "CHSH 4 vs 16 dim: {worst:.1e} over 50 thetas; GHZ 8 vs 64 dim: {gap:.1e}"
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("CHSH maximum", chsh_maximum),
        ("LHV ceiling", lhv_ceiling),
        ("GHZ contradiction", ghz_contradiction),
        ("Message factorization", message_factorization),
        ("Collapse contrast", collapse_contrast),
        ("Optimization consistency", optimization_consistency),
        ("Feasibility dichotomy", feasibility_dichotomy),
        ("Sampling convergence", sampling_convergence),
        ("Reasoning chain", reasoning_chain),
        ("Representation cross-checks", representation_cross_checks),
    ];
    let start = Instant::now();
    let mut failures = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let verdict = check();
        let secs = t0.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", k + 1),
            Err(why) => {
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", k + 1);
                failures.push(k + 1);
            }
        }
    }
    println!(
        "acceptance: {} of 10 passed in {:.2}s",
        10 - failures.len(),
        start.elapsed().as_secs_f64()
    );
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
