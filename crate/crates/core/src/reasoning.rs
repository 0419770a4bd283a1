//! Statements attributed to observers, and what can be inferred from them.
//!
//! Inference is only licensed inside one owner's algebra. Chaining the four
//! observers' statements requires [`merge_into_single_algebra`] first; once
//! merged, forward chaining reaches a contradiction with W's observation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Id = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Owner {
    W,
    A,
    F1,
    F2,
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Owner::W => "W",
            Owner::A => "A",
            Owner::F1 => "F1",
            Owner::F2 => "F2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kind {
    Atomic,
    Implication { antecedent: Id, consequent: Id },
    Conjunction { conjuncts: Vec<Id> },
    Negation { of: Id },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub id: Id,
    pub text: String,
    pub owner: Owner,
    pub kind: Kind,
}

impl Proposition {
    pub fn atom(id: &str, text: &str, owner: Owner) -> Self {
        Self::with_kind(id, text, owner, Kind::Atomic)
    }

    pub fn implication(
        id: &str,
        text: &str,
        owner: Owner,
        antecedent: &str,
        consequent: &str,
    ) -> Self {
        let kind = Kind::Implication {
            antecedent: antecedent.into(),
            consequent: consequent.into(),
        };
        Self::with_kind(id, text, owner, kind)
    }

    pub fn conjunction(id: &str, text: &str, owner: Owner, conjuncts: &[&str]) -> Self {
        let kind = Kind::Conjunction {
            conjuncts: conjuncts.iter().map(|c| c.to_string()).collect(),
        };
        Self::with_kind(id, text, owner, kind)
    }

    pub fn negation(id: &str, text: &str, owner: Owner, of: &str) -> Self {
        Self::with_kind(id, text, owner, Kind::Negation { of: of.into() })
    }

    fn with_kind(id: &str, text: &str, owner: Owner, kind: Kind) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            owner,
            kind,
        }
    }

    fn references(&self) -> Vec<&Id> {
        match &self.kind {
            Kind::Atomic => vec![],
            Kind::Implication {
                antecedent,
                consequent,
            } => vec![antecedent, consequent],
            Kind::Conjunction { conjuncts } => conjuncts.iter().collect(),
            Kind::Negation { of } => vec![of],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReasoningError {
    #[error("duplicate proposition id {0:?}")]
    DuplicateId(Id),
    #[error("proposition {from:?} references unknown or later id {missing:?}")]
    UnknownReference { from: Id, missing: Id },
    #[error("premise {0:?} is not a proposition of the chain")]
    UnknownPremise(Id),
    #[error(
        "inference across owners {owners:?} is not licensed; merge into a single algebra first"
    )]
    MixedOwnership { owners: Vec<Owner> },
    #[error("{atoms} atoms exceed the brute-force limit of {limit}")]
    TooManyAtoms { atoms: usize, limit: usize },
    #[error("audit failed at step {step}: {reason}")]
    AuditFailed { step: usize, reason: String },
}

/// Propositions (definitions) plus the ids asserted as premises.
///
/// Every reference points to an earlier proposition, so the definitions are acyclic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    propositions: Vec<Proposition>,
    premises: Vec<Id>,
    /// Set once the owners have been collapsed into one algebra.
    #[serde(default)]
    merged: bool,
}

impl Chain {
    pub fn new(propositions: Vec<Proposition>, premises: Vec<Id>) -> Result<Self, ReasoningError> {
        let mut seen = BTreeSet::new();
        for p in &propositions {
            for r in p.references() {
                if !seen.contains(r) {
                    return Err(ReasoningError::UnknownReference {
                        from: p.id.clone(),
                        missing: r.clone(),
                    });
                }
            }
            if !seen.insert(p.id.clone()) {
                return Err(ReasoningError::DuplicateId(p.id.clone()));
            }
        }
        if let Some(bad) = premises.iter().find(|id| !seen.contains(*id)) {
            return Err(ReasoningError::UnknownPremise(bad.clone()));
        }
        Ok(Self {
            propositions,
            premises,
            merged: false,
        })
    }

    pub fn empty() -> Self {
        Self {
            propositions: vec![],
            premises: vec![],
            merged: false,
        }
    }

    pub fn propositions(&self) -> &[Proposition] {
        &self.propositions
    }

    pub fn premises(&self) -> &[Id] {
        &self.premises
    }

    pub fn is_merged(&self) -> bool {
        self.merged
    }

    pub fn get(&self, id: &str) -> Option<&Proposition> {
        self.propositions.iter().find(|p| p.id == id)
    }

    pub fn atoms(&self) -> Vec<&Id> {
        self.propositions
            .iter()
            .filter(|p| p.kind == Kind::Atomic)
            .map(|p| &p.id)
            .collect()
    }

    pub fn owners(&self) -> BTreeSet<Owner> {
        self.propositions.iter().map(|p| p.owner).collect()
    }

    /// Compound premises: implications and conjunctions.
    pub fn statements(&self) -> Vec<&Proposition> {
        self.premise_props()
            .filter(|p| matches!(p.kind, Kind::Implication { .. } | Kind::Conjunction { .. }))
            .collect()
    }

    /// Literal facts asserted directly or as conjuncts of a premise.
    pub fn observations(&self) -> Vec<Id> {
        let mut out = Vec::new();
        for p in self.premise_props() {
            match &p.kind {
                Kind::Conjunction { conjuncts } => out.extend(conjuncts.iter().cloned()),
                Kind::Atomic | Kind::Negation { .. } => out.push(p.id.clone()),
                Kind::Implication { .. } => {}
            }
        }
        out
    }

    fn premise_props(&self) -> impl Iterator<Item = &Proposition> {
        self.premises.iter().filter_map(|id| self.get(id))
    }

    /// Drops a premise; its definition stays available.
    pub fn without_premise(&self, id: &str) -> Self {
        let mut c = self.clone();
        c.premises.retain(|p| p != id);
        c
    }

    /// Removes an observation wherever it is asserted, including inside premise conjunctions.
    pub fn without_observation(&self, id: &str) -> Self {
        let mut c = self.without_premise(id);
        let premises: BTreeSet<Id> = c.premises.iter().cloned().collect();
        for p in c.propositions.iter_mut() {
            if let Kind::Conjunction { conjuncts } = &mut p.kind {
                if premises.contains(&p.id) {
                    conjuncts.retain(|x| x != id);
                }
            }
        }
        c
    }

    fn eval(&self, id: &str, assignment: &BTreeMap<&Id, bool>) -> bool {
        let p = self.get(id).expect("validated reference");
        match &p.kind {
            Kind::Atomic => assignment[&p.id],
            Kind::Implication {
                antecedent,
                consequent,
            } => !self.eval(antecedent, assignment) || self.eval(consequent, assignment),
            Kind::Conjunction { conjuncts } => conjuncts.iter().all(|c| self.eval(c, assignment)),
            Kind::Negation { of } => !self.eval(of, assignment),
        }
    }
}

/// The four statements and two observations of the extended Wigner's-friend argument.
pub fn build_fr_chain() -> Chain {
    use Owner::*;
    let props = vec![
        Proposition::atom("P", "A sees x=ok", A),
        Proposition::atom("Q", "F2 sees z=+", F2),
        Proposition::atom("R", "F1 sees r=t", F1),
        Proposition::atom("S", "W sees w≠ok", W),
        Proposition::negation("w_ok", "W sees w=ok", W, "S"),
        Proposition::implication("S1", "If F1 sees r=t, W will see w≠ok", F1, "R", "S"),
        Proposition::implication("S2", "If F2 sees z=+, F1 sees r=t", F2, "Q", "R"),
        Proposition::implication("S3", "If A sees x=ok, F2 sees z=+", A, "P", "Q"),
        Proposition::conjunction(
            "S4",
            "W sees w=ok and is told A sees x=ok",
            W,
            &["w_ok", "P"],
        ),
    ];
    let premises = ["S1", "S2", "S3", "S4"].map(String::from).to_vec();
    Chain::new(props, premises).expect("well-formed chain")
}

/// Reassigns every proposition to W. This is the step that lets all observers'
/// statements be assigned truth values jointly.
pub fn merge_into_single_algebra(chain: &Chain) -> Chain {
    let mut c = chain.clone();
    for p in c.propositions.iter_mut() {
        p.owner = Owner::W;
    }
    c.merged = true;
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// From `a` and `a ⟹ c`, conclude `c`.
    ModusPonens,
    /// From `a ⟹ b` and `b ⟹ c`, conclude `a ⟹ c`.
    Transitivity,
    /// `a` and `¬a` both hold.
    Contradiction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rule: Rule,
    pub premises: Vec<Id>,
    pub conclusion: Id,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceRun {
    /// Premises plus their conjuncts.
    pub given: Vec<Id>,
    pub steps: Vec<Step>,
    pub derived: Vec<Id>,
    pub contradiction: bool,
}

pub const CONTRADICTION: &str = "⊥";

impl InferenceRun {
    pub fn transcript(&self, chain: &Chain) -> String {
        let text = |id: &str| chain.get(id).map_or(id.to_string(), |p| p.text.clone());
        let mut out = String::new();
        for g in &self.given {
            out.push_str(&format!("given  {g}: {}\n", text(g)));
        }
        for (k, s) in self.steps.iter().enumerate() {
            let rule = match s.rule {
                Rule::ModusPonens => "modus ponens",
                Rule::Transitivity => "transitivity",
                Rule::Contradiction => "contradiction",
            };
            out.push_str(&format!(
                "{:>2}. {} from [{}] by {rule}: {}\n",
                k + 1,
                s.conclusion,
                s.premises.join(", "),
                text(&s.conclusion)
            ));
        }
        out
    }
}

fn single_owner(chain: &Chain) -> Result<(), ReasoningError> {
    let owners = chain.owners();
    if owners.len() > 1 {
        return Err(ReasoningError::MixedOwnership {
            owners: owners.into_iter().collect(),
        });
    }
    Ok(())
}

fn collect_given(chain: &Chain) -> Vec<Id> {
    let mut given = Vec::new();
    let mut stack: Vec<Id> = chain.premises.iter().rev().cloned().collect();
    while let Some(id) = stack.pop() {
        if given.contains(&id) {
            continue;
        }
        if let Some(Kind::Conjunction { conjuncts }) = chain.get(&id).map(|p| &p.kind) {
            stack.extend(conjuncts.iter().rev().cloned());
        }
        given.push(id);
    }
    given
}

/// Forward chaining by modus ponens, then a contradiction check.
pub fn derive(chain: &Chain) -> Result<InferenceRun, ReasoningError> {
    single_owner(chain)?;
    let given = collect_given(chain);
    let mut facts: BTreeSet<Id> = given.iter().cloned().collect();
    let mut steps = Vec::new();
    let mut derived = Vec::new();
    loop {
        let fired = chain.propositions.iter().find_map(|p| match &p.kind {
            Kind::Implication {
                antecedent,
                consequent,
            } if facts.contains(&p.id)
                && facts.contains(antecedent)
                && !facts.contains(consequent) =>
            {
                Some(Step {
                    rule: Rule::ModusPonens,
                    premises: vec![p.id.clone(), antecedent.clone()],
                    conclusion: consequent.clone(),
                })
            }
            _ => None,
        });
        let Some(step) = fired else { break };
        facts.insert(step.conclusion.clone());
        derived.push(step.conclusion.clone());
        steps.push(step);
    }
    let clash = chain.propositions.iter().find_map(|p| match &p.kind {
        Kind::Negation { of } if facts.contains(&p.id) && facts.contains(of) => {
            Some((of.clone(), p.id.clone()))
        }
        _ => None,
    });
    let contradiction = clash.is_some();
    if let Some((a, not_a)) = clash {
        steps.push(Step {
            rule: Rule::Contradiction,
            premises: vec![a, not_a],
            conclusion: CONTRADICTION.into(),
        });
        derived.push(CONTRADICTION.into());
    }
    Ok(InferenceRun {
        given,
        steps,
        derived,
        contradiction,
    })
}

/// `(antecedent, consequent)` of a composed implication with the step that produced it.
pub type ComposedImplication = ((Id, Id), Step);

/// Composed implications `a ⟹ c` from asserted `a ⟹ b`, `b ⟹ c`, to a fixpoint.
///
/// Returns `(antecedent, consequent)` pairs with the step that produced each.
pub fn transitive_closure(chain: &Chain) -> Result<Vec<ComposedImplication>, ReasoningError> {
    single_owner(chain)?;
    let given = collect_given(chain);
    let mut edges: Vec<((Id, Id), Id)> = given
        .iter()
        .filter_map(|id| match &chain.get(id)?.kind {
            Kind::Implication {
                antecedent,
                consequent,
            } => Some(((antecedent.clone(), consequent.clone()), id.clone())),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    loop {
        let mut new = None;
        'search: for ((a, b), first) in &edges {
            for ((b2, c), second) in &edges {
                if b == b2 && !edges.iter().any(|((x, y), _)| x == a && y == c) {
                    new = Some(((a.clone(), c.clone()), first.clone(), second.clone()));
                    break 'search;
                }
            }
        }
        let Some(((a, c), first, second)) = new else {
            break;
        };
        let name = format!("{a}=>{c}");
        out.push((
            (a.clone(), c.clone()),
            Step {
                rule: Rule::Transitivity,
                premises: vec![first, second],
                conclusion: name.clone(),
            },
        ));
        edges.push(((a, c), name));
    }
    Ok(out)
}

/// Replays every step from its cited premises with a single rule application.
pub fn audit(chain: &Chain, run: &InferenceRun) -> Result<(), ReasoningError> {
    let mut known: BTreeSet<Id> = collect_given(chain).into_iter().collect();
    for (k, step) in run.steps.iter().enumerate() {
        let fail = |reason: &str| ReasoningError::AuditFailed {
            step: k,
            reason: reason.into(),
        };
        if let Some(missing) = step.premises.iter().find(|p| !known.contains(*p)) {
            return Err(fail(&format!("premise {missing} not yet established")));
        }
        let ok = match (step.rule, step.premises.as_slice()) {
            (Rule::ModusPonens, [imp, ante]) => matches!(
                chain.get(imp).map(|p| &p.kind),
                Some(Kind::Implication { antecedent, consequent })
                    if antecedent == ante && *consequent == step.conclusion
            ),
            (Rule::Contradiction, [a, not_a]) => {
                step.conclusion == CONTRADICTION
                    && matches!(chain.get(not_a).map(|p| &p.kind), Some(Kind::Negation { of }) if of == a)
            }
            _ => false,
        };
        if !ok {
            return Err(fail("conclusion does not follow by the cited rule"));
        }
        known.insert(step.conclusion.clone());
    }
    Ok(())
}

pub const MAX_SAT_ATOMS: usize = 20;

/// First satisfying assignment of the premises, trying all-true first.
///
/// Assignment `k` sets atom `i` false iff bit `i` of `k` is set.
pub fn satisfiability(chain: &Chain) -> Result<Option<BTreeMap<Id, bool>>, ReasoningError> {
    let atoms = chain.atoms();
    if atoms.len() > MAX_SAT_ATOMS {
        return Err(ReasoningError::TooManyAtoms {
            atoms: atoms.len(),
            limit: MAX_SAT_ATOMS,
        });
    }
    for mask in 0u32..(1 << atoms.len()) {
        let assignment: BTreeMap<&Id, bool> = atoms
            .iter()
            .enumerate()
            .map(|(i, &a)| (a, mask & (1 << i) == 0))
            .collect();
        if chain.premises.iter().all(|p| chain.eval(p, &assignment)) {
            return Ok(Some(
                assignment
                    .into_iter()
                    .map(|(k, v)| (k.clone(), v))
                    .collect(),
            ));
        }
    }
    Ok(None)
}

/// Random single-owner Horn chain: literal facts plus `a ⟹ b` and `a ⟹ ¬b`.
///
/// On this fragment forward chaining is complete, so [`derive`] and
/// [`satisfiability`] must agree.
pub fn random_chain(rng: &mut impl rand::Rng, max_atoms: usize) -> Chain {
    let n = rng.random_range(1..=max_atoms);
    let mut props = Vec::new();
    for i in 0..n {
        props.push(Proposition::atom(
            &format!("a{i}"),
            &format!("atom {i}"),
            Owner::W,
        ));
        props.push(Proposition::negation(
            &format!("n{i}"),
            &format!("not atom {i}"),
            Owner::W,
            &format!("a{i}"),
        ));
    }
    let mut premises = Vec::new();
    for k in 0..rng.random_range(0..=2 * n) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let target = if rng.random_bool(0.3) {
            format!("n{b}")
        } else {
            format!("a{b}")
        };
        let id = format!("i{k}");
        props.push(Proposition::implication(
            &id,
            "",
            Owner::W,
            &format!("a{a}"),
            &target,
        ));
        premises.push(id);
    }
    for _ in 0..rng.random_range(0..=3) {
        let a = rng.random_range(0..n);
        let lit = if rng.random_bool(0.3) {
            format!("n{a}")
        } else {
            format!("a{a}")
        };
        if !premises.contains(&lit) {
            premises.push(lit);
        }
    }
    Chain::new(props, premises).expect("generated chain is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fr_chain_shape() {
        let c = build_fr_chain();
        assert_eq!(c.statements().len(), 4);
        assert_eq!(c.observations(), vec!["w_ok".to_string(), "P".to_string()]);
        assert_ne!(c.get("S2").unwrap().owner, Owner::W);
        assert_ne!(c.get("S3").unwrap().owner, Owner::W);
        assert_eq!(c.atoms().len(), 4);
    }

    #[test]
    fn serde_round_trip() {
        let c = build_fr_chain();
        let json = serde_json::to_string(&c).unwrap();
        let back: Chain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        let run = derive(&merge_into_single_algebra(&c)).unwrap();
        let back: InferenceRun =
            serde_json::from_str(&serde_json::to_string(&run).unwrap()).unwrap();
        assert_eq!(back, run);
    }

    #[test]
    fn merge_rewrites_owners_only() {
        let c = build_fr_chain();
        let m = merge_into_single_algebra(&c);
        assert!(m.propositions().iter().all(|p| p.owner == Owner::W));
        assert!(m.is_merged());
        assert_eq!(m.atoms(), c.atoms());
        assert_eq!(merge_into_single_algebra(&m), m);
    }

    #[test]
    fn unmerged_chain_is_refused() {
        let err = derive(&build_fr_chain()).unwrap_err();
        assert!(matches!(err, ReasoningError::MixedOwnership { ref owners } if owners.len() == 4));
        assert!(transitive_closure(&build_fr_chain()).is_err());
    }

    #[test]
    fn merged_chain_contradicts_observation() {
        let m = merge_into_single_algebra(&build_fr_chain());
        let run = derive(&m).unwrap();
        assert!(run.contradiction);
        assert_eq!(run.steps.len(), 4);
        let conclusions: Vec<&str> = run.steps.iter().map(|s| s.conclusion.as_str()).collect();
        assert_eq!(conclusions, ["Q", "R", "S", CONTRADICTION]);
        audit(&m, &run).unwrap();
        assert_eq!(satisfiability(&m).unwrap(), None);
        assert!(run.transcript(&m).contains("contradiction"));
    }

    #[test]
    fn transitivity_composes_the_chain() {
        let m = merge_into_single_algebra(&build_fr_chain());
        let pairs: Vec<(Id, Id)> = transitive_closure(&m)
            .unwrap()
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        assert!(pairs.contains(&("P".into(), "S".into())));
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn dropping_any_implication_removes_contradiction() {
        let m = merge_into_single_algebra(&build_fr_chain());
        for s in ["S1", "S2", "S3"] {
            let c = m.without_premise(s);
            assert!(!derive(&c).unwrap().contradiction, "{s}");
            assert!(satisfiability(&c).unwrap().is_some(), "{s}");
        }
    }

    #[test]
    fn missing_observation_fires_nothing() {
        let c = merge_into_single_algebra(&build_fr_chain()).without_observation("P");
        let run = derive(&c).unwrap();
        assert!(!run.contradiction);
        assert!(run.steps.is_empty());
        assert!(satisfiability(&c).unwrap().is_some());
    }

    #[test]
    fn empty_chain_is_all_true() {
        let c = Chain::empty();
        assert_eq!(satisfiability(&c).unwrap(), Some(BTreeMap::new()));
        let c = Chain::new(vec![Proposition::atom("a", "a", Owner::A)], vec![]).unwrap();
        assert!(satisfiability(&c).unwrap().unwrap()["a"]);
    }

    #[test]
    fn too_many_atoms_is_refused() {
        let props = (0..21)
            .map(|i| Proposition::atom(&format!("x{i}"), "", Owner::W))
            .collect();
        let c = Chain::new(props, vec![]).unwrap();
        assert!(matches!(
            satisfiability(&c),
            Err(ReasoningError::TooManyAtoms { atoms: 21, .. })
        ));
    }

    #[test]
    fn malformed_chains_are_rejected() {
        let dangling = vec![Proposition::negation("n", "", Owner::W, "a")];
        assert!(matches!(
            Chain::new(dangling, vec![]),
            Err(ReasoningError::UnknownReference { .. })
        ));
        let dup = vec![
            Proposition::atom("a", "", Owner::W),
            Proposition::atom("a", "", Owner::W),
        ];
        assert!(matches!(
            Chain::new(dup, vec![]),
            Err(ReasoningError::DuplicateId(_))
        ));
        let atom = vec![Proposition::atom("a", "", Owner::W)];
        assert!(matches!(
            Chain::new(atom, vec!["b".into()]),
            Err(ReasoningError::UnknownPremise(_))
        ));
    }

    #[test]
    fn audit_catches_forged_step() {
        let m = merge_into_single_algebra(&build_fr_chain());
        let mut run = derive(&m).unwrap();
        run.steps[0].conclusion = "R".into();
        assert!(audit(&m, &run).is_err());
    }

    #[test]
    fn derive_agrees_with_brute_force_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut contradictions = 0;
        for _ in 0..100 {
            let c = random_chain(&mut rng, 8);
            let run = derive(&c).unwrap();
            audit(&c, &run).unwrap();
            assert_eq!(
                run.contradiction,
                satisfiability(&c).unwrap().is_none(),
                "{c:?}"
            );
            contradictions += usize::from(run.contradiction);
        }
        assert!(contradictions > 0 && contradictions < 100);
    }

    proptest! {
        #[test]
        fn merge_is_idempotent_and_preserves_atoms(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_chain(&mut rng, 8);
            let once = merge_into_single_algebra(&c);
            prop_assert_eq!(&merge_into_single_algebra(&once), &once);
            prop_assert_eq!(once.atoms(), c.atoms());
        }
    }
}
