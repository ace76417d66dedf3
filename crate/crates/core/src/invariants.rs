//! Whole-model invariant checks used by the property and acceptance suites.
//!
//! Each check returns one line per counterexample; an empty vector means the
//! invariant held on every instance the model offers. Inconsistency is always
//! judged by [`oracle::brute_consistency`], never by the engine's clash scan,
//! except in [`engine_agrees_with_oracle`] where the two are compared.

use std::collections::BTreeSet;

use crate::casebase::CaseBase;
use crate::classifier::{case_from_state, ClassifierModel, State};
use crate::factor::{display_set, Concern, FactorSet};
use crate::oracle::{self, OracleError};
use crate::reasoning::{
    conflict_relevant, decide, relevance, synthesize_solutions, DecisionTrace, StateView,
};
use crate::rules::{is_minimal_for, validate_solution};

type Found = Result<Vec<String>, OracleError>;

fn two_case_consistent(
    model: &ClassifierModel,
    s: &State,
    s2: &State,
    concern: &Concern,
) -> Result<bool, OracleError> {
    let h = model.hierarchy();
    let cases = [s, s2].map(|x| case_from_state(h, x).expect("decided state"));
    let cb = CaseBase::from_cases(h, cases).expect("same hierarchy");
    oracle::brute_consistency(h, &cb, concern)
}

/// Ordered pairs of decided states that took opposite sides of a concern.
fn opposed_pairs(model: &ClassifierModel) -> Vec<(&State, &State, Concern)> {
    let mut out = Vec::new();
    let decided: Vec<&State> = model.decided().collect();
    for c in model.hierarchy().concerns() {
        for s in &decided {
            for s2 in &decided {
                let (a, b) = (StateView::new(s).dec(c), StateView::new(s2).dec(c));
                if let (Some(a), Some(b)) = (a, b) {
                    if a.opposite().as_ref() == Some(b) {
                        out.push((*s, *s2, c.clone()));
                    }
                }
            }
        }
    }
    out
}

/// Conflict relevance of `s` for `s2` holds exactly when `{case(s),
/// case(s2)}` is inconsistent on the concern.
pub fn conflict_equivalence(model: &ClassifierModel) -> Found {
    let h = model.hierarchy();
    let mut out = Vec::new();
    for (s, s2, c) in opposed_pairs(model) {
        let relevant = conflict_relevant(h, s, s2, &c).expect("decided");
        let inconsistent = !two_case_consistent(model, s, s2, &c)?;
        if relevant != inconsistent {
            out.push(format!(
                "{} vs {} on {c}: relevant={relevant} inconsistent={inconsistent}",
                s.id, s2.id
            ));
        }
    }
    Ok(out)
}

/// Two precedents relevant to a third with swapped support sets are
/// conflict-relevant to each other, in both directions.
pub fn euclidean_relevance(model: &ClassifierModel, f: &FactorSet, g: &FactorSet) -> Vec<String> {
    let h = model.hierarchy();
    let mut out = Vec::new();
    for (s1, s2, c) in opposed_pairs(model) {
        if StateView::new(s1).dec(&c) != Some(&c.positive()) {
            continue;
        }
        for s0 in model.states() {
            let r1 = relevance(h, f, g, s1, s0, &c).expect("decided");
            let r2 = relevance(h, g, f, s2, s0, &c).expect("decided");
            if !(r1 && r2) {
                continue;
            }
            let d12 = StateView::new(s2).facts(h, &c.positive());
            let d21 = StateView::new(s1).facts(h, &c.negative());
            let empty = FactorSet::new();
            let a = relevance(h, &d12, &empty, s1, s2, &c).expect("decided");
            let b = relevance(h, &d21, &empty, s2, s1, &c).expect("decided");
            if !(a && b) {
                out.push(format!(
                    "{} and {} via {} on {c} with F={} G={}",
                    s1.id,
                    s2.id,
                    s0.id,
                    display_set(f),
                    display_set(g)
                ));
            }
        }
    }
    out
}

/// Both precedents cited on opposite sides of a concern in any query's
/// trace are conflict-relevant to each other.
pub fn cited_conflicts_are_mutual(model: &ClassifierModel) -> Vec<String> {
    let h = model.hierarchy();
    let mut out = Vec::new();
    for (id, trace) in traces(model) {
        for stage in trace.stages.iter().flat_map(|s| &s.concerns) {
            let [u, ub] = stage.concern.sides();
            for a in stage.cite(&u) {
                for b in stage.cite(&ub) {
                    let (sa, sb) = (model.state(a).unwrap(), model.state(b).unwrap());
                    let ok = conflict_relevant(h, sa, sb, &stage.concern).unwrap()
                        && conflict_relevant(h, sb, sa, &stage.concern).unwrap();
                    if !ok {
                        out.push(format!("{id}: {a} and {b} on {}", stage.concern));
                    }
                }
            }
        }
    }
    out
}

fn traces(model: &ClassifierModel) -> Vec<(String, DecisionTrace)> {
    model
        .states()
        .iter()
        .filter(|s| !s.is_decided())
        .map(|s| {
            (
                s.id.to_string(),
                decide(model, &s.id).expect("query decides"),
            )
        })
        .collect()
}

fn oracle_consistent(model: &ClassifierModel) -> Result<bool, OracleError> {
    let h = model.hierarchy();
    let cb = model.casebase().expect("cases build");
    for c in h.concerns() {
        if !oracle::brute_consistency(h, &cb, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A consistent case base never yields an ambiguous concern.
pub fn consistency_rules_out_ambiguity(model: &ClassifierModel) -> Found {
    let mut out = Vec::new();
    if !oracle_consistent(model)? {
        return Ok(out);
    }
    for (id, trace) in traces(model) {
        for stage in trace.stages.iter().flat_map(|s| &s.concerns) {
            if stage.h.len() > 1 {
                out.push(format!("{id}: {} ambiguous", stage.concern));
            }
        }
    }
    Ok(out)
}

/// Whether every concern raised by the established set has a side in it.
pub fn addresses_raised_concerns(model: &ClassifierModel, trace: &DecisionTrace) -> bool {
    let h = model.hierarchy();
    let f = trace.established();
    h.concerns_raised(f)
        .iter()
        .all(|c| c.sides().iter().any(|side| f.contains(side)))
}

/// Synthesis on a consistent case base with an unambiguous verdict: every
/// solution re-validates, concludes the verdict and is minimal per concern;
/// some solution exists whenever the established set addresses every concern
/// it raises.
pub fn synthesis_properties(model: &ClassifierModel) -> Found {
    let h = model.hierarchy();
    let mut out = Vec::new();
    if !oracle_consistent(model)? {
        return Ok(out);
    }
    for (id, trace) in traces(model) {
        let Some(verdict) = trace.verdict() else {
            continue;
        };
        let parts = synthesize_solutions(model, &trace).expect("unambiguous verdict");
        let count: usize = parts.iter().map(|p| p.solutions.len()).sum();
        if count == 0 && addresses_raised_concerns(model, &trace) {
            out.push(format!("{id}: no solution synthesized"));
        }
        for ps in &parts {
            for sol in &ps.solutions {
                let shown = sol.to_string();
                if validate_solution(h, &trace.facts, sol.rules().iter().cloned()).as_ref()
                    != Ok(sol)
                {
                    out.push(format!("{id}: {shown} does not re-validate"));
                }
                let top = sol.rule_for(&Concern::Top).map(|r| r.conclusion().clone());
                if top.and_then(|t| t.as_outcome()) != Some(verdict) {
                    out.push(format!("{id}: {shown} misses verdict {verdict}"));
                }
                for c in h.concerns() {
                    if !is_minimal_for(h, sol, c, &ps.partition, &trace.facts) {
                        out.push(format!("{id}: {shown} not minimal for {c}"));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Adding any synthesized case to a consistent case base keeps it consistent.
pub fn synthesis_preserves_consistency(model: &ClassifierModel) -> Found {
    let h = model.hierarchy();
    let mut out = Vec::new();
    if !oracle_consistent(model)? {
        return Ok(out);
    }
    let base = model.casebase().expect("cases build");
    for (id, trace) in traces(model) {
        let Some(verdict) = trace.verdict() else {
            continue;
        };
        for ps in synthesize_solutions(model, &trace).expect("unambiguous verdict") {
            for sol in ps.solutions {
                let s = State::decided(&id, trace.facts.clone(), sol.rules().clone(), verdict);
                let mut cb = base.clone();
                cb.push(h, case_from_state(h, &s).expect("valid case"))
                    .expect("same hierarchy");
                for c in h.concerns() {
                    if !oracle::brute_consistency(h, &cb, c)? {
                        out.push(format!("{id}: adding {} breaks {c}", sol));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Engine consistency agrees with the brute-force oracle per concern, and
/// synthesis equals the filtered enumeration for every query.
pub fn engine_agrees_with_oracle(model: &ClassifierModel) -> Found {
    let h = model.hierarchy();
    let mut out = Vec::new();
    let cb = model.casebase().expect("cases build");
    for c in h.concerns() {
        let engine = cb.consistency(h, Some(c)).is_consistent();
        let brute = oracle::brute_consistency(h, &cb, c)?;
        if engine != brute {
            out.push(format!(
                "consistency on {c}: engine {engine} oracle {brute}"
            ));
        }
    }
    for (id, trace) in traces(model) {
        let engine: BTreeSet<_> = if trace.top().len() == 1 {
            synthesize_solutions(model, &trace)
                .expect("unambiguous verdict")
                .into_iter()
                .flat_map(|p| p.solutions)
                .collect()
        } else {
            BTreeSet::new()
        };
        let brute = oracle::filtered_solutions(model, &trace)?;
        if engine != brute {
            out.push(format!(
                "{id}: synthesis {} solutions, oracle {}",
                engine.len(),
                brute.len()
            ));
        }
    }
    Ok(out)
}
