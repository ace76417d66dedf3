//! Concern-based relevance and the decision process for new states.
//!
//! [`decide`] walks the concerns degree by degree. At degree `n` a decided
//! state `s` is citable for side `t` of a concern when it decided `t` there,
//! its reason for `t` is already established (`Reas^t(s) ⊆ F^t_{n-1}`), and
//! everything established against `t` was already present in `s`
//! (`F^t̄_{n-1} ⊆ Facts^t̄(s)`). Sides with a citable precedent are added to
//! the established set. [`synthesize_solutions`] then builds every rule set
//! for the new state that stays within the cited reasons, one conflict-free
//! partition of the established set at a time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::casebase::CaseBase;
use crate::classifier::{case_from_state, ClassifierModel, ModelError, State};
use crate::factor::{Concern, Factor, FactorSet, Name, Outcome};
use crate::hierarchy::Hierarchy;
use crate::rules::{advance, validate_solution, Rule, Solution};

/// Per-concern ceiling on candidate antecedents during synthesis.
pub const ANTECEDENT_CAP: usize = 1 << 16;
/// Ceiling on rule-set combinations tried per partition.
pub const COMBINATION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasoningError {
    #[error("no state named `{0}`")]
    UnknownState(Name),
    #[error("state `{0}` is already decided; only undecided states can be queried")]
    AlreadyDecided(Name),
    #[error("precedent `{0}` is undecided")]
    UndecidedPrecedent(Name),
    #[error("states `{0}` and `{1}` are not decided on opposite sides of {2}")]
    NotOpposed(Name, Name, Concern),
    #[error("the established set is empty, so it has no conflict-free partition")]
    EmptyEstablishedSet,
    #[error("synthesis needs exactly one top-level verdict, found {0}")]
    AmbiguousVerdict(usize),
    #[error("synthesis for {concern} exceeds the candidate cap ({candidates} candidates)")]
    SynthesisCap { concern: Concern, candidates: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

static EMPTY: FactorSet = FactorSet::new();

/// Derived view of a state: `s̃`, `dec` and `Reas` per concern.
#[derive(Clone, Debug)]
pub struct StateView<'a> {
    state: &'a State,
    tilde: FactorSet,
}

impl<'a> StateView<'a> {
    pub fn new(state: &'a State) -> StateView<'a> {
        let mut tilde = state.facts.clone();
        tilde.extend(
            state
                .rules
                .iter()
                .map(|r| r.conclusion().clone())
                .filter(|f| !f.is_decision()),
        );
        StateView { state, tilde }
    }

    pub fn state(&self) -> &'a State {
        self.state
    }

    /// `s̃`: the base facts plus every non-outcome conclusion.
    pub fn tilde(&self) -> &FactorSet {
        &self.tilde
    }

    /// `Facts^t(s) = s̃ ∩ Facts^t`.
    pub fn facts(&self, h: &Hierarchy, side: &Factor) -> FactorSet {
        h.restrict(&self.tilde, side)
    }

    /// `dec^{u/ū}(s)`, or `None` when the solution has no rule for the concern.
    pub fn dec(&self, c: &Concern) -> Option<&'a Factor> {
        self.state.rule_for(c).map(Rule::conclusion)
    }

    /// `Reas^t(s)`: the antecedent of the concern's rule when it concludes `t`.
    pub fn reas(&self, side: &Factor) -> &'a FactorSet {
        match side.concern().and_then(|c| self.state.rule_for(&c)) {
            Some(r) if r.conclusion() == side => r.antecedent(),
            _ => &EMPTY,
        }
    }
}

/// `(D, G, s, s') ∈ R^{u/ū}` with `t = dec(s)`; false when `s` did not
/// decide the concern.
pub fn relevance(
    h: &Hierarchy,
    d: &FactorSet,
    g: &FactorSet,
    s: &State,
    s2: &State,
    concern: &Concern,
) -> Result<bool, ReasoningError> {
    if !s.is_decided() {
        return Err(ReasoningError::UndecidedPrecedent(s.id.clone()));
    }
    let (v, v2) = (StateView::new(s), StateView::new(s2));
    Ok(relevance_views(h, d, g, &v, &v2, concern))
}

fn relevance_views(
    h: &Hierarchy,
    d: &FactorSet,
    g: &FactorSet,
    s: &StateView,
    s2: &StateView,
    concern: &Concern,
) -> bool {
    let Some(t) = s.dec(concern) else {
        return false;
    };
    let tb = t.opposite().expect("concern sides have opposites");
    let mut support = s2.reas(t).clone();
    support.extend(h.restrict(d, t));
    if !s.reas(t).is_subset(&support) {
        return false;
    }
    let against = s.facts(h, &tb);
    s2.reas(&tb).is_subset(&against) && h.restrict(g, &tb).is_subset(&against)
}

/// The conflicting-case instance `(Facts^t(s'), ∅, s, s')`, `t = dec(s)`.
pub fn conflict_relevant(
    h: &Hierarchy,
    s: &State,
    s2: &State,
    concern: &Concern,
) -> Result<bool, ReasoningError> {
    let v = StateView::new(s);
    let Some(t) = v.dec(concern) else {
        return Ok(false);
    };
    let d = StateView::new(s2).facts(h, t);
    relevance(h, &d, &FactorSet::new(), s, s2, concern)
}

/// Returns `(conflict relevance, two-case inconsistency)` for two states
/// decided on opposite sides of `concern`; the two must agree.
pub fn conflict_equivalence_check(
    h: &Hierarchy,
    s: &State,
    s2: &State,
    concern: &Concern,
) -> Result<(bool, bool), ReasoningError> {
    for x in [s, s2] {
        if !x.is_decided() {
            return Err(ReasoningError::UndecidedPrecedent(x.id.clone()));
        }
    }
    let (d1, d2) = (
        StateView::new(s).dec(concern),
        StateView::new(s2).dec(concern),
    );
    match (d1, d2) {
        (Some(a), Some(b)) if a.opposite().as_ref() == Some(b) => {}
        _ => {
            return Err(ReasoningError::NotOpposed(
                s.id.clone(),
                s2.id.clone(),
                concern.clone(),
            ))
        }
    }
    let relevant = conflict_relevant(h, s, s2, concern)?;
    let cb = CaseBase::from_cases(h, [case_from_state(h, s)?, case_from_state(h, s2)?])
        .map_err(ModelError::from)?;
    let inconsistent = !cb.consistency(h, Some(concern)).is_consistent();
    Ok((relevant, inconsistent))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ambiguity {
    /// No decision can be made: `h = ∅`.
    NonePossible,
    Unambiguous,
    Ambiguous,
}

impl Ambiguity {
    pub fn of(h: &FactorSet) -> Ambiguity {
        match h.len() {
            0 => Ambiguity::NonePossible,
            1 => Ambiguity::Unambiguous,
            _ => Ambiguity::Ambiguous,
        }
    }
}

impl fmt::Display for Ambiguity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ambiguity::NonePossible => "none-possible",
            Ambiguity::Unambiguous => "unambiguous",
            Ambiguity::Ambiguous => "ambiguous",
        })
    }
}

/// One concern's record within a stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcernStage {
    pub concern: Concern,
    /// Whether `F_{n-1}` raises the concern. Unraised concerns never cite.
    pub raised: bool,
    /// Citable states per side, keyed by side.
    pub cite: BTreeMap<Factor, BTreeSet<Name>>,
    /// `h*_{u/ū}(s*)`.
    pub h: FactorSet,
}

impl ConcernStage {
    pub fn cite(&self, side: &Factor) -> &BTreeSet<Name> {
        static NONE: BTreeSet<Name> = BTreeSet::new();
        self.cite.get(side).unwrap_or(&NONE)
    }

    pub fn ambiguity(&self) -> Ambiguity {
        Ambiguity::of(&self.h)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stage {
    pub degree: usize,
    /// `F_{n-1}`.
    pub before: FactorSet,
    pub concerns: Vec<ConcernStage>,
    /// `F_n`.
    pub after: FactorSet,
}

/// Stage-by-stage record of the decision process for one undecided state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecisionTrace {
    pub query: Name,
    /// `X*`.
    pub facts: FactorSet,
    pub stages: Vec<Stage>,
}

impl DecisionTrace {
    /// `F_{s*}`.
    pub fn established(&self) -> &FactorSet {
        self.stages.last().map_or(&self.facts, |s| &s.after)
    }

    pub fn concern(&self, c: &Concern) -> Option<&ConcernStage> {
        self.stages
            .iter()
            .flat_map(|s| &s.concerns)
            .find(|cs| &cs.concern == c)
    }

    pub fn stage_of(&self, c: &Concern) -> Option<&Stage> {
        self.stages
            .iter()
            .find(|s| s.concerns.iter().any(|cs| &cs.concern == c))
    }

    pub fn h(&self, c: &Concern) -> FactorSet {
        self.concern(c).map(|cs| cs.h.clone()).unwrap_or_default()
    }

    pub fn cite(&self, side: &Factor) -> BTreeSet<Name> {
        side.concern()
            .and_then(|c| self.concern(&c))
            .map(|cs| cs.cite(side).clone())
            .unwrap_or_default()
    }

    /// `h*_{0/1}(s*)`.
    pub fn top(&self) -> FactorSet {
        self.h(&Concern::Top)
    }

    /// The verdict when the top-level decision is unambiguous.
    pub fn verdict(&self) -> Option<Outcome> {
        let top = self.top();
        match top.len() {
            1 => top.first().and_then(Factor::as_outcome),
            _ => None,
        }
    }

    pub fn ambiguity(&self, c: &Concern) -> Ambiguity {
        Ambiguity::of(&self.h(c))
    }

    /// Ambiguous on `c` while the top-level decision is unambiguous.
    pub fn negligible(&self, c: &Concern) -> bool {
        self.top().len() == 1 && self.ambiguity(c) == Ambiguity::Ambiguous
    }
}

/// `h*` with every decided state admitted as a precedent.
pub fn decide(model: &ClassifierModel, query: &str) -> Result<DecisionTrace, ReasoningError> {
    decide_with_filter(model, query, &|_, _| true)
}

/// `h*` restricted to precedents accepted by `filter` on each concern.
pub fn decide_with_filter(
    model: &ClassifierModel,
    query: &str,
    filter: &dyn Fn(&State, &Concern) -> bool,
) -> Result<DecisionTrace, ReasoningError> {
    let h = model.hierarchy();
    let target = query_state(model, query)?;
    let star = StateView::new(target);
    let precedents: Vec<StateView> = model.decided().map(StateView::new).collect();

    let mut established = target.facts.clone();
    let mut stages = Vec::with_capacity(h.top_degree());
    for n in 1..=h.top_degree() {
        let raised = h.concerns_raised(&established);
        let mut records = Vec::new();
        let mut gained = FactorSet::new();
        for c in h.concerns_of_degree(n) {
            let mut cite = BTreeMap::new();
            let mut hv = FactorSet::new();
            for side in c.sides() {
                let ids: BTreeSet<Name> = precedents
                    .iter()
                    .filter(|p| p.dec(c) == Some(&side))
                    .filter(|p| filter(p.state(), c))
                    .filter(|p| relevance_views(h, &established, &established, p, &star, c))
                    .map(|p| p.state().id.clone())
                    .collect();
                if !ids.is_empty() {
                    hv.insert(side.clone());
                }
                cite.insert(side, ids);
            }
            gained.extend(hv.iter().cloned());
            records.push(ConcernStage {
                concern: c.clone(),
                raised: raised.contains(c),
                cite,
                h: hv,
            });
        }
        let before = established.clone();
        established.extend(gained);
        stages.push(Stage {
            degree: n,
            before,
            concerns: records,
            after: established.clone(),
        });
    }
    Ok(DecisionTrace {
        query: target.id.clone(),
        facts: target.facts.clone(),
        stages,
    })
}

fn query_state<'m>(model: &'m ClassifierModel, query: &str) -> Result<&'m State, ReasoningError> {
    let s = model
        .state(query)
        .ok_or_else(|| ReasoningError::UnknownState(query.into()))?;
    if s.is_decided() || !s.rules.is_empty() {
        return Err(ReasoningError::AlreadyDecided(s.id.clone()));
    }
    Ok(s)
}

/// The two containment checks behind one citation decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CitationCheck {
    pub state: Name,
    /// The side this precedent decided, if it decided the concern.
    pub side: Option<Factor>,
    /// `Reas^t(s)`.
    pub reason: FactorSet,
    /// `F^t_{n-1}`.
    pub established_for: FactorSet,
    /// `F^t̄_{n-1}`.
    pub established_against: FactorSet,
    /// `Facts^t̄(s)`.
    pub precedent_against: FactorSet,
    pub filtered_out: bool,
}

impl CitationCheck {
    /// Members of the reason not yet established.
    pub fn missing_reason(&self) -> FactorSet {
        self.reason
            .difference(&self.established_for)
            .cloned()
            .collect()
    }

    /// Established opposing factors the precedent never faced.
    pub fn unmatched_against(&self) -> FactorSet {
        self.established_against
            .difference(&self.precedent_against)
            .cloned()
            .collect()
    }

    pub fn citable(&self) -> bool {
        self.side.is_some()
            && !self.filtered_out
            && self.missing_reason().is_empty()
            && self.unmatched_against().is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Explanation {
    pub concern: Concern,
    pub degree: usize,
    pub raised: bool,
    /// One entry per decided state; empty when the concern is not raised.
    pub checks: Vec<CitationCheck>,
}

/// Per-precedent citation checks for `concern` at its stage of the trace.
pub fn explain(
    model: &ClassifierModel,
    query: &str,
    concern: &Concern,
    filter: &dyn Fn(&State, &Concern) -> bool,
) -> Result<Explanation, ReasoningError> {
    let h = model.hierarchy();
    let trace = decide_with_filter(model, query, filter)?;
    let degree = h.concern_degree(concern);
    let before = trace
        .stage_of(concern)
        .map_or_else(|| trace.facts.clone(), |s| s.before.clone());
    let raised = trace.concern(concern).is_some_and(|cs| cs.raised);
    let mut checks = Vec::new();
    if raised {
        for s in model.decided() {
            let v = StateView::new(s);
            let side = v.dec(concern).cloned();
            let (reason, for_, against, prec) = match &side {
                Some(t) => {
                    let tb = t.opposite().expect("concern sides have opposites");
                    (
                        v.reas(t).clone(),
                        h.restrict(&before, t),
                        h.restrict(&before, &tb),
                        v.facts(h, &tb),
                    )
                }
                None => Default::default(),
            };
            checks.push(CitationCheck {
                state: s.id.clone(),
                side,
                reason,
                established_for: for_,
                established_against: against,
                precedent_against: prec,
                filtered_out: !filter(s, concern),
            });
        }
    }
    Ok(Explanation {
        concern: concern.clone(),
        degree,
        raised,
        checks,
    })
}

/// Every maximal subset of `established` holding exactly one side of each
/// concern it touches, with all base factors kept.
pub fn conflict_free_partitions(established: &FactorSet) -> Result<Vec<FactorSet>, ReasoningError> {
    if established.is_empty() {
        return Err(ReasoningError::EmptyEstablishedSet);
    }
    let base: FactorSet = established
        .iter()
        .filter(|f| f.is_base())
        .cloned()
        .collect();
    let mut sides: BTreeMap<Concern, Vec<Factor>> = BTreeMap::new();
    for f in established.iter().filter(|f| !f.is_base()) {
        sides
            .entry(f.concern().expect("non-base"))
            .or_default()
            .push(f.clone());
    }
    let options: Vec<Vec<Factor>> = sides.into_values().collect();
    let mut choice = vec![0usize; options.len()];
    let mut out = Vec::new();
    loop {
        let mut p = base.clone();
        p.extend(choice.iter().zip(&options).map(|(i, o)| o[*i].clone()));
        out.push(p);
        if !advance(&mut choice, &options) {
            return Ok(out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionSolutions {
    pub partition: FactorSet,
    pub solutions: Vec<Solution>,
}

/// `g*(s*)`, grouped by partition.
pub fn synthesize_solutions(
    model: &ClassifierModel,
    trace: &DecisionTrace,
) -> Result<Vec<PartitionSolutions>, ReasoningError> {
    let h = model.hierarchy();
    let top = trace.top();
    if top.len() != 1 {
        return Err(ReasoningError::AmbiguousVerdict(top.len()));
    }
    let mut out = Vec::new();
    for p in conflict_free_partitions(trace.established())? {
        let targets: Vec<Factor> = p.iter().filter(|f| !f.is_base()).cloned().collect();
        let mut options: Vec<Vec<Rule>> = Vec::with_capacity(targets.len());
        for t in &targets {
            let upper = h.restrict(&p, t);
            let lowers: BTreeSet<&FactorSet> = trace
                .cite(t)
                .iter()
                .filter_map(|id| model.state(id))
                .map(|s| StateView::new(s).reas(t))
                .filter(|l| l.is_subset(&upper))
                .collect();
            let antecedents = between(t, &lowers, &upper)?;
            options.push(
                antecedents
                    .into_iter()
                    .filter_map(|a| Rule::new(a, t.clone()).ok())
                    .collect(),
            );
        }
        let mut solutions = Vec::new();
        if options.iter().all(|o| !o.is_empty()) {
            let total = options
                .iter()
                .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
                .unwrap_or(usize::MAX);
            if total > COMBINATION_CAP {
                return Err(ReasoningError::SynthesisCap {
                    concern: Concern::Top,
                    candidates: total,
                });
            }
            let mut choice = vec![0usize; options.len()];
            loop {
                let rules = choice.iter().zip(&options).map(|(i, o)| o[*i].clone());
                if let Ok(sol) = validate_solution(h, &trace.facts, rules) {
                    solutions.push(sol);
                }
                if !advance(&mut choice, &options) {
                    break;
                }
            }
        }
        out.push(PartitionSolutions {
            partition: p,
            solutions,
        });
    }
    Ok(out)
}

/// All `A` with `L ⊆ A ⊆ upper` for some lower bound `L`, deduplicated.
fn between(
    t: &Factor,
    lowers: &BTreeSet<&FactorSet>,
    upper: &FactorSet,
) -> Result<BTreeSet<FactorSet>, ReasoningError> {
    let mut total = 0usize;
    for l in lowers {
        let free = upper.len() - l.len();
        total = total.saturating_add(1usize.checked_shl(free as u32).unwrap_or(usize::MAX));
    }
    if total > ANTECEDENT_CAP {
        return Err(ReasoningError::SynthesisCap {
            concern: t.concern().expect("non-base"),
            candidates: total,
        });
    }
    let mut out = BTreeSet::new();
    for l in lowers {
        let free: Vec<&Factor> = upper.difference(l).collect();
        for mask in 0u32..(1u32 << free.len()) {
            let mut a = (*l).clone();
            a.extend(
                free.iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, f)| (*f).clone()),
            );
            out.insert(a);
        }
    }
    Ok(out)
}
