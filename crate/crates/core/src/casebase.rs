//! Decisions, opinions, cases and the priority orderings they induce.
//!
//! A decision `(Y, r, t)` on concern `u/ū` establishes that any reason set
//! `U` for `t̄` found in `Y` is weaker than any reason set `V` for `t`
//! containing the antecedent of `r`. These orderings are kept as generating
//! schemes and queried with two subset checks; they are never materialized.
//! A case base is inconsistent on a concern when two decisions clash, i.e.
//! each one's reason is available in the other's facts on the winning side.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::factor::{Concern, Factor, FactorSet, Name, Outcome};
use crate::hierarchy::Hierarchy;
use crate::rules::Rule;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaseError {
    #[error("no resolution offered for raised concern {0}")]
    ChooserIncomplete(Concern),
    #[error("rule `{rule}` cannot resolve concern {concern} here")]
    InadmissibleChoice { concern: Concern, rule: String },
    #[error("opinion never reaches the top-level issue, so it supports no outcome")]
    EmptyOpinion,
    #[error(
        "case outcome {declared} differs from the outcome {supported} supported by its opinion"
    )]
    OutcomeMismatch {
        declared: Outcome,
        supported: Outcome,
    },
    #[error("case `{0}` was built over a different hierarchy")]
    MixedHierarchy(Name),
}

/// A resolution `(Y, r, t)` with `t = Conclusion(r)` and `r` applicable to `Y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decision {
    facts: FactorSet,
    rule: Rule,
}

impl Decision {
    pub fn new(facts: FactorSet, rule: Rule) -> Option<Decision> {
        rule.is_applicable(&facts)
            .then_some(Decision { facts, rule })
    }

    pub fn facts(&self) -> &FactorSet {
        &self.facts
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn outcome(&self) -> &Factor {
        self.rule.conclusion()
    }

    pub fn concern(&self) -> Concern {
        self.rule.related_concern()
    }

    /// The generating scheme of `<_d` on this decision's concern.
    pub fn priority_scheme(&self, h: &Hierarchy, provenance: DecisionRef) -> PriorityScheme {
        let side = self.outcome().clone();
        let against = side.opposite().expect("outcomes have opposites");
        PriorityScheme {
            concern: self.concern(),
            weaker_pool: h.restrict(&self.facts, &against),
            reason: self.rule.antecedent().clone(),
            stronger_side: side,
            provenance,
        }
    }
}

/// `(Res_1, ..., Res_m)`, one resolution set per degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Opinion {
    stages: Vec<BTreeSet<Decision>>,
}

impl Opinion {
    pub fn from_stages(stages: Vec<BTreeSet<Decision>>) -> Opinion {
        Opinion { stages }
    }

    /// `Res_n` for `n` in `1..=m`.
    pub fn stages(&self) -> &[BTreeSet<Decision>] {
        &self.stages
    }

    /// Union of all resolution sets.
    pub fn merge(&self) -> BTreeSet<Decision> {
        self.stages.iter().flatten().cloned().collect()
    }

    pub fn decision_for(&self, c: &Concern) -> Option<&Decision> {
        self.stages.iter().flatten().find(|d| &d.concern() == c)
    }

    /// The outcome of the unique top-level decision.
    pub fn outcome(&self) -> Option<Outcome> {
        self.decision_for(&Concern::Top)
            .and_then(|d| d.outcome().as_outcome())
    }

    /// `Y_n` for each stage: the situation each stage's decisions were taken
    /// on, followed by the final accumulated set.
    pub fn stage_facts(&self, base: &FactorSet) -> Vec<FactorSet> {
        let mut out = vec![base.clone()];
        let mut acc = base.clone();
        for stage in &self.stages {
            acc.extend(stage.iter().map(|d| d.outcome().clone()));
            out.push(acc.clone());
        }
        out
    }
}

/// Supplies the rule used to resolve each raised concern while an opinion
/// is built.
pub trait Chooser {
    fn choose(&mut self, h: &Hierarchy, concern: &Concern, facts: &FactorSet) -> Option<Rule>;
}

impl<F> Chooser for F
where
    F: FnMut(&Hierarchy, &Concern, &FactorSet) -> Option<Rule>,
{
    fn choose(&mut self, h: &Hierarchy, concern: &Concern, facts: &FactorSet) -> Option<Rule> {
        self(h, concern, facts)
    }
}

/// Replays a fixed rule set, one rule per concern.
pub struct Replay<'a>(pub &'a BTreeSet<Rule>);

impl Chooser for Replay<'_> {
    fn choose(&mut self, _: &Hierarchy, concern: &Concern, _: &FactorSet) -> Option<Rule> {
        self.0
            .iter()
            .find(|r| &r.related_concern() == concern)
            .cloned()
    }
}

/// Runs the staged opinion procedure from base situation `facts`.
pub fn build_opinion(
    h: &Hierarchy,
    facts: &FactorSet,
    chooser: &mut dyn Chooser,
) -> Result<Opinion, CaseError> {
    let mut known = facts.clone();
    let mut stages = Vec::with_capacity(h.top_degree());
    for n in 1..=h.top_degree() {
        let mut stage = BTreeSet::new();
        for c in h.concerns_raised_of_degree(&known, n) {
            let rule = chooser
                .choose(h, &c, &known)
                .ok_or_else(|| CaseError::ChooserIncomplete(c.clone()))?;
            if rule.related_concern() != c || !rule.is_admissible(h) {
                return Err(CaseError::InadmissibleChoice {
                    concern: c,
                    rule: rule.to_string(),
                });
            }
            let rule_text = rule.to_string();
            let d = Decision::new(known.clone(), rule).ok_or(CaseError::InadmissibleChoice {
                concern: c,
                rule: rule_text,
            })?;
            stage.insert(d);
        }
        known.extend(stage.iter().map(|d| d.outcome().clone()));
        stages.push(stage);
    }
    Ok(Opinion { stages })
}

/// `c = (X, op, o)` plus the bookkeeping used by court-aware reasoning.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    id: Name,
    facts: FactorSet,
    opinion: Opinion,
    outcome: Outcome,
    hierarchy: u64,
}

impl Case {
    /// Checks that `outcome` is the one supported by the opinion.
    pub fn new(
        h: &Hierarchy,
        id: Name,
        facts: FactorSet,
        opinion: Opinion,
        outcome: Outcome,
    ) -> Result<Case, CaseError> {
        let supported = opinion.outcome().ok_or(CaseError::EmptyOpinion)?;
        if supported != outcome {
            return Err(CaseError::OutcomeMismatch {
                declared: outcome,
                supported,
            });
        }
        Ok(Case {
            id,
            facts,
            opinion,
            outcome,
            hierarchy: h.fingerprint(),
        })
    }

    pub fn id(&self) -> &Name {
        &self.id
    }

    pub fn facts(&self) -> &FactorSet {
        &self.facts
    }

    pub fn opinion(&self) -> &Opinion {
        &self.opinion
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn priority_schemes(&self, h: &Hierarchy, concern: &Concern) -> Vec<PriorityScheme> {
        let mut out = Vec::new();
        for (i, stage) in self.opinion.stages.iter().enumerate() {
            for d in stage.iter().filter(|d| &d.concern() == concern) {
                out.push(d.priority_scheme(
                    h,
                    DecisionRef {
                        case: self.id.clone(),
                        stage: i + 1,
                        outcome: d.outcome().clone(),
                    },
                ));
            }
        }
        out
    }
}

/// Points at a decision inside a case.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecisionRef {
    pub case: Name,
    /// Opinion stage (the concern's degree).
    pub stage: usize,
    pub outcome: Factor,
}

impl fmt::Display for DecisionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{} ({})", self.case, self.stage, self.outcome)
    }
}

/// Generating scheme of a priority ordering: `U < V` holds for every
/// `U ⊆ weaker_pool` and every `V` with `reason ⊆ V ⊆ Facts^stronger_side`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PriorityScheme {
    pub concern: Concern,
    pub stronger_side: Factor,
    /// `Y ∩ Facts^t̄` of the originating decision.
    pub weaker_pool: FactorSet,
    /// The antecedent of the deciding rule.
    pub reason: FactorSet,
    pub provenance: DecisionRef,
}

impl PriorityScheme {
    pub fn holds(&self, h: &Hierarchy, weaker: &FactorSet, stronger: &FactorSet) -> bool {
        weaker.is_subset(&self.weaker_pool)
            && self.reason.is_subset(stronger)
            && stronger.is_subset(h.facts_for(&self.stronger_side))
    }
}

/// Two reason sets ordered both ways on one concern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub concern: Concern,
    /// Reasons for the negative side (`p'`, or `0`).
    pub against: FactorSet,
    /// Reasons for the positive side (`p`, or `1`).
    pub favor: FactorSet,
    /// The decision for the positive side.
    pub positive: DecisionRef,
    /// The decision for the negative side.
    pub negative: DecisionRef,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub witnesses: Vec<Witness>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn concerns(&self) -> BTreeSet<Concern> {
        self.witnesses.iter().map(|w| w.concern.clone()).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct CaseBase {
    cases: Vec<Case>,
}

impl CaseBase {
    pub fn new() -> CaseBase {
        CaseBase::default()
    }

    pub fn from_cases(
        h: &Hierarchy,
        cases: impl IntoIterator<Item = Case>,
    ) -> Result<CaseBase, CaseError> {
        let mut cb = CaseBase::new();
        for c in cases {
            cb.push(h, c)?;
        }
        Ok(cb)
    }

    pub fn push(&mut self, h: &Hierarchy, case: Case) -> Result<(), CaseError> {
        if case.hierarchy != h.fingerprint() {
            return Err(CaseError::MixedHierarchy(case.id.clone()));
        }
        self.cases.push(case);
        Ok(())
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn priority_schemes(&self, h: &Hierarchy, concern: &Concern) -> Vec<PriorityScheme> {
        self.cases
            .iter()
            .flat_map(|c| c.priority_schemes(h, concern))
            .collect()
    }

    /// `weaker <_CB stronger` on `concern`.
    pub fn prefers(
        &self,
        h: &Hierarchy,
        concern: &Concern,
        weaker: &FactorSet,
        stronger: &FactorSet,
    ) -> bool {
        self.priority_schemes(h, concern)
            .iter()
            .any(|s| s.holds(h, weaker, stronger))
    }

    /// Pairwise clash scan over opposite-side decisions. With `concern` set,
    /// only that concern is examined.
    pub fn consistency(&self, h: &Hierarchy, concern: Option<&Concern>) -> ConsistencyReport {
        let concerns: Vec<Concern> = match concern {
            Some(c) => vec![c.clone()],
            None => h.concerns().cloned().collect(),
        };
        let mut witnesses = Vec::new();
        for c in &concerns {
            let schemes = self.priority_schemes(h, c);
            let positive = c.positive();
            let (pos, neg): (Vec<_>, Vec<_>) =
                schemes.iter().partition(|s| s.stronger_side == positive);
            for a in &pos {
                for b in &neg {
                    // a: U <_a V with U ⊆ pool_a; b: V <_b U with V ⊆ pool_b.
                    if b.reason.is_subset(&a.weaker_pool) && a.reason.is_subset(&b.weaker_pool) {
                        witnesses.push(Witness {
                            concern: c.clone(),
                            against: a.weaker_pool.clone(),
                            favor: b.weaker_pool.clone(),
                            positive: a.provenance.clone(),
                            negative: b.provenance.clone(),
                        });
                    }
                }
            }
        }
        ConsistencyReport { witnesses }
    }

    pub fn is_consistent(&self, h: &Hierarchy) -> bool {
        self.consistency(h, None).is_consistent()
    }
}
