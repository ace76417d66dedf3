//! Rule-based classifier models.
//!
//! A state pairs a base situation with a solution; the valuation maps each
//! listed state to an outcome or leaves it undecided. Constraint C1 requires
//! undecided states to carry no rules, C2 requires a decided state's outcome
//! to be the conclusion of its top-level rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::casebase::{Case, CaseBase, CaseError, Decision, Opinion};
use crate::factor::{Concern, Factor, FactorSet, Name, Outcome};
use crate::hierarchy::Hierarchy;
use crate::rules::{validate_solution, Rule, Solution, SolutionError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("state `{0}` is undecided but carries rules")]
    C1Violation(Name),
    #[error("state `{state}` is valued {declared} but its solution concludes {concluded}")]
    C2Violation {
        state: Name,
        declared: Outcome,
        concluded: String,
    },
    #[error("state `{0}` is declared more than once")]
    DuplicateStateId(Name),
    #[error("state `{state}` mentions undeclared factor `{factor}`")]
    UndeclaredFactor { state: Name, factor: Factor },
    #[error("state `{state}`: {source}")]
    InvalidSolution {
        state: Name,
        #[source]
        source: SolutionError,
    },
    #[error("state `{0}` is undecided")]
    Undecided(Name),
    #[error("no state named `{0}`")]
    UnknownState(Name),
    #[error(transparent)]
    Case(#[from] CaseError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Decided(Outcome),
    Undecided,
}

impl Valuation {
    pub fn outcome(self) -> Option<Outcome> {
        match self {
            Valuation::Decided(o) => Some(o),
            Valuation::Undecided => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Decided(o) => write!(f, "{o}"),
            Valuation::Undecided => f.write_str("?"),
        }
    }
}

/// A state `(X, sol)` together with its valuation and optional court/time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub id: Name,
    pub facts: FactorSet,
    pub rules: BTreeSet<Rule>,
    pub valuation: Valuation,
    pub court: Option<Name>,
    pub time: Option<i64>,
}

impl State {
    pub fn decided(id: &str, facts: FactorSet, rules: BTreeSet<Rule>, outcome: Outcome) -> State {
        State {
            id: id.into(),
            facts,
            rules,
            valuation: Valuation::Decided(outcome),
            court: None,
            time: None,
        }
    }

    pub fn undecided(id: &str, facts: FactorSet) -> State {
        State {
            id: id.into(),
            facts,
            rules: BTreeSet::new(),
            valuation: Valuation::Undecided,
            court: None,
            time: None,
        }
    }

    pub fn at(mut self, court: &str, time: i64) -> State {
        self.court = Some(court.into());
        self.time = Some(time);
        self
    }

    pub fn is_decided(&self) -> bool {
        self.valuation.outcome().is_some()
    }

    pub fn rule_for(&self, c: &Concern) -> Option<&Rule> {
        self.rules.iter().find(|r| &r.related_concern() == c)
    }
}

/// A validated model over one hierarchy. States keep their declaration order.
#[derive(Clone, Debug)]
pub struct ClassifierModel {
    hierarchy: Arc<Hierarchy>,
    states: Vec<State>,
    solutions: Vec<Solution>,
    index: BTreeMap<Name, usize>,
}

impl ClassifierModel {
    pub fn new(
        hierarchy: Arc<Hierarchy>,
        states: Vec<State>,
    ) -> Result<ClassifierModel, ModelError> {
        let mut index = BTreeMap::new();
        let mut solutions = Vec::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateStateId(s.id.clone()));
            }
            let mentioned = s
                .facts
                .iter()
                .chain(s.rules.iter().flat_map(|r| r.antecedent().iter()))
                .chain(s.rules.iter().map(|r| r.conclusion()));
            for f in mentioned {
                if !hierarchy.declares(f) {
                    return Err(ModelError::UndeclaredFactor {
                        state: s.id.clone(),
                        factor: f.clone(),
                    });
                }
            }
            match s.valuation {
                Valuation::Undecided if !s.rules.is_empty() => {
                    return Err(ModelError::C1Violation(s.id.clone()));
                }
                Valuation::Undecided => {
                    if let Some(bad) = s.facts.iter().find(|f| !f.is_base()) {
                        return Err(ModelError::InvalidSolution {
                            state: s.id.clone(),
                            source: SolutionError::NotBaseFact(bad.clone()),
                        });
                    }
                    solutions.push(Solution::empty(s.facts.clone()));
                }
                Valuation::Decided(o) => {
                    let sol = validate_solution(&hierarchy, &s.facts, s.rules.iter().cloned())
                        .map_err(|source| ModelError::InvalidSolution {
                            state: s.id.clone(),
                            source,
                        })?;
                    let concluded = sol.rule_for(&Concern::Top).map(|r| r.conclusion().clone());
                    if concluded != Some(Factor::Decision(o)) {
                        return Err(ModelError::C2Violation {
                            state: s.id.clone(),
                            declared: o,
                            concluded: concluded.map_or("nothing".into(), |f| f.to_string()),
                        });
                    }
                    solutions.push(sol);
                }
            }
        }
        Ok(ClassifierModel {
            hierarchy,
            states,
            solutions,
            index,
        })
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn hierarchy_arc(&self) -> &Arc<Hierarchy> {
        &self.hierarchy
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn decided(&self) -> impl Iterator<Item = &State> {
        self.states.iter().filter(|s| s.is_decided())
    }

    pub fn state(&self, id: &str) -> Option<&State> {
        self.index.get(id).map(|&i| &self.states[i])
    }

    pub fn solution(&self, id: &str) -> Option<&Solution> {
        self.index.get(id).map(|&i| &self.solutions[i])
    }

    /// The case obtained from a decided state.
    pub fn case_of(&self, id: &str) -> Result<Case, ModelError> {
        let s = self
            .state(id)
            .ok_or_else(|| ModelError::UnknownState(id.into()))?;
        case_from_state(&self.hierarchy, s)
    }

    /// `CB_C`: the cases of all decided states, in declaration order.
    pub fn casebase(&self) -> Result<CaseBase, ModelError> {
        let mut cb = CaseBase::new();
        for s in self.decided() {
            cb.push(&self.hierarchy, case_from_state(&self.hierarchy, s)?)?;
        }
        Ok(cb)
    }
}

/// Staged construction: `Y_0 = X`, and stage `n` resolves each degree-`n`
/// concern that the solution has a rule for, on the facts `Y_{n-1}`.
pub fn case_from_state(h: &Hierarchy, s: &State) -> Result<Case, ModelError> {
    let outcome = s
        .valuation
        .outcome()
        .ok_or_else(|| ModelError::Undecided(s.id.clone()))?;
    let mut y = s.facts.clone();
    let mut stages = Vec::with_capacity(h.top_degree());
    for n in 1..=h.top_degree() {
        let stage: BTreeSet<Decision> = s
            .rules
            .iter()
            .filter(|r| h.concern_degree(&r.related_concern()) == n)
            .filter_map(|r| Decision::new(y.clone(), r.clone()))
            .collect();
        y.extend(stage.iter().map(|d| d.outcome().clone()));
        stages.push(stage);
    }
    Ok(Case::new(
        h,
        s.id.clone(),
        s.facts.clone(),
        Opinion::from_stages(stages),
        outcome,
    )?)
}
