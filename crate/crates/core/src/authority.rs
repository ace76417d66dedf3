//! Court hierarchy and time.
//!
//! Each decided state is stamped with a court and an integer time. A
//! precedent is overruled on a concern when a later state from a court able
//! to overrule it decided the concern the other way while the precedent was
//! relevant to it. A state is per incuriam on a concern when, at its
//! decision time, it departed from a clean, relevant, binding earlier
//! precedent that its court could not overrule. Statuses are per concern and
//! are computed by one forward sweep in time order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::classifier::{ClassifierModel, State};
use crate::factor::{Concern, Name};
use crate::reasoning::{
    conflict_relevant, decide_with_filter, DecisionTrace, ReasoningError, StateView,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthorityError {
    #[error("court order is cyclic at `{0}`")]
    CourtCycle(Name),
    #[error("state `{state}` names undeclared court `{court}`")]
    UnknownCourt { state: Name, court: Name },
    #[error("state `{0}` lacks the court or time needed for authority reasoning")]
    MissingMetadata(Name),
    #[error("states `{0}` and `{1}` share time {2}; decision times must be distinct")]
    SimultaneousDecisions(Name, Name, i64),
    #[error("unknown court option `{0}`")]
    UnknownOption(String),
    #[error("option `{key}` expects true or false, found `{value}`")]
    InvalidOption { key: String, value: String },
    #[error(transparent)]
    Reasoning(#[from] ReasoningError),
}

/// Courts, their strict order and the self-bound flags.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CourtSystem {
    courts: BTreeSet<Name>,
    /// Transitive closure of the declared `higher > lower` chains.
    higher: BTreeSet<(Name, Name)>,
    self_bound: BTreeSet<Name>,
    strict_incuriam: bool,
}

impl CourtSystem {
    /// `chains` are `k0 > k1 > ...` sequences. Courts are declared by
    /// appearing in a chain or in `self_bound`.
    pub fn new(
        chains: &[Vec<Name>],
        self_bound: &[Name],
        options: &[(String, String)],
    ) -> Result<CourtSystem, AuthorityError> {
        let mut courts: BTreeSet<Name> = chains.iter().flatten().cloned().collect();
        courts.extend(self_bound.iter().cloned());
        let mut higher: BTreeSet<(Name, Name)> = chains
            .iter()
            .flat_map(|c| c.windows(2).map(|w| (w[0].clone(), w[1].clone())))
            .collect();
        loop {
            let extra: Vec<(Name, Name)> = higher
                .iter()
                .flat_map(|(a, b)| {
                    higher
                        .iter()
                        .filter(move |(c, _)| c == b)
                        .map(move |(_, d)| (a.clone(), d.clone()))
                })
                .filter(|p| !higher.contains(p))
                .collect();
            if extra.is_empty() {
                break;
            }
            higher.extend(extra);
        }
        if let Some((k, _)) = higher.iter().find(|(a, b)| a == b) {
            return Err(AuthorityError::CourtCycle(k.clone()));
        }
        let mut strict_incuriam = true;
        for (key, value) in options {
            match key.as_str() {
                "strict-incuriam" => {
                    strict_incuriam = match value.as_str() {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(AuthorityError::InvalidOption {
                                key: key.clone(),
                                value: value.clone(),
                            })
                        }
                    }
                }
                _ => return Err(AuthorityError::UnknownOption(key.clone())),
            }
        }
        Ok(CourtSystem {
            courts,
            higher,
            self_bound: self_bound.iter().cloned().collect(),
            strict_incuriam,
        })
    }

    pub fn courts(&self) -> &BTreeSet<Name> {
        &self.courts
    }

    pub fn contains(&self, k: &str) -> bool {
        self.courts.contains(k)
    }

    pub fn is_self_bound(&self, k: &str) -> bool {
        self.self_bound.contains(k)
    }

    pub fn strict_incuriam(&self) -> bool {
        self.strict_incuriam
    }

    pub fn higher(&self, k: &str, k2: &str) -> bool {
        self.higher.contains(&(Name::from(k), Name::from(k2)))
    }

    /// Decisions of `k` bind `k2`.
    pub fn binds(&self, k: &str, k2: &str) -> bool {
        self.higher(k, k2) || (k == k2 && self.is_self_bound(k))
    }

    pub fn can_overrule(&self, k: &str, k2: &str) -> bool {
        self.higher(k, k2)
    }

    /// Generating order pairs: the covering relation of `higher`, sorted.
    pub fn covering(&self) -> Vec<(Name, Name)> {
        self.higher
            .iter()
            .filter(|(a, b)| {
                !self
                    .courts
                    .iter()
                    .any(|m| self.higher(a, m) && self.higher(m, b))
            })
            .cloned()
            .collect()
    }

    pub fn self_bound(&self) -> &BTreeSet<Name> {
        &self.self_bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrecedentStatus {
    Clean,
    Overruled { by: Name },
    PerIncuriam { ignored: Name },
}

impl PrecedentStatus {
    pub fn is_clean(&self) -> bool {
        matches!(self, PrecedentStatus::Clean)
    }
}

impl fmt::Display for PrecedentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecedentStatus::Clean => f.write_str("clean"),
            PrecedentStatus::Overruled { by } => write!(f, "overruled(by {by})"),
            PrecedentStatus::PerIncuriam { ignored } => {
                write!(f, "per-incuriam(ignored {ignored})")
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Stamp {
    court: Name,
    time: i64,
}

fn stamp(s: &State) -> Result<Stamp, AuthorityError> {
    match (&s.court, s.time) {
        (Some(court), Some(time)) => Ok(Stamp {
            court: court.clone(),
            time,
        }),
        _ => Err(AuthorityError::MissingMetadata(s.id.clone())),
    }
}

/// Statuses of every decided state on every concern it decided, as of a
/// point in time.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StatusTable {
    /// Rows in time order.
    rows: Vec<(Name, Concern, PrecedentStatus)>,
}

impl StatusTable {
    /// Sweeps decided states in time order. Overrulings are counted only
    /// when strictly before `as_of`.
    pub fn compute(
        model: &ClassifierModel,
        courts: &CourtSystem,
        as_of: Option<i64>,
    ) -> Result<StatusTable, AuthorityError> {
        let h = model.hierarchy();
        let mut timeline: Vec<(&State, Stamp)> = Vec::new();
        for s in model.decided() {
            let st = stamp(s)?;
            if !courts.contains(&st.court) {
                return Err(AuthorityError::UnknownCourt {
                    state: s.id.clone(),
                    court: st.court,
                });
            }
            timeline.push((s, st));
        }
        timeline.sort_by_key(|(_, st)| st.time);
        for w in timeline.windows(2) {
            if w[0].1.time == w[1].1.time {
                return Err(AuthorityError::SimultaneousDecisions(
                    w[0].0.id.clone(),
                    w[1].0.id.clone(),
                    w[0].1.time,
                ));
            }
        }

        // Earliest overruler per (state, concern), regardless of as_of.
        let mut overruler: BTreeMap<(usize, Concern), usize> = BTreeMap::new();
        for (i, (s, st)) in timeline.iter().enumerate() {
            let view = StateView::new(s);
            for c in h.concerns() {
                let Some(t) = view.dec(c) else { continue };
                let by = timeline
                    .iter()
                    .enumerate()
                    .skip(i + 1)
                    .find(|(_, (s2, st2))| {
                        courts.can_overrule(&st2.court, &st.court)
                            && StateView::new(s2).dec(c) == t.opposite().as_ref()
                            && conflict_relevant(h, s, s2, c).unwrap_or(false)
                    });
                if let Some((j, _)) = by {
                    overruler.insert((i, c.clone()), j);
                }
            }
        }
        let overruled_before = |i: usize, c: &Concern, time: Option<i64>| -> Option<usize> {
            overruler
                .get(&(i, c.clone()))
                .copied()
                .filter(|&j| time.is_none_or(|t| timeline[j].1.time < t))
        };

        let mut incuriam: BTreeMap<(usize, Concern), usize> = BTreeMap::new();
        for (i, (s, st)) in timeline.iter().enumerate() {
            let view = StateView::new(s);
            for c in h.concerns() {
                let Some(t) = view.dec(c) else { continue };
                let ignored = (0..i).find(|&j| {
                    let (s0, st0) = &timeline[j];
                    courts.binds(&st0.court, &st.court)
                        && !courts.can_overrule(&st.court, &st0.court)
                        && StateView::new(s0).dec(c) == t.opposite().as_ref()
                        && !incuriam.contains_key(&(j, c.clone()))
                        && overruled_before(j, c, Some(st.time)).is_none()
                        && conflict_relevant(h, s0, s, c).unwrap_or(false)
                });
                if let Some(j) = ignored {
                    incuriam.insert((i, c.clone()), j);
                }
            }
        }

        let mut rows = Vec::new();
        for (i, (s, _)) in timeline.iter().enumerate() {
            let view = StateView::new(s);
            for c in h.concerns() {
                if view.dec(c).is_none() {
                    continue;
                }
                let status = if let Some(&j) = incuriam.get(&(i, c.clone())) {
                    PrecedentStatus::PerIncuriam {
                        ignored: timeline[j].0.id.clone(),
                    }
                } else if let Some(j) = overruled_before(i, c, as_of) {
                    PrecedentStatus::Overruled {
                        by: timeline[j].0.id.clone(),
                    }
                } else {
                    PrecedentStatus::Clean
                };
                rows.push((s.id.clone(), c.clone(), status));
            }
        }
        Ok(StatusTable { rows })
    }

    /// `(state, concern, status)` in decision-time order.
    pub fn rows(&self) -> &[(Name, Concern, PrecedentStatus)] {
        &self.rows
    }

    /// Status of `state` on `concern`; clean when it did not decide it.
    pub fn status(&self, state: &str, concern: &Concern) -> PrecedentStatus {
        self.rows
            .iter()
            .find(|(s, c, _)| &**s == state && c == concern)
            .map_or(PrecedentStatus::Clean, |(_, _, st)| st.clone())
    }
}

/// Acceptance test for binding precedents without exceptions, relative to
/// one query state.
#[derive(Clone, Debug)]
pub struct BindingFilter<'a> {
    courts: &'a CourtSystem,
    court: Name,
    time: Option<i64>,
    statuses: StatusTable,
}

impl<'a> BindingFilter<'a> {
    pub fn new(
        model: &ClassifierModel,
        courts: &'a CourtSystem,
        query: &str,
    ) -> Result<BindingFilter<'a>, AuthorityError> {
        let q = model
            .state(query)
            .ok_or_else(|| ReasoningError::UnknownState(query.into()))?;
        let court = q
            .court
            .clone()
            .ok_or_else(|| AuthorityError::MissingMetadata(q.id.clone()))?;
        if !courts.contains(&court) {
            return Err(AuthorityError::UnknownCourt {
                state: q.id.clone(),
                court,
            });
        }
        let statuses = StatusTable::compute(model, courts, q.time)?;
        Ok(BindingFilter {
            courts,
            court,
            time: q.time,
            statuses,
        })
    }

    pub fn statuses(&self) -> &StatusTable {
        &self.statuses
    }

    pub fn accepts(&self, s: &State, concern: &Concern) -> bool {
        let (Some(court), Some(time)) = (&s.court, s.time) else {
            return false;
        };
        if !self.courts.binds(court, &self.court) {
            return false;
        }
        if self.time.is_some_and(|t| time >= t) {
            return false;
        }
        match self.statuses.status(&s.id, concern) {
            PrecedentStatus::Clean => true,
            PrecedentStatus::Overruled { .. } => false,
            PrecedentStatus::PerIncuriam { .. } => {
                !self.courts.strict_incuriam() && self.courts.higher(court, &self.court)
            }
        }
    }
}

/// The decision process restricted to binding precedents without
/// exceptions, with the status table it used.
pub fn decide_with_authority(
    model: &ClassifierModel,
    courts: &CourtSystem,
    query: &str,
) -> Result<(DecisionTrace, StatusTable), AuthorityError> {
    let filter = BindingFilter::new(model, courts, query)?;
    let trace = decide_with_filter(model, query, &|s, c| filter.accepts(s, c))?;
    Ok((trace, filter.statuses))
}

#[cfg(test)]
pub(crate) mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::classifier::tests::rules;
    use crate::factor::Outcome;
    use crate::hierarchy::{tests::raw_ex, Hierarchy};
    use crate::rules::tests::{f, set};

    pub(crate) fn courts() -> CourtSystem {
        CourtSystem::new(
            &[vec!["k0".into(), "k1".into(), "k2".into()]],
            &["k2".into()],
            &[],
        )
        .unwrap()
    }

    pub(crate) fn model() -> ClassifierModel {
        let h = Arc::new(Hierarchy::new(raw_ex()).unwrap());
        let s8 = State::decided(
            "s8",
            set(&["f1", "f3"]),
            rules(&[(&["f1"], "p"), (&["p"], "q"), (&["q"], "1")]),
            Outcome::Plaintiff,
        )
        .at("k1", 1);
        let s9 = State::decided(
            "s9",
            set(&["f1", "f2", "f3", "f4", "f5"]),
            rules(&[
                (&["f3"], "p'"),
                (&["f5"], "r'"),
                (&["p'"], "q'"),
                (&["r'"], "0"),
            ]),
            Outcome::Defendant,
        )
        .at("k0", 2);
        let s10 = State::decided(
            "s10",
            set(&["f3", "f4", "f5"]),
            rules(&[
                (&["f3"], "p'"),
                (&["p'"], "q'"),
                (&["f4"], "r"),
                (&["r"], "1"),
            ]),
            Outcome::Plaintiff,
        )
        .at("k2", 3);
        let mut star = State::undecided("sstar", set(&["f1", "f2", "f3", "f4", "f5"]));
        star.court = Some("k2".into());
        ClassifierModel::new(h, vec![s8, s9, s10, star]).unwrap()
    }

    #[test]
    fn court_relations() {
        let k = courts();
        assert!(k.higher("k0", "k2"));
        assert!(k.binds("k2", "k2"));
        assert!(!k.binds("k1", "k1"));
        assert!(!k.can_overrule("k2", "k2"));
        assert_eq!(k.covering().len(), 2);
        let cyc = CourtSystem::new(&[vec!["a".into(), "b".into(), "a".into()]], &[], &[]);
        assert!(matches!(cyc, Err(AuthorityError::CourtCycle(_))));
    }

    #[test]
    fn statuses_of_the_court_example() {
        let m = model();
        let t = StatusTable::compute(&m, &courts(), None).unwrap();
        let p = Concern::Intermediate("p".into());
        let r = Concern::Intermediate("r".into());
        assert_eq!(
            t.status("s8", &p),
            PrecedentStatus::Overruled { by: "s9".into() }
        );
        assert_eq!(
            t.status("s10", &r),
            PrecedentStatus::PerIncuriam {
                ignored: "s9".into()
            }
        );
        assert!(t.status("s10", &p).is_clean());
        for c in m.hierarchy().concerns() {
            assert!(t.status("s9", c).is_clean());
        }
    }

    #[test]
    fn filtered_decision() {
        let m = model();
        let (trace, _) = decide_with_authority(&m, &courts(), "sstar").unwrap();
        assert_eq!(trace.verdict(), Some(Outcome::Defendant));
        assert_eq!(trace.h(&Concern::Intermediate("p".into())), set(&["p'"]));
        assert_eq!(trace.h(&Concern::Intermediate("q".into())), set(&["q'"]));
        assert_eq!(trace.h(&Concern::Intermediate("r".into())), set(&["r'"]));
        assert_eq!(trace.cite(&f("0")).len(), 1);
    }

    #[test]
    fn query_without_court_is_rejected() {
        let m = model();
        let mut states = m.states().to_vec();
        states[3].court = None;
        let m = ClassifierModel::new(m.hierarchy_arc().clone(), states).unwrap();
        assert_eq!(
            decide_with_authority(&m, &courts(), "sstar").unwrap_err(),
            AuthorityError::MissingMetadata("sstar".into())
        );
    }
}
