//! Single-issue factor hierarchies.
//!
//! A hierarchy is a set of links `t -> u` saying that factor `t` directly
//! favors `u`. Validation enforces that a factor and its opposite never favor
//! the same target, that no factor favors both sides of a concern, and that
//! the link structure is acyclic once each concern's two sides are
//! identified. The favoring sets, degrees and the concern index are computed
//! once at construction; a [`Hierarchy`] is immutable afterwards.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::factor::{Concern, Factor, FactorSet, Name};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("factor links form a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("conflicting links `{first}` and `{second}`: a factor and its opposite cannot favor the same factor, nor can a factor favor both sides of a concern")]
    ConflictingLinks { first: String, second: String },
    #[error("link references undeclared factor `{0}`")]
    DanglingFactor(String),
    #[error("concern {0} has no favoring factors on either side, so its degree is undefined")]
    OrphanConcern(Concern),
    #[error("invalid link `{source_factor} -> {target}`: links run from base or intermediate factors to intermediate factors or outcomes")]
    InvalidLink {
        source_factor: String,
        target: String,
    },
    #[error("name `{0}` is declared more than once")]
    DuplicateName(String),
    #[error("`{0}` is not a valid factor name")]
    InvalidName(String),
    #[error("concern {0} has degree {1}, not below degree(0/1) = {2}, so no opinion reaches it")]
    BeyondTopIssue(Concern, usize, usize),
    #[error("`{0}` is a base factor; only intermediate factors and outcomes are favored")]
    NotAFavoredTarget(Factor),
}

/// Undigested hierarchy declaration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawHierarchy {
    pub base: Vec<Name>,
    /// Positive names; each declares the pair `p` / `p'`.
    pub intermediates: Vec<Name>,
    pub links: Vec<(Factor, Factor)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Node {
    Base(Name),
    Concern(Concern),
}

impl Node {
    fn of(f: &Factor) -> Node {
        match f.concern() {
            Some(c) => Node::Concern(c),
            None => Node::Base(match f {
                Factor::Base(n) => n.clone(),
                _ => unreachable!(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    base: BTreeSet<Name>,
    intermediates: BTreeSet<Name>,
    links: BTreeSet<(Factor, Factor)>,
    favoring: BTreeMap<Factor, FactorSet>,
    concern_degree: BTreeMap<Concern, usize>,
    raises: BTreeMap<Factor, BTreeSet<Concern>>,
    top_degree: usize,
    fingerprint: u64,
}

impl Hierarchy {
    /// Validates a raw declaration and precomputes the derived indices.
    pub fn new(raw: RawHierarchy) -> Result<Hierarchy, HierarchyError> {
        let mut base = BTreeSet::new();
        let mut intermediates = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for n in raw.base.iter().chain(raw.intermediates.iter()) {
            if !valid_name(n) {
                return Err(HierarchyError::InvalidName(n.to_string()));
            }
            if !seen.insert(n.clone()) {
                return Err(HierarchyError::DuplicateName(n.to_string()));
            }
        }
        base.extend(raw.base.iter().cloned());
        intermediates.extend(raw.intermediates.iter().cloned());

        let declared = |f: &Factor| match f {
            Factor::Base(n) => base.contains(n),
            Factor::Intermediate { name, .. } => intermediates.contains(name),
            Factor::Decision(_) => true,
        };

        let mut links = BTreeSet::new();
        for (s, t) in &raw.links {
            for f in [s, t] {
                if !declared(f) {
                    return Err(HierarchyError::DanglingFactor(f.to_string()));
                }
            }
            if s.is_decision() || t.is_base() {
                return Err(HierarchyError::InvalidLink {
                    source_factor: s.to_string(),
                    target: t.to_string(),
                });
            }
            links.insert((s.clone(), t.clone()));
        }

        for (s, t) in &links {
            if let Some(so) = s.opposite() {
                if links.contains(&(so.clone(), t.clone())) {
                    return Err(conflict(s, t, &so, t));
                }
            }
            let to = t.opposite().expect("targets have opposites");
            if links.contains(&(s.clone(), to.clone())) {
                return Err(conflict(s, t, s, &to));
            }
        }

        // Favoring sets: t favors u iff t -> u or t' -> u'.
        let mut favoring: BTreeMap<Factor, FactorSet> = BTreeMap::new();
        for n in &intermediates {
            favoring.insert(Factor::positive(n), FactorSet::new());
            favoring.insert(Factor::negative(n), FactorSet::new());
        }
        for c in Concern::Top.sides() {
            favoring.insert(c, FactorSet::new());
        }
        for (s, t) in &links {
            favoring.get_mut(t).unwrap().insert(s.clone());
            if let Some(so) = s.opposite() {
                favoring.get_mut(&t.opposite().unwrap()).unwrap().insert(so);
            }
        }

        let mut incoming: BTreeMap<Concern, BTreeSet<Node>> = BTreeMap::new();
        for (s, t) in &links {
            incoming
                .entry(t.concern().unwrap())
                .or_default()
                .insert(Node::of(s));
        }

        let mut concerns: Vec<Concern> = intermediates
            .iter()
            .map(|n| Concern::Intermediate(n.clone()))
            .collect();
        let has_top = incoming.contains_key(&Concern::Top);
        if has_top {
            concerns.push(Concern::Top);
        } else if !intermediates.is_empty() {
            return Err(HierarchyError::OrphanConcern(Concern::Top));
        }
        for c in &concerns {
            if !incoming.contains_key(c) {
                return Err(HierarchyError::OrphanConcern(c.clone()));
            }
        }

        let mut concern_degree = BTreeMap::new();
        let mut visiting = Vec::new();
        for c in &concerns {
            degree_of(c, &incoming, &mut concern_degree, &mut visiting)?;
        }
        let top_degree = concern_degree.get(&Concern::Top).copied().unwrap_or(0);
        for (c, &d) in &concern_degree {
            if !c.is_top() && d >= top_degree {
                return Err(HierarchyError::BeyondTopIssue(c.clone(), d, top_degree));
            }
        }

        let mut raises: BTreeMap<Factor, BTreeSet<Concern>> = BTreeMap::new();
        for (u, facts) in &favoring {
            let c = u.concern().unwrap();
            for t in facts {
                raises.entry(t.clone()).or_default().insert(c.clone());
            }
        }

        let mut hasher = DefaultHasher::new();
        base.hash(&mut hasher);
        intermediates.hash(&mut hasher);
        links.hash(&mut hasher);
        let fingerprint = hasher.finish();

        Ok(Hierarchy {
            base,
            intermediates,
            links,
            favoring,
            concern_degree,
            raises,
            top_degree,
            fingerprint,
        })
    }

    pub fn base_factors(&self) -> impl Iterator<Item = Factor> + '_ {
        self.base.iter().map(|n| Factor::Base(n.clone()))
    }

    pub fn base_names(&self) -> &BTreeSet<Name> {
        &self.base
    }

    /// Positive names of the declared intermediate pairs.
    pub fn intermediate_names(&self) -> &BTreeSet<Name> {
        &self.intermediates
    }

    pub fn links(&self) -> &BTreeSet<(Factor, Factor)> {
        &self.links
    }

    /// Stable identity of the declaration, used to reject case bases that
    /// mix hierarchies.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn declares(&self, f: &Factor) -> bool {
        match f {
            Factor::Base(n) => self.base.contains(n),
            Factor::Intermediate { name, .. } => self.intermediates.contains(name),
            Factor::Decision(_) => self.has_top(),
        }
    }

    /// Whether the top-level issue has any favoring factors.
    pub fn has_top(&self) -> bool {
        self.concern_degree.contains_key(&Concern::Top)
    }

    /// `Facts^u`: the factors favoring `u`.
    pub fn favoring(&self, u: &Factor) -> Result<&FactorSet, HierarchyError> {
        match u {
            Factor::Base(_) => Err(HierarchyError::NotAFavoredTarget(u.clone())),
            _ => Ok(self.favoring.get(u).unwrap_or(&EMPTY)),
        }
    }

    /// Same as [`Hierarchy::favoring`] but empty for base factors.
    pub(crate) fn facts_for(&self, u: &Factor) -> &FactorSet {
        self.favoring.get(u).unwrap_or(&EMPTY)
    }

    /// `K^t = K ∩ Facts^t`.
    pub fn restrict(&self, set: &FactorSet, side: &Factor) -> FactorSet {
        let facts = self.facts_for(side);
        set.iter().filter(|f| facts.contains(*f)).cloned().collect()
    }

    pub fn degree(&self, f: &Factor) -> usize {
        match f.concern() {
            None => 0,
            Some(c) => self.concern_degree(&c),
        }
    }

    pub fn concern_degree(&self, c: &Concern) -> usize {
        self.concern_degree.get(c).copied().unwrap_or(0)
    }

    /// `m = degree(0/1)`; zero for a hierarchy without a top-level issue.
    pub fn top_degree(&self) -> usize {
        self.top_degree
    }

    /// All concerns, ordered by name with `0/1` last.
    pub fn concerns(&self) -> impl Iterator<Item = &Concern> {
        self.concern_degree.keys()
    }

    pub fn concerns_of_degree(&self, n: usize) -> impl Iterator<Item = &Concern> {
        self.concern_degree
            .iter()
            .filter(move |(_, d)| **d == n)
            .map(|(c, _)| c)
    }

    /// Concerns whose favoring sets intersect `facts`.
    pub fn concerns_raised(&self, facts: &FactorSet) -> BTreeSet<Concern> {
        facts
            .iter()
            .filter_map(|f| self.raises.get(f))
            .flatten()
            .cloned()
            .collect()
    }

    pub fn concerns_raised_of_degree(&self, facts: &FactorSet, n: usize) -> BTreeSet<Concern> {
        let mut out = self.concerns_raised(facts);
        out.retain(|c| self.concern_degree(c) == n);
        out
    }
}

static EMPTY: FactorSet = FactorSet::new();

fn valid_name(n: &str) -> bool {
    let mut chars = n.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && n.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn conflict(a: &Factor, b: &Factor, c: &Factor, d: &Factor) -> HierarchyError {
    let mut pair = [format!("{a} -> {b}"), format!("{c} -> {d}")];
    pair.sort();
    let [first, second] = pair;
    HierarchyError::ConflictingLinks { first, second }
}

fn degree_of(
    c: &Concern,
    incoming: &BTreeMap<Concern, BTreeSet<Node>>,
    memo: &mut BTreeMap<Concern, usize>,
    visiting: &mut Vec<Concern>,
) -> Result<usize, HierarchyError> {
    if let Some(d) = memo.get(c) {
        return Ok(*d);
    }
    if let Some(pos) = visiting.iter().position(|v| v == c) {
        let mut path: Vec<String> = visiting[pos..].iter().map(ToString::to_string).collect();
        path.push(c.to_string());
        return Err(HierarchyError::Cycle(path));
    }
    visiting.push(c.clone());
    let mut best = 0;
    for node in incoming.get(c).into_iter().flatten() {
        let d = match node {
            Node::Base(_) => 0,
            Node::Concern(inner) => degree_of(inner, incoming, memo, visiting)?,
        };
        best = best.max(d);
    }
    visiting.pop();
    let d = best + 1;
    memo.insert(c.clone(), d);
    Ok(d)
}
