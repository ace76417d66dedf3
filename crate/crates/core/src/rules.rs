//! Admissible rules and applicable solutions.
//!
//! A rule `U -> t` is admissible when its antecedent lies inside the favoring
//! set of its conclusion. A solution for a base situation `X` is a rule set
//! that is grounded in `X` (every antecedent is derivable from `X` through
//! other rules of the set) and that resolves every concern raised by `X` or
//! by its own conclusions with exactly one rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::factor::{display_set, Concern, Factor, FactorSet};
use crate::hierarchy::Hierarchy;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    antecedent: FactorSet,
    conclusion: Factor,
}

impl Rule {
    /// Builds a rule; antecedents must be non-empty and conclusions must be
    /// intermediate factors or outcomes.
    pub fn new(
        antecedent: impl IntoIterator<Item = Factor>,
        conclusion: Factor,
    ) -> Result<Rule, SolutionError> {
        let antecedent: FactorSet = antecedent.into_iter().collect();
        let rule = Rule {
            antecedent,
            conclusion,
        };
        if rule.antecedent.is_empty()
            || rule.conclusion.is_base()
            || rule.antecedent.iter().any(Factor::is_decision)
        {
            return Err(SolutionError::MalformedRule(rule.to_string()));
        }
        Ok(rule)
    }

    pub fn antecedent(&self) -> &FactorSet {
        &self.antecedent
    }

    pub fn conclusion(&self) -> &Factor {
        &self.conclusion
    }

    /// The concern this rule resolves.
    pub fn related_concern(&self) -> Concern {
        self.conclusion
            .concern()
            .expect("rule conclusions are never base factors")
    }

    pub fn is_admissible(&self, h: &Hierarchy) -> bool {
        h.declares(&self.conclusion)
            && self.antecedent.iter().all(|f| h.declares(f))
            && self.antecedent.is_subset(h.facts_for(&self.conclusion))
    }

    pub fn is_applicable(&self, facts: &FactorSet) -> bool {
        self.antecedent.is_subset(facts)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {}",
            display_set(&self.antecedent),
            self.conclusion
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionError {
    #[error("malformed rule `{0}`")]
    MalformedRule(String),
    #[error("rule `{0}` is not admissible in the hierarchy")]
    Inadmissible(String),
    #[error("rule `{0}` is not grounded in the fact situation")]
    Ungrounded(String),
    #[error("no rule resolves raised concern {0}")]
    MissingConcernRule(Concern),
    #[error("more than one rule resolves concern {0}")]
    DuplicateConcernRule(Concern),
    #[error("rule `{0}` resolves a concern that is not raised")]
    UnrelatedRule(String),
    #[error("`{0}` is not a base factor; fact situations contain base factors only")]
    NotBaseFact(Factor),
}

/// A rule set validated against the base situation it explains.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    facts: FactorSet,
    rules: BTreeSet<Rule>,
}

impl Solution {
    /// The empty rule set over `facts`, used for undecided states. Not
    /// checked for concern-completeness.
    pub fn empty(facts: FactorSet) -> Solution {
        Solution {
            facts,
            rules: BTreeSet::new(),
        }
    }

    pub fn facts(&self) -> &FactorSet {
        &self.facts
    }

    pub fn rules(&self) -> &BTreeSet<Rule> {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// `rule_sol(c)`: the unique rule resolving `c`, if any.
    pub fn rule_for(&self, c: &Concern) -> Option<&Rule> {
        self.rules.iter().find(|r| &r.related_concern() == c)
    }

    pub fn conclusions(&self) -> FactorSet {
        self.rules.iter().map(|r| r.conclusion.clone()).collect()
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rules.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Checks the applicable-solution conditions and returns the validated set.
///
/// Errors are reported in a fixed order: admissibility, duplicate concerns,
/// grounding, completeness, unrelated rules.
pub fn validate_solution(
    h: &Hierarchy,
    facts: &FactorSet,
    rules: impl IntoIterator<Item = Rule>,
) -> Result<Solution, SolutionError> {
    if let Some(bad) = facts.iter().find(|f| !f.is_base()) {
        return Err(SolutionError::NotBaseFact(bad.clone()));
    }
    let rules: BTreeSet<Rule> = rules.into_iter().collect();
    for r in &rules {
        if !r.is_admissible(h) {
            return Err(SolutionError::Inadmissible(r.to_string()));
        }
    }

    let mut by_concern: BTreeMap<Concern, &Rule> = BTreeMap::new();
    for r in &rules {
        if by_concern.insert(r.related_concern(), r).is_some() {
            return Err(SolutionError::DuplicateConcernRule(r.related_concern()));
        }
    }

    // Grounding by fixpoint; acyclicity bounds the number of rounds.
    let mut known = facts.clone();
    let mut pending: Vec<&Rule> = rules.iter().collect();
    loop {
        let before = pending.len();
        pending.retain(|r| {
            if r.antecedent.is_subset(&known) {
                known.insert(r.conclusion.clone());
                false
            } else {
                true
            }
        });
        if pending.is_empty() || pending.len() == before {
            break;
        }
    }
    if let Some(r) = pending.first() {
        return Err(SolutionError::Ungrounded(r.to_string()));
    }
    // Base members of antecedents must come from the situation itself.
    for r in &rules {
        if r.antecedent
            .iter()
            .any(|f| f.is_base() && !facts.contains(f))
        {
            return Err(SolutionError::Ungrounded(r.to_string()));
        }
    }

    let mut sources = facts.clone();
    sources.extend(rules.iter().map(|r| r.conclusion.clone()));
    let raised = h.concerns_raised(&sources);
    for c in &raised {
        if !by_concern.contains_key(c) {
            return Err(SolutionError::MissingConcernRule(c.clone()));
        }
    }
    for (c, r) in &by_concern {
        if !raised.contains(c) {
            return Err(SolutionError::UnrelatedRule(r.to_string()));
        }
    }

    Ok(Solution {
        facts: facts.clone(),
        rules,
    })
}

/// Whether some applicable solution over `facts` concludes every factor in
/// `targets`; returns one such solution.
///
/// Searches degree by degree. Antecedents never influence which concerns are
/// raised later, so each concern only branches on its side and takes the
/// full available favoring set as antecedent.
pub fn is_obtainable(h: &Hierarchy, targets: &FactorSet, facts: &FactorSet) -> Option<Solution> {
    if targets
        .iter()
        .any(|t| !t.is_intermediate() || !h.declares(t))
    {
        return None;
    }
    for t in targets {
        if targets.contains(&t.opposite().unwrap()) {
            return None;
        }
    }
    let mut rules = Vec::new();
    let mut known = facts.clone();
    if search_obtainable(h, targets, 1, &mut known, &mut rules) {
        validate_solution(h, facts, rules).ok()
    } else {
        None
    }
}

fn search_obtainable(
    h: &Hierarchy,
    targets: &FactorSet,
    degree: usize,
    known: &mut FactorSet,
    rules: &mut Vec<Rule>,
) -> bool {
    let max_degree = h.concerns().map(|c| h.concern_degree(c)).max().unwrap_or(0);
    if degree > max_degree {
        return targets.iter().all(|t| known.contains(t));
    }
    let raised: Vec<Concern> = h
        .concerns_raised_of_degree(known, degree)
        .into_iter()
        .collect();
    // Each raised concern picks a side; enumerate combinations.
    let mut options: Vec<Vec<Rule>> = Vec::with_capacity(raised.len());
    for c in &raised {
        let mut opts = Vec::new();
        for side in c.sides() {
            if targets.contains(&side.opposite().unwrap()) {
                continue;
            }
            let avail = h.restrict(known, &side);
            if !avail.is_empty() {
                opts.push(Rule {
                    antecedent: avail,
                    conclusion: side,
                });
            }
        }
        if opts.is_empty() {
            return false;
        }
        options.push(opts);
    }
    let mut choice = vec![0usize; options.len()];
    loop {
        let picked: Vec<Rule> = choice
            .iter()
            .zip(&options)
            .map(|(i, o)| o[*i].clone())
            .collect();
        let mut next_known = known.clone();
        next_known.extend(picked.iter().map(|r| r.conclusion.clone()));
        let mark = rules.len();
        rules.extend(picked);
        if search_obtainable(h, targets, degree + 1, &mut next_known, rules) {
            *known = next_known;
            return true;
        }
        rules.truncate(mark);
        if !advance(&mut choice, &options) {
            return false;
        }
    }
}

/// Odometer over per-slot option lists; false once exhausted.
pub(crate) fn advance<T>(choice: &mut [usize], options: &[Vec<T>]) -> bool {
    for i in (0..choice.len()).rev() {
        choice[i] += 1;
        if choice[i] < options[i].len() {
            return true;
        }
        choice[i] = 0;
    }
    false
}

/// Whether `sol` introduces no factor bearing on `concern` beyond `X ∪ F`.
pub fn is_minimal_for(
    h: &Hierarchy,
    sol: &Solution,
    concern: &Concern,
    targets: &FactorSet,
    facts: &FactorSet,
) -> bool {
    let Some(rule) = sol.rule_for(concern) else {
        return true;
    };
    let [u, ub] = concern.sides();
    rule.antecedent.iter().all(|a| {
        (h.facts_for(&u).contains(a) || h.facts_for(&ub).contains(a))
            && (facts.contains(a) || targets.contains(a))
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::factor::Outcome;
    use crate::hierarchy::tests::raw_ex;

    pub(crate) fn f(s: &str) -> Factor {
        match s {
            "0" => Factor::decision(Outcome::Defendant),
            "1" => Factor::decision(Outcome::Plaintiff),
            _ if s.starts_with('f') => Factor::base(s),
            _ if s.ends_with('\'') => Factor::negative(&s[..s.len() - 1]),
            _ => Factor::positive(s),
        }
    }

    pub(crate) fn set(items: &[&str]) -> FactorSet {
        items.iter().map(|s| f(s)).collect()
    }

    pub(crate) fn rule(ante: &[&str], concl: &str) -> Rule {
        Rule::new(ante.iter().map(|s| f(s)), f(concl)).unwrap()
    }

    fn h_ex() -> Hierarchy {
        Hierarchy::new(raw_ex()).unwrap()
    }

    fn sol1() -> Vec<Rule> {
        vec![
            rule(&["f2"], "p"),
            rule(&["f4"], "r"),
            rule(&["p"], "q"),
            rule(&["q"], "1"),
        ]
    }

    #[test]
    fn admissibility() {
        let h = h_ex();
        assert!(rule(&["f2"], "p").is_admissible(&h));
        assert!(!rule(&["f4"], "p").is_admissible(&h));
        assert!(rule(&["q"], "1").is_admissible(&h));
        assert!(rule(&["f5", "f6"], "r'").is_admissible(&h));
    }

    #[test]
    fn applicability_and_relatedness() {
        let x1 = set(&["f2", "f3", "f4", "f5"]);
        assert!(rule(&["f2"], "p").is_applicable(&x1));
        assert!(!rule(&["f1"], "p").is_applicable(&x1));
        assert_eq!(
            rule(&["f2"], "p").related_concern(),
            Concern::Intermediate("p".into())
        );
        assert_eq!(rule(&["r'"], "0").related_concern(), Concern::Top);
        assert_eq!(
            rule(&["p"], "q").related_concern(),
            Concern::Intermediate("q".into())
        );
    }

    #[test]
    fn malformed_rules_are_rejected() {
        assert!(Rule::new([], f("p")).is_err());
        assert!(Rule::new([f("f1")], f("f2")).is_err());
        assert!(Rule::new([f("1")], f("p")).is_err());
    }

    #[test]
    fn example_solution_validates() {
        let h = h_ex();
        let x1 = set(&["f2", "f3", "f4", "f5"]);
        let sol = validate_solution(&h, &x1, sol1()).unwrap();
        assert_eq!(sol.rules().len(), 4);
        assert_eq!(sol.rule_for(&Concern::Top), Some(&rule(&["q"], "1")));
    }

    #[test]
    fn missing_duplicate_and_ungrounded() {
        let h = h_ex();
        let x1 = set(&["f2", "f3", "f4", "f5"]);
        let mut rules = sol1();
        rules.retain(|r| r != &rule(&["p"], "q"));
        // {q} -> 1 is now ungrounded; drop the top rule too to reach completeness.
        assert!(matches!(
            validate_solution(&h, &x1, rules.clone()),
            Err(SolutionError::Ungrounded(_))
        ));
        let rules: Vec<Rule> = vec![rule(&["f2"], "p"), rule(&["f4"], "r")];
        assert_eq!(
            validate_solution(&h, &x1, rules).unwrap_err(),
            SolutionError::MissingConcernRule(Concern::Intermediate("q".into()))
        );

        let mut rules = sol1();
        rules.push(rule(&["f3"], "p'"));
        assert_eq!(
            validate_solution(&h, &x1, rules).unwrap_err(),
            SolutionError::DuplicateConcernRule(Concern::Intermediate("p".into()))
        );

        let rules = vec![rule(&["f1"], "p")];
        assert!(matches!(
            validate_solution(&h, &set(&["f2"]), rules),
            Err(SolutionError::Ungrounded(_))
        ));
    }

    #[test]
    fn rule_for_unraised_concern_is_ungrounded() {
        // A grounded admissible rule always bears on a raised concern, so a
        // rule for an unraised concern surfaces as a grounding failure.
        let h = h_ex();
        let x = set(&["f4"]);
        let rules = vec![rule(&["f4"], "r"), rule(&["r"], "1"), rule(&["f1"], "p")];
        assert!(matches!(
            validate_solution(&h, &x, rules),
            Err(SolutionError::Ungrounded(_))
        ));
        let x = set(&["f1", "f4"]);
        let rules = vec![rule(&["f4"], "r"), rule(&["r"], "1"), rule(&["f1"], "p")];
        assert_eq!(
            validate_solution(&h, &x, rules).unwrap_err(),
            SolutionError::MissingConcernRule(Concern::Intermediate("q".into()))
        );
    }

    #[test]
    fn validation_is_order_insensitive() {
        let h = h_ex();
        let x1 = set(&["f2", "f3", "f4", "f5"]);
        let mut rev = sol1();
        rev.reverse();
        assert_eq!(
            validate_solution(&h, &x1, sol1()).unwrap(),
            validate_solution(&h, &x1, rev).unwrap()
        );
    }

    #[test]
    fn obtainability() {
        let h = h_ex();
        let x3 = set(&["f1", "f2", "f3", "f4", "f5", "f6"]);
        let w = is_obtainable(&h, &set(&["p", "r'"]), &x3).expect("obtainable");
        let conclusions = w.conclusions();
        assert!(conclusions.contains(&f("p")) && conclusions.contains(&f("r'")));
        let p_rule = w.rule_for(&Concern::Intermediate("p".into())).unwrap();
        assert!(p_rule.antecedent().is_subset(&set(&["f1", "f2"])));

        assert!(is_obtainable(&h, &set(&["p", "p'"]), &x3).is_none());
        let empty = is_obtainable(&h, &FactorSet::new(), &FactorSet::new()).unwrap();
        assert!(empty.is_empty());
        // q needs p or p' underneath; with only f3 only p' is reachable.
        assert!(is_obtainable(&h, &set(&["q"]), &set(&["f3"])).is_none());
        assert!(is_obtainable(&h, &set(&["q'"]), &set(&["f3"])).is_some());
    }

    #[test]
    fn minimality() {
        let h = h_ex();
        let x3 = set(&["f1", "f2", "f3", "f4", "f5", "f6"]);
        let sol = validate_solution(
            &h,
            &x3,
            vec![
                rule(&["f1"], "p"),
                rule(&["f5"], "r'"),
                rule(&["p"], "q"),
                rule(&["q"], "1"),
            ],
        )
        .unwrap();
        let fset = set(&["p", "q", "r'"]);
        assert!(is_minimal_for(&h, &sol, &Concern::Top, &fset, &x3));

        let sol = validate_solution(
            &h,
            &x3,
            vec![
                rule(&["f1"], "p"),
                rule(&["f4"], "r"),
                rule(&["p"], "q"),
                rule(&["q", "r"], "1"),
            ],
        )
        .unwrap();
        assert!(!is_minimal_for(&h, &sol, &Concern::Top, &fset, &x3));
        let lone = Solution::empty(x3.clone());
        assert!(is_minimal_for(&h, &lone, &Concern::Top, &fset, &x3));
    }
}
