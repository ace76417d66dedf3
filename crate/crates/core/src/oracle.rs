//! Brute-force reference implementations and a seeded model generator.
//!
//! Nothing here shares code paths with the engine beyond rule validation:
//! solutions are found by exhaustive product over candidate rules, and
//! consistency by enumerating every pair of reason sets. Both are guarded so
//! tests stay tractable.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::authority::CourtSystem;
use crate::casebase::{build_opinion, CaseBase};
use crate::classifier::{ClassifierModel, State};
use crate::dsl::Model;
use crate::factor::{Concern, Factor, FactorSet, Name, Outcome};
use crate::hierarchy::{Hierarchy, RawHierarchy};
use crate::reasoning::{conflict_free_partitions, DecisionTrace, StateView};
use crate::rules::{advance, validate_solution, Rule, Solution};

/// Largest enumeration any oracle will attempt.
pub const SCALE_GUARD: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what} needs {size} candidates, over the guard of {SCALE_GUARD}")]
    ScaleGuard { what: &'static str, size: usize },
}

fn subsets(items: &FactorSet) -> Vec<FactorSet> {
    let v: Vec<&Factor> = items.iter().collect();
    (0u32..(1 << v.len()))
        .map(|mask| {
            v.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, f)| (*f).clone())
                .collect()
        })
        .collect()
}

/// `Sol_X`: every applicable solution over `facts`.
pub fn enumerate_solutions(h: &Hierarchy, facts: &FactorSet) -> Result<Vec<Solution>, OracleError> {
    if h.base_names().len() > 8 || h.intermediate_names().len() > 4 {
        return Err(OracleError::ScaleGuard {
            what: "hierarchy size",
            size: h.base_names().len().max(h.intermediate_names().len()),
        });
    }
    // Per concern: no rule, or any admissible rule whose base members are facts.
    let mut options: Vec<Vec<Option<Rule>>> = Vec::new();
    for c in h.concerns() {
        let mut opts = vec![None];
        for side in c.sides() {
            let pool: FactorSet = h
                .favoring(&side)
                .expect("concern sides are favored")
                .iter()
                .filter(|f| !f.is_base() || facts.contains(*f))
                .cloned()
                .collect();
            for a in subsets(&pool).into_iter().filter(|a| !a.is_empty()) {
                opts.push(Some(Rule::new(a, side.clone()).expect("well-formed")));
            }
        }
        options.push(opts);
    }
    let total = options
        .iter()
        .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
        .unwrap_or(usize::MAX);
    if total > SCALE_GUARD {
        return Err(OracleError::ScaleGuard {
            what: "solution enumeration",
            size: total,
        });
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; options.len()];
    loop {
        let rules = choice
            .iter()
            .zip(&options)
            .filter_map(|(i, o)| o[*i].clone());
        if let Ok(sol) = validate_solution(h, facts, rules) {
            out.push(sol);
        }
        if !advance(&mut choice, &options) {
            return Ok(out);
        }
    }
}

/// Whether no `U ⊆ Facts^ū`, `V ⊆ Facts^u` are ordered both ways by `cb`.
pub fn brute_consistency(
    h: &Hierarchy,
    cb: &CaseBase,
    concern: &Concern,
) -> Result<bool, OracleError> {
    let [u, ub] = concern.sides();
    let (fu, fub) = (
        h.favoring(&u).expect("favored").clone(),
        h.favoring(&ub).expect("favored").clone(),
    );
    let size = 1usize
        .checked_shl((fu.len() + fub.len()) as u32)
        .unwrap_or(usize::MAX);
    if size > SCALE_GUARD {
        return Err(OracleError::ScaleGuard {
            what: "reason-pair enumeration",
            size,
        });
    }
    let schemes = cb.priority_schemes(h, concern);
    let (vs, us) = (subsets(&fu), subsets(&fub));
    for a in &us {
        for b in &vs {
            let forward = schemes.iter().any(|s| s.holds(h, a, b));
            let backward = schemes.iter().any(|s| s.holds(h, b, a));
            if forward && backward {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `g*(s*)` by filtering `Sol_{X*}` through the partition and citation
/// conditions.
pub fn filtered_solutions(
    model: &ClassifierModel,
    trace: &DecisionTrace,
) -> Result<BTreeSet<Solution>, OracleError> {
    let h = model.hierarchy();
    let mut out = BTreeSet::new();
    if trace.top().len() != 1 {
        return Ok(out);
    }
    let Ok(partitions) = conflict_free_partitions(trace.established()) else {
        return Ok(out);
    };
    let all = enumerate_solutions(h, &trace.facts)?;
    for p in &partitions {
        let needed: FactorSet = p.iter().filter(|f| f.is_intermediate()).cloned().collect();
        for sol in &all {
            let concl = sol.conclusions();
            if !needed.is_subset(&concl) || !concl.is_subset(p) {
                continue;
            }
            let cited_ok = sol.rules().iter().all(|r| {
                let t = r.conclusion();
                let upper = h.restrict(p, t);
                r.antecedent().is_subset(&upper)
                    && trace.cite(t).iter().any(|id| {
                        model
                            .state(id)
                            .is_some_and(|s| StateView::new(s).reas(t).is_subset(r.antecedent()))
                    })
            });
            if cited_ok {
                out.insert(sol.clone());
            }
        }
    }
    Ok(out)
}

/// Size limits for [`random_model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelParams {
    pub max_base: usize,
    pub max_pairs: usize,
    pub max_decided: usize,
    pub max_queries: usize,
    pub courts: bool,
}

impl Default for ModelParams {
    fn default() -> ModelParams {
        ModelParams {
            max_base: 6,
            max_pairs: 3,
            max_decided: 5,
            max_queries: 2,
            courts: false,
        }
    }
}

/// Source of a link at concern level: a base factor or an earlier pair.
#[derive(Clone)]
enum Source {
    Base(Name),
    Pair(Name),
}

/// A reproducible random model. Hierarchies are layered (each concern draws
/// its sources from base factors and earlier pairs, one link per source) so
/// they always validate; decided states come from random opinions.
pub fn random_model(seed: u64, params: ModelParams) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(2..=params.max_base.max(2));
    let np = rng.gen_range(0..=params.max_pairs);
    let base: Vec<Name> = (1..=nb).map(|i| Name::from(format!("f{i}"))).collect();
    let pairs: Vec<Name> = ["p", "q", "r", "s", "u", "v", "w"][..np]
        .iter()
        .map(|s| Name::from(*s))
        .collect();

    let side = |rng: &mut ChaCha8Rng, src: &Source| match src {
        Source::Base(n) => Factor::Base(n.clone()),
        Source::Pair(n) if rng.gen_bool(0.5) => Factor::positive(n),
        Source::Pair(n) => Factor::negative(n),
    };
    let mut links = Vec::new();
    let mut feeds = vec![false; np];
    for j in 0..=np {
        let mut pool: Vec<Source> = base.iter().cloned().map(Source::Base).collect();
        pool.extend(pairs[..j].iter().cloned().map(Source::Pair));
        let k = rng.gen_range(1..=3usize).min(pool.len());
        let mut chosen: Vec<Source> = pool.choose_multiple(&mut rng, k).cloned().collect();
        if j == np {
            // Every pair must reach the top issue through some later concern.
            for (i, p) in pairs.iter().enumerate() {
                if !feeds[i]
                    && !chosen
                        .iter()
                        .any(|s| matches!(s, Source::Pair(n) if n == p))
                {
                    chosen.push(Source::Pair(p.clone()));
                }
            }
        }
        for src in chosen {
            if let Source::Pair(n) = &src {
                feeds[pairs.iter().position(|p| p == n).unwrap()] = true;
            }
            let from = side(&mut rng, &src);
            let to = if j == np {
                Factor::Decision(if rng.gen_bool(0.5) {
                    Outcome::Plaintiff
                } else {
                    Outcome::Defendant
                })
            } else if rng.gen_bool(0.5) {
                Factor::positive(&pairs[j])
            } else {
                Factor::negative(&pairs[j])
            };
            links.push((from, to));
        }
    }
    let h = Arc::new(
        Hierarchy::new(RawHierarchy {
            base: base.clone(),
            intermediates: pairs.clone(),
            links,
        })
        .expect("layered hierarchies validate"),
    );

    let random_facts = |rng: &mut ChaCha8Rng| -> FactorSet {
        loop {
            let x: FactorSet = base
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .map(|n| Factor::Base(n.clone()))
                .collect();
            if !x.is_empty() {
                return x;
            }
        }
    };

    let mut states = Vec::new();
    let nd = rng.gen_range(1..=params.max_decided.max(1));
    let mut attempts = 0;
    while states.len() < nd && attempts < 50 {
        attempts += 1;
        let x = random_facts(&mut rng);
        let mut chooser = |h: &Hierarchy, c: &Concern, y: &FactorSet| -> Option<Rule> {
            let sides: Vec<Factor> = c
                .sides()
                .into_iter()
                .filter(|t| !h.restrict(y, t).is_empty())
                .collect();
            let t = sides.choose(&mut rng)?.clone();
            let avail: Vec<Factor> = h.restrict(y, &t).into_iter().collect();
            let k = rng.gen_range(1..=avail.len());
            let a: FactorSet = avail.choose_multiple(&mut rng, k).cloned().collect();
            Rule::new(a, t).ok()
        };
        let op = build_opinion(&h, &x, &mut chooser).expect("chooser resolves raised concerns");
        let Some(outcome) = op.outcome() else {
            continue;
        };
        let rules: BTreeSet<Rule> = op.merge().into_iter().map(|d| d.rule().clone()).collect();
        let id = format!("s{}", states.len() + 1);
        states.push(State::decided(&id, x, rules, outcome));
    }
    let decided = states.len();
    for q in 0..rng.gen_range(1..=params.max_queries.max(1)) {
        let id = format!("q{}", q + 1);
        states.push(State::undecided(&id, random_facts(&mut rng)));
    }

    let courts = params.courts.then(|| {
        let nc = rng.gen_range(1..=3usize);
        let names: Vec<Name> = (0..nc).map(|i| Name::from(format!("k{i}"))).collect();
        let chains = if nc > 1 {
            vec![names.clone()]
        } else {
            Vec::new()
        };
        let self_bound: Vec<Name> = names
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .cloned()
            .collect();
        let mut singles = self_bound.clone();
        if nc == 1 && singles.is_empty() {
            singles.push(names[0].clone());
        }
        let mut times: Vec<i64> = (1..=decided as i64).collect();
        times.shuffle(&mut rng);
        for (i, s) in states.iter_mut().enumerate() {
            s.court = Some(names.choose(&mut rng).unwrap().clone());
            s.time = Some(if i < decided {
                times[i]
            } else {
                decided as i64 + 1
            });
        }
        CourtSystem::new(&chains, &singles, &[]).expect("chains are acyclic")
    });

    let classifier = ClassifierModel::new(h, states).expect("generated states validate");
    Model { classifier, courts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::tests::raw_ex;
    use crate::rules::tests::{rule, set};

    #[test]
    fn enumeration_contains_first_solution() {
        let h = Hierarchy::new(raw_ex()).unwrap();
        let x1 = set(&["f2", "f3", "f4", "f5"]);
        let all = enumerate_solutions(&h, &x1).unwrap();
        let sol1: BTreeSet<Rule> = [
            rule(&["f2"], "p"),
            rule(&["f4"], "r"),
            rule(&["p"], "q"),
            rule(&["q"], "1"),
        ]
        .into_iter()
        .collect();
        assert!(all.iter().any(|s| s.rules() == &sol1));
        let none = enumerate_solutions(&h, &FactorSet::new()).unwrap();
        assert_eq!(none.len(), 1);
        assert!(none[0].is_empty());
    }

    #[test]
    fn generator_is_deterministic() {
        let p = ModelParams {
            courts: true,
            ..ModelParams::default()
        };
        let a = random_model(42, p);
        let b = random_model(42, p);
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.classifier.states(), b.classifier.states());
    }

    #[test]
    fn generated_models_validate() {
        for seed in 0..200 {
            let m = random_model(seed, ModelParams::default());
            assert!(m.hierarchy().base_names().len() <= 6);
            assert!(m.hierarchy().intermediate_names().len() <= 3);
            let again = Model::parse(&m.to_text()).unwrap();
            for s in m.classifier.states() {
                assert_eq!(again.classifier.state(&s.id), Some(s));
            }
        }
    }
}
