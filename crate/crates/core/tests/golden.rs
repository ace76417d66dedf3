use std::collections::BTreeSet;
use std::path::PathBuf;

use rcm_core::authority::{decide_with_authority, BindingFilter, StatusTable};
use rcm_core::oracle::filtered_solutions;
use rcm_core::reasoning::{
    conflict_free_partitions, relevance, synthesize_solutions, Ambiguity, StateView,
};
use rcm_core::{
    decide, Case, CaseError, Concern, Decision, Factor, FactorSet, Model, Opinion, Outcome,
    PrecedentStatus, Rule,
};

fn load(name: &str) -> Model {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "models", name]
        .iter()
        .collect();
    let text = std::fs::read_to_string(&path).expect("golden model present");
    Model::parse(&text).expect("golden model valid")
}

fn f(s: &str) -> Factor {
    match s {
        "0" => Factor::decision(Outcome::Defendant),
        "1" => Factor::decision(Outcome::Plaintiff),
        _ if s.starts_with('f') => Factor::base(s),
        _ => match s.strip_suffix('\'') {
            Some(n) => Factor::negative(n),
            None => Factor::positive(s),
        },
    }
}

fn set(items: &[&str]) -> FactorSet {
    items.iter().map(|s| f(s)).collect()
}

fn rule(ante: &[&str], concl: &str) -> Rule {
    Rule::new(set(ante), f(concl)).unwrap()
}

fn names(items: &[&str]) -> BTreeSet<rcm_core::Name> {
    items.iter().map(|s| rcm_core::Name::from(*s)).collect()
}

fn concern(s: &str) -> Concern {
    f(s).concern().unwrap()
}

fn stage(facts: &FactorSet, rules: &[Rule]) -> BTreeSet<Decision> {
    rules
        .iter()
        .map(|r| Decision::new(facts.clone(), r.clone()).unwrap())
        .collect()
}

#[test]
fn c_ex_states_translate_to_reference_cases() {
    let m = load("c_ex.rcm");
    let h = m.hierarchy();

    let x1 = set(&["f2", "f3", "f4", "f5"]);
    let y1 = set(&["f2", "f3", "f4", "f5", "p", "r"]);
    let y2 = set(&["f2", "f3", "f4", "f5", "p", "q", "r"]);
    let op1 = Opinion::from_stages(vec![
        stage(&x1, &[rule(&["f2"], "p"), rule(&["f4"], "r")]),
        stage(&y1, &[rule(&["p"], "q")]),
        stage(&y2, &[rule(&["q"], "1")]),
    ]);
    let c1 = Case::new(h, "s1".into(), x1.clone(), op1, Outcome::Plaintiff).unwrap();

    let x2 = set(&["f1", "f3", "f4", "f5", "f6"]);
    let z1 = set(&["f1", "f3", "f4", "f5", "f6", "p", "r'"]);
    let z2 = set(&["f1", "f3", "f4", "f5", "f6", "p", "q", "r'"]);
    let op2 = Opinion::from_stages(vec![
        stage(&x2, &[rule(&["f1"], "p"), rule(&["f5", "f6"], "r'")]),
        stage(&z1, &[rule(&["p"], "q")]),
        stage(&z2, &[rule(&["r'"], "0")]),
    ]);
    // The second reference case concludes 0; an outcome of 1 is rejected.
    assert!(matches!(
        Case::new(h, "s2".into(), x2.clone(), op2.clone(), Outcome::Plaintiff),
        Err(CaseError::OutcomeMismatch { .. })
    ));
    let c2 = Case::new(h, "s2".into(), x2.clone(), op2, Outcome::Defendant).unwrap();

    let got1 = m.classifier.case_of("s1").unwrap();
    let got2 = m.classifier.case_of("s2").unwrap();
    assert_eq!(got1, c1);
    assert_eq!(got2, c2);
    assert_eq!(got1.opinion().stage_facts(&x1)[1..3], [y1, y2]);
    assert_eq!(got2.opinion().stage_facts(&x2)[1..3], [z1, z2]);

    assert!(m.classifier.casebase().unwrap().is_consistent(h));
}

#[test]
fn opposite_states_on_p_yield_inconsistent_casebase() {
    let m = load("prop1.rcm");
    let h = m.hierarchy();
    let c = &m.classifier;
    let pp = concern("p");
    let cb = c.casebase().unwrap();

    let report = cb.consistency(h, Some(&pp));
    assert!(!report.is_consistent());
    assert!(report
        .witnesses
        .iter()
        .any(|w| w.against == set(&["f3"]) && w.favor == set(&["f1", "f2"])));
    assert!(cb.prefers(h, &pp, &set(&["f3"]), &set(&["f1", "f2"])));
    assert!(cb.prefers(h, &pp, &set(&["f1", "f2"]), &set(&["f3"])));

    let (s1, s4) = (c.state("s1").unwrap(), c.state("s4").unwrap());
    let facts_p_s4 = StateView::new(s4).facts(h, &f("p"));
    assert_eq!(facts_p_s4, set(&["f1", "f2"]));
    assert!(relevance(h, &facts_p_s4, &FactorSet::new(), s1, s4, &pp).unwrap());
    assert!(!relevance(h, &FactorSet::new(), &facts_p_s4, s1, s4, &pp).unwrap());
}

#[test]
fn worked_decision_for_s3() {
    let m = load("c_ex.rcm");
    let t = decide(&m.classifier, "s3").unwrap();

    assert_eq!(t.cite(&f("p")), names(&["s1", "s2"]));
    assert!(t.cite(&f("p'")).is_empty());
    assert_eq!(t.cite(&f("r'")), names(&["s2"]));
    assert!(t.cite(&f("r")).is_empty());
    assert_eq!(t.cite(&f("q")), names(&["s1", "s2"]));
    assert!(t.cite(&f("q'")).is_empty());
    assert_eq!(t.cite(&f("0")), names(&["s2"]));
    assert!(t.cite(&f("1")).is_empty());

    assert_eq!(t.verdict(), Some(Outcome::Defendant));
    assert_eq!(
        t.established(),
        &set(&["f1", "f2", "f3", "f4", "f5", "f6", "p", "r'", "q", "0"])
    );
    let f1 = &t.stages[0].after;
    assert_eq!(f1, &set(&["f1", "f2", "f3", "f4", "f5", "f6", "p", "r'"]));
}

#[test]
fn ambiguous_negligible_concern_and_synthesis_bounds() {
    let m = load("example10.rcm");
    let c = &m.classifier;
    let t = decide(c, "sstar").unwrap();

    assert_eq!(t.verdict(), Some(Outcome::Plaintiff));
    assert_eq!(t.ambiguity(&concern("r")), Ambiguity::Ambiguous);
    assert!(t.negligible(&concern("r")));
    assert!(!t.negligible(&concern("p")));
    assert_eq!(t.cite(&f("r")), names(&["s7"]));
    assert_eq!(t.cite(&f("r'")), names(&["s6"]));
    assert_eq!(t.cite(&f("1")), names(&["s6"]));

    let x = ["f1", "f2", "f3", "f4", "f5"];
    let with = |extra: &[&str]| {
        let mut v: Vec<&str> = x.to_vec();
        v.extend_from_slice(extra);
        set(&v)
    };
    let p1 = with(&["p", "q", "r", "1"]);
    let p2 = with(&["p", "q", "r'", "1"]);
    let parts: BTreeSet<FactorSet> = conflict_free_partitions(t.established())
        .unwrap()
        .into_iter()
        .collect();
    assert_eq!(parts, [p1.clone(), p2.clone()].into_iter().collect());

    let s6 = c.state("s6").unwrap();
    assert_eq!(StateView::new(s6).reas(&f("1")), &set(&["q"]));

    let synthesized = synthesize_solutions(c, &t).unwrap();
    let top = Concern::Top;
    let mut total = 0;
    for ps in &synthesized {
        for sol in &ps.solutions {
            total += 1;
            let ap = sol.rule_for(&concern("p")).unwrap().antecedent();
            assert!(set(&["f1"]).is_subset(ap) && ap.is_subset(&set(&["f1", "f2"])));
            assert_eq!(sol.rule_for(&concern("q")).unwrap(), &rule(&["p"], "q"));
            let a1 = sol.rule_for(&top).unwrap();
            assert_eq!(a1.conclusion(), &f("1"));
            assert!(set(&["q"]).is_subset(a1.antecedent()));
            assert!(a1.antecedent().is_subset(&set(&["q", "r"])));
            assert!(!a1.antecedent().contains(&f("f2")));
            if ps.partition == p1 {
                assert_eq!(sol.rule_for(&concern("r")).unwrap(), &rule(&["f4"], "r"));
            }
        }
    }
    let p1_solutions: BTreeSet<_> = synthesized
        .iter()
        .filter(|ps| ps.partition == p1)
        .flat_map(|ps| ps.solutions.iter().cloned())
        .collect();
    let expected_p1: BTreeSet<_> = [
        (&["f1"][..], &["q"][..]),
        (&["f1"], &["q", "r"]),
        (&["f1", "f2"], &["q"]),
        (&["f1", "f2"], &["q", "r"]),
    ]
    .iter()
    .map(|(ap, a1)| {
        rcm_core::validate_solution(
            c.hierarchy(),
            &set(&x),
            [
                rule(ap, "p"),
                rule(&["f4"], "r"),
                rule(&["p"], "q"),
                rule(a1, "1"),
            ],
        )
        .unwrap()
    })
    .collect();
    assert_eq!(p1_solutions, expected_p1);

    // Frozen from the enumeration oracle.
    assert_eq!(total, 6);
    let all: BTreeSet<_> = synthesized
        .into_iter()
        .flat_map(|ps| ps.solutions)
        .collect();
    assert_eq!(all, filtered_solutions(c, &t).unwrap());
}

#[test]
fn court_statuses_resolve_conflicting_precedents() {
    let m = load("courts.rcm");
    let c = &m.classifier;
    let courts = m.courts.as_ref().unwrap();

    let table = StatusTable::compute(c, courts, Some(4)).unwrap();
    assert_eq!(
        table.status("s8", &concern("p")),
        PrecedentStatus::Overruled { by: "s9".into() }
    );
    assert_eq!(
        table.status("s10", &concern("r")),
        PrecedentStatus::PerIncuriam {
            ignored: "s9".into()
        }
    );
    for (s, cn, st) in table.rows() {
        let flagged = (&**s, cn) == ("s8", &concern("p")) || (&**s, cn) == ("s10", &concern("r"));
        assert_eq!(st.is_clean(), !flagged, "{s} {cn}");
    }

    let plain = decide(c, "sstar").unwrap();
    assert_eq!(plain.ambiguity(&concern("p")), Ambiguity::Ambiguous);
    assert_eq!(plain.ambiguity(&concern("r")), Ambiguity::Ambiguous);
    assert_eq!(plain.verdict(), None);

    let (filtered, _) = decide_with_authority(c, courts, "sstar").unwrap();
    assert_eq!(filtered.verdict(), Some(Outcome::Defendant));
    assert_eq!(
        filtered.established(),
        &set(&["f1", "f2", "f3", "f4", "f5", "p'", "q'", "r'", "0"])
    );
    assert_eq!(filtered.cite(&f("p'")), names(&["s9"]));
    assert_eq!(filtered.cite(&f("r'")), names(&["s9"]));
    assert_eq!(filtered.cite(&f("0")), names(&["s9"]));

    // Binding, exception-free and cited on some concern: only s9.
    let filter = BindingFilter::new(c, courts, "sstar").unwrap();
    let mut cited = BTreeSet::new();
    for cn in c.hierarchy().concerns() {
        for side in cn.sides() {
            for id in plain.cite(&side) {
                if filter.accepts(c.state(&id).unwrap(), cn) {
                    cited.insert(id);
                }
            }
        }
    }
    assert_eq!(cited, names(&["s9"]));
}

#[test]
fn synthesis_may_be_empty_when_a_raised_concern_is_unresolved() {
    let text = "\
hierarchy {
  base f1 f2 f3;
  intermediate p;
  link f1 -> p;
  link f2 -> p';
  link p -> 1;
  link f3 -> 1;
}

state s outcome 1 {
  facts f1 f3;
  rule {f1} -> p;
  rule {f3} -> 1;
}

query x {
  facts f1 f2 f3;
}
";
    let m = Model::parse(text).unwrap();
    let c = &m.classifier;
    assert!(c.casebase().unwrap().is_consistent(c.hierarchy()));
    let t = decide(c, "x").unwrap();
    assert_eq!(t.verdict(), Some(Outcome::Plaintiff));
    assert_eq!(t.ambiguity(&concern("p")), Ambiguity::NonePossible);
    let synthesized: Vec<_> = synthesize_solutions(c, &t)
        .unwrap()
        .into_iter()
        .flat_map(|ps| ps.solutions)
        .collect();
    assert!(synthesized.is_empty());
    assert!(filtered_solutions(c, &t).unwrap().is_empty());
}
