//! Report structures shared by the JSON and plain-text renderers.
//!
//! Every factor set is a sorted array of rendered factors; field order is
//! the declaration order below, so output is byte-stable.

use std::fmt::Write as _;

use rcm_core::authority::StatusTable;
use rcm_core::reasoning::{Explanation, PartitionSolutions};
use rcm_core::{
    natural_cmp, ConsistencyReport, DecisionRef, DecisionTrace, Factor, FactorSet, PrecedentStatus,
    Rule,
};
use serde::Serialize;

pub fn set(s: &FactorSet) -> Vec<String> {
    s.iter().map(ToString::to_string).collect()
}

fn braces(items: &[String]) -> String {
    format!("{{{}}}", items.join(", "))
}

#[derive(Serialize)]
pub struct ModelInfo {
    pub digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
}

#[derive(Serialize)]
pub struct Citations {
    pub side: String,
    pub states: Vec<String>,
}

#[derive(Serialize)]
pub struct StageRecord {
    pub degree: usize,
    pub concern: String,
    pub raised: bool,
    pub established_before: Vec<String>,
    pub cite_for: Citations,
    pub cite_against: Citations,
    pub h: Vec<String>,
    pub ambiguity: String,
    pub negligible: bool,
}

#[derive(Serialize)]
pub struct Final {
    pub verdict: Option<String>,
    pub h: Vec<String>,
    #[serde(rename = "F")]
    pub established: Vec<String>,
}

#[derive(Serialize)]
pub struct RuleRecord {
    pub antecedent: Vec<String>,
    pub conclusion: String,
}

impl RuleRecord {
    fn of(r: &Rule) -> RuleRecord {
        RuleRecord {
            antecedent: set(r.antecedent()),
            conclusion: r.conclusion().to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct SolutionRecord {
    pub partition: Vec<String>,
    pub rules: Vec<RuleRecord>,
}

#[derive(Serialize)]
pub struct StatusRecord {
    pub state: String,
    pub concern: String,
    pub status: String,
    pub by: Option<String>,
}

#[derive(Serialize)]
pub struct AuthorityRecord {
    pub applied: bool,
    pub statuses: Vec<StatusRecord>,
}

#[derive(Serialize)]
pub struct TraceReport {
    pub model: ModelInfo,
    pub stages: Vec<StageRecord>,
    #[serde(rename = "final")]
    pub final_: Final,
    pub solutions: Vec<SolutionRecord>,
    pub authority: Option<AuthorityRecord>,
}

impl TraceReport {
    pub fn new(
        digest: String,
        trace: &DecisionTrace,
        solutions: Option<&[PartitionSolutions]>,
        statuses: Option<(&StatusTable, bool)>,
    ) -> TraceReport {
        let mut stages = Vec::new();
        for st in &trace.stages {
            for cs in &st.concerns {
                let [pos, neg] = cs.concern.sides();
                let cite = |side: &Factor| {
                    let mut states: Vec<String> =
                        cs.cite(side).iter().map(|s| s.to_string()).collect();
                    states.sort_by(|a, b| natural_cmp(a, b));
                    Citations {
                        side: side.to_string(),
                        states,
                    }
                };
                stages.push(StageRecord {
                    degree: st.degree,
                    concern: cs.concern.to_string(),
                    raised: cs.raised,
                    established_before: set(&st.before),
                    cite_for: cite(&pos),
                    cite_against: cite(&neg),
                    h: set(&cs.h),
                    ambiguity: cs.ambiguity().to_string(),
                    negligible: trace.negligible(&cs.concern),
                });
            }
        }
        let solutions = solutions
            .unwrap_or_default()
            .iter()
            .flat_map(|ps| {
                ps.solutions.iter().map(|sol| SolutionRecord {
                    partition: set(&ps.partition),
                    rules: sol.rules().iter().map(RuleRecord::of).collect(),
                })
            })
            .collect();
        let authority = statuses.map(|(table, applied)| AuthorityRecord {
            applied,
            statuses: table
                .rows()
                .iter()
                .map(|(s, c, st)| {
                    let (status, by) = match st {
                        PrecedentStatus::Clean => ("clean", None),
                        PrecedentStatus::Overruled { by } => ("overruled", Some(by.to_string())),
                        PrecedentStatus::PerIncuriam { ignored } => {
                            ("per-incuriam", Some(ignored.to_string()))
                        }
                    };
                    StatusRecord {
                        state: s.to_string(),
                        concern: c.to_string(),
                        status: status.into(),
                        by,
                    }
                })
                .collect(),
        });
        TraceReport {
            model: ModelInfo {
                digest,
                case: Some(trace.query.to_string()),
            },
            stages,
            final_: Final {
                verdict: trace.verdict().map(|o| o.to_string()),
                h: set(&trace.top()),
                established: set(trace.established()),
            },
            solutions,
            authority,
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.model.digest);
        let _ = writeln!(out, "case {}", self.model.case.as_deref().unwrap_or("-"));
        let mut degree = 0;
        for s in &self.stages {
            if s.degree != degree {
                degree = s.degree;
                let _ = writeln!(
                    out,
                    "degree {degree}  F = {}",
                    braces(&s.established_before)
                );
            }
            let names = |c: &Citations| {
                if c.states.is_empty() {
                    "-".to_string()
                } else {
                    c.states.join(" ")
                }
            };
            let _ = write!(
                out,
                "  {}: cite {} = {}; cite {} = {}; h = {}; {}",
                s.concern,
                s.cite_for.side,
                names(&s.cite_for),
                s.cite_against.side,
                names(&s.cite_against),
                braces(&s.h),
                s.ambiguity
            );
            if !s.raised {
                out.push_str(" (not raised)");
            }
            if s.negligible {
                out.push_str(" (negligible)");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "verdict {}",
            self.final_.verdict.as_deref().unwrap_or("none")
        );
        let _ = writeln!(out, "h 0/1 = {}", braces(&self.final_.h));
        let _ = writeln!(out, "F = {}", braces(&self.final_.established));
        for (i, sol) in self.solutions.iter().enumerate() {
            let rules: Vec<String> = sol
                .rules
                .iter()
                .map(|r| format!("{} -> {}", braces(&r.antecedent), r.conclusion))
                .collect();
            let _ = writeln!(
                out,
                "solution {} for P = {}: {}",
                i + 1,
                braces(&sol.partition),
                braces(&rules)
            );
        }
        if let Some(a) = &self.authority {
            for s in &a.statuses {
                let _ = write!(out, "status {} {}: {}", s.state, s.concern, s.status);
                if let Some(by) = &s.by {
                    let _ = write!(out, " ({by})");
                }
                out.push('\n');
            }
        }
        out
    }
}

#[derive(Serialize)]
pub struct DecisionRecord {
    pub case: String,
    pub stage: usize,
    pub outcome: String,
}

impl DecisionRecord {
    fn of(d: &DecisionRef) -> DecisionRecord {
        DecisionRecord {
            case: d.case.to_string(),
            stage: d.stage,
            outcome: d.outcome.to_string(),
        }
    }
}

#[derive(Serialize)]
pub struct WitnessRecord {
    pub against: Vec<String>,
    pub favor: Vec<String>,
    pub positive: DecisionRecord,
    pub negative: DecisionRecord,
}

#[derive(Serialize)]
pub struct ConcernConsistency {
    pub concern: String,
    pub consistent: bool,
    pub witnesses: Vec<WitnessRecord>,
}

#[derive(Serialize)]
pub struct ConsistencyOutput {
    pub model: ModelInfo,
    pub consistent: bool,
    pub concerns: Vec<ConcernConsistency>,
}

impl ConsistencyOutput {
    pub fn new(
        digest: String,
        report: &ConsistencyReport,
        concerns: &[rcm_core::Concern],
    ) -> ConsistencyOutput {
        let per: Vec<ConcernConsistency> = concerns
            .iter()
            .map(|c| {
                let witnesses: Vec<WitnessRecord> = report
                    .witnesses
                    .iter()
                    .filter(|w| &w.concern == c)
                    .map(|w| WitnessRecord {
                        against: set(&w.against),
                        favor: set(&w.favor),
                        positive: DecisionRecord::of(&w.positive),
                        negative: DecisionRecord::of(&w.negative),
                    })
                    .collect();
                ConcernConsistency {
                    concern: c.to_string(),
                    consistent: witnesses.is_empty(),
                    witnesses,
                }
            })
            .collect();
        ConsistencyOutput {
            model: ModelInfo { digest, case: None },
            consistent: report.is_consistent(),
            concerns: per,
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.model.digest);
        for c in &self.concerns {
            let _ = writeln!(
                out,
                "{}: {}",
                c.concern,
                if c.consistent {
                    "consistent"
                } else {
                    "inconsistent"
                }
            );
            for w in &c.witnesses {
                let _ = writeln!(
                    out,
                    "  {} < {} from {}@{} ({})",
                    braces(&w.against),
                    braces(&w.favor),
                    w.positive.case,
                    w.positive.stage,
                    w.positive.outcome
                );
                let _ = writeln!(
                    out,
                    "  {} < {} from {}@{} ({})",
                    braces(&w.favor),
                    braces(&w.against),
                    w.negative.case,
                    w.negative.stage,
                    w.negative.outcome
                );
            }
        }
        let _ = writeln!(
            out,
            "{}",
            if self.consistent {
                "consistent"
            } else {
                "inconsistent"
            }
        );
        out
    }
}

#[derive(Serialize)]
pub struct MemberCheck {
    pub factor: String,
    pub holds: bool,
}

#[derive(Serialize)]
pub struct Containment {
    pub left: Vec<String>,
    pub right: Vec<String>,
    pub members: Vec<MemberCheck>,
    pub holds: bool,
}

impl Containment {
    fn new(left: &FactorSet, right: &FactorSet) -> Containment {
        let members: Vec<MemberCheck> = left
            .iter()
            .map(|f| MemberCheck {
                factor: f.to_string(),
                holds: right.contains(f),
            })
            .collect();
        Containment {
            left: set(left),
            right: set(right),
            holds: members.iter().all(|m| m.holds),
            members,
        }
    }
}

#[derive(Serialize)]
pub struct ExplainEntry {
    pub state: String,
    pub side: Option<String>,
    pub filtered_out: bool,
    pub reason_established: Option<Containment>,
    pub against_faced: Option<Containment>,
    pub citable: bool,
}

#[derive(Serialize)]
pub struct ExplainOutput {
    pub model: ModelInfo,
    pub concern: String,
    pub degree: usize,
    pub raised: bool,
    pub entries: Vec<ExplainEntry>,
}

impl ExplainOutput {
    pub fn new(digest: String, case: &str, e: &Explanation) -> ExplainOutput {
        let entries = e
            .checks
            .iter()
            .map(|c| ExplainEntry {
                state: c.state.to_string(),
                side: c.side.as_ref().map(ToString::to_string),
                filtered_out: c.filtered_out,
                reason_established: c
                    .side
                    .as_ref()
                    .map(|_| Containment::new(&c.reason, &c.established_for)),
                against_faced: c
                    .side
                    .as_ref()
                    .map(|_| Containment::new(&c.established_against, &c.precedent_against)),
                citable: c.citable(),
            })
            .collect();
        ExplainOutput {
            model: ModelInfo {
                digest,
                case: Some(case.to_string()),
            },
            concern: e.concern.to_string(),
            degree: e.degree,
            raised: e.raised,
            entries,
        }
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "case {} concern {} (degree {})",
            self.model.case.as_deref().unwrap_or("-"),
            self.concern,
            self.degree
        );
        if !self.raised {
            let _ = writeln!(out, "not raised; no precedent applies");
            return out;
        }
        for e in &self.entries {
            let Some(side) = &e.side else {
                let _ = writeln!(
                    out,
                    "{}: did not decide {}; not citable",
                    e.state, self.concern
                );
                continue;
            };
            let _ = writeln!(out, "{}: decided {side}", e.state);
            let show = |out: &mut String, label: &str, c: &Containment| {
                let _ = writeln!(
                    out,
                    "  {label}: {} ⊆ {}: {}",
                    braces(&c.left),
                    braces(&c.right),
                    if c.holds { "holds" } else { "fails" }
                );
                for m in &c.members {
                    let _ = writeln!(
                        out,
                        "    {} {} {}",
                        m.factor,
                        if m.holds { "∈" } else { "∉" },
                        braces(&c.right)
                    );
                }
            };
            if let Some(c) = &e.reason_established {
                show(&mut out, "reason established", c);
            }
            if let Some(c) = &e.against_faced {
                show(&mut out, "opposition faced", c);
            }
            if e.filtered_out {
                let _ = writeln!(out, "  excluded by authority filter");
            }
            let _ = writeln!(
                out,
                "  {}",
                if e.citable {
                    format!("citable for {side}")
                } else {
                    "not citable".to_string()
                }
            );
        }
        out
    }
}
