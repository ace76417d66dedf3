//! Precedential-constraint reasoning over factor hierarchies.
//!
//! The crate models single-issue factor hierarchies, admissible rules and
//! solutions, cases and the priority orderings they induce, rule-based
//! classifier models, the concern-by-concern decision process for new cases
//! with solution synthesis, and court/time authority filtering. A small DSL
//! reads and writes whole models; [`oracle`] holds brute-force reference
//! implementations and a seeded model generator for testing.

pub mod authority;
pub mod casebase;
pub mod classifier;
pub mod dsl;
pub mod factor;
pub mod hierarchy;
pub mod invariants;
pub mod oracle;
pub mod reasoning;
pub mod rules;

pub use authority::{AuthorityError, CourtSystem, PrecedentStatus, StatusTable};
pub use casebase::{
    build_opinion, Case, CaseBase, CaseError, Chooser, ConsistencyReport, Decision, DecisionRef,
    Opinion, PriorityScheme, Replay, Witness,
};
pub use classifier::{ClassifierModel, ModelError, State, Valuation};
pub use dsl::{natural_cmp, parse, serialize, LoadError, Model, ModelDocument, ParseError};
pub use factor::{display_set, Concern, Factor, FactorSet, Name, Outcome};
pub use hierarchy::{Hierarchy, HierarchyError, RawHierarchy};
pub use reasoning::{
    decide, decide_with_filter, Ambiguity, ConcernStage, DecisionTrace, ReasoningError, StateView,
};
pub use rules::{is_minimal_for, is_obtainable, validate_solution, Rule, Solution, SolutionError};
