//! Factors, outcomes and concerns.
//!
//! A factor is either a base fact, one polarity of an intermediate legal
//! concept, or one of the two outcomes of the top-level issue. Factors are
//! totally ordered (base < intermediate < outcome, then by name and
//! polarity) so every set of them has a canonical rendering.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// Interned identifier for factors, states and courts.
pub type Name = Arc<str>;

/// Canonically ordered set of factors.
pub type FactorSet = BTreeSet<Factor>;

/// Outcome of the top-level issue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    /// `0`, a decision for the defendant.
    Defendant,
    /// `1`, a decision for the plaintiff.
    Plaintiff,
}

impl Outcome {
    pub fn opposite(self) -> Outcome {
        match self {
            Outcome::Defendant => Outcome::Plaintiff,
            Outcome::Plaintiff => Outcome::Defendant,
        }
    }

    pub fn as_digit(self) -> char {
        match self {
            Outcome::Defendant => '0',
            Outcome::Plaintiff => '1',
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_digit())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Base(Name),
    /// `negated == true` is the primed member of the pair (`p'`).
    Intermediate {
        name: Name,
        negated: bool,
    },
    Decision(Outcome),
}

impl Factor {
    pub fn base(name: &str) -> Factor {
        Factor::Base(name.into())
    }

    pub fn positive(name: &str) -> Factor {
        Factor::Intermediate {
            name: name.into(),
            negated: false,
        }
    }

    pub fn negative(name: &str) -> Factor {
        Factor::Intermediate {
            name: name.into(),
            negated: true,
        }
    }

    pub fn decision(outcome: Outcome) -> Factor {
        Factor::Decision(outcome)
    }

    /// The opposite factor; base factors have none.
    pub fn opposite(&self) -> Option<Factor> {
        match self {
            Factor::Base(_) => None,
            Factor::Intermediate { name, negated } => Some(Factor::Intermediate {
                name: name.clone(),
                negated: !negated,
            }),
            Factor::Decision(o) => Some(Factor::Decision(o.opposite())),
        }
    }

    /// The concern this factor is one side of.
    pub fn concern(&self) -> Option<Concern> {
        match self {
            Factor::Base(_) => None,
            Factor::Intermediate { name, .. } => Some(Concern::Intermediate(name.clone())),
            Factor::Decision(_) => Some(Concern::Top),
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, Factor::Base(_))
    }

    pub fn is_intermediate(&self) -> bool {
        matches!(self, Factor::Intermediate { .. })
    }

    pub fn is_decision(&self) -> bool {
        matches!(self, Factor::Decision(_))
    }

    pub fn as_outcome(&self) -> Option<Outcome> {
        match self {
            Factor::Decision(o) => Some(*o),
            _ => None,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Base(n) => f.write_str(n),
            Factor::Intermediate { name, negated } => {
                f.write_str(name)?;
                if *negated {
                    f.write_str("'")?;
                }
                Ok(())
            }
            Factor::Decision(o) => write!(f, "{o}"),
        }
    }
}

/// The question whether `t` or its opposite holds.
///
/// Represented by the positive member; the top-level issue is represented
/// by `1` and rendered `0/1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concern {
    Intermediate(Name),
    Top,
}

impl Concern {
    /// The positive member (`p`, or `1` for the top-level issue).
    pub fn positive(&self) -> Factor {
        match self {
            Concern::Intermediate(n) => Factor::Intermediate {
                name: n.clone(),
                negated: false,
            },
            Concern::Top => Factor::Decision(Outcome::Plaintiff),
        }
    }

    pub fn negative(&self) -> Factor {
        match self {
            Concern::Intermediate(n) => Factor::Intermediate {
                name: n.clone(),
                negated: true,
            },
            Concern::Top => Factor::Decision(Outcome::Defendant),
        }
    }

    /// Both sides, positive first.
    pub fn sides(&self) -> [Factor; 2] {
        [self.positive(), self.negative()]
    }

    pub fn contains(&self, factor: &Factor) -> bool {
        factor.concern().as_ref() == Some(self)
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Concern::Top)
    }
}

impl fmt::Display for Concern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concern::Intermediate(n) => write!(f, "{n}/{n}'"),
            Concern::Top => f.write_str("0/1"),
        }
    }
}

/// Renders a factor set as `{a, b, c}`.
pub fn display_set<'a, I>(items: I) -> String
where
    I: IntoIterator<Item = &'a Factor>,
{
    let parts: Vec<String> = items.into_iter().map(ToString::to_string).collect();
    format!("{{{}}}", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn opposite_is_an_involution() {
        for f in [
            Factor::positive("p"),
            Factor::negative("p"),
            Factor::decision(Outcome::Plaintiff),
            Factor::decision(Outcome::Defendant),
        ] {
            let back = f.opposite().unwrap().opposite().unwrap();
            assert_eq!(back, f);
            assert_ne!(f.opposite().unwrap(), f);
        }
        assert_eq!(Factor::base("f1").opposite(), None);
    }

    #[test]
    fn ordering_is_base_then_intermediate_then_outcome() {
        let mut v = [
            Factor::decision(Outcome::Plaintiff),
            Factor::negative("p"),
            Factor::base("f2"),
            Factor::positive("p"),
            Factor::decision(Outcome::Defendant),
            Factor::base("f1"),
        ];
        v.sort();
        let shown: Vec<String> = v.iter().map(ToString::to_string).collect();
        assert_eq!(shown, ["f1", "f2", "p", "p'", "0", "1"]);
    }

    #[test]
    fn concern_rendering() {
        assert_eq!(Concern::Intermediate("q".into()).to_string(), "q/q'");
        assert_eq!(Concern::Top.to_string(), "0/1");
        assert_eq!(
            Concern::Top.positive(),
            Factor::decision(Outcome::Plaintiff)
        );
        assert!(Concern::Top.contains(&Factor::decision(Outcome::Defendant)));
        assert!(!Concern::Top.contains(&Factor::negative("p")));
    }
}
