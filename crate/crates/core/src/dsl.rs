//! Model file format.
//!
//! ```text
//! # dsl-version: 1
//! hierarchy {
//!   base f1 f2 f3;
//!   intermediate p;
//!   link f1 -> p;
//!   link f3 -> p';
//!   link p -> 1;
//! }
//!
//! courts {
//!   order k0 > k1;
//!   selfbound k1;
//! }
//!
//! state s1 court k0 time 1 outcome 1 {
//!   facts f1 f3;
//!   rule {f1} -> p;
//!   rule {p} -> 1;
//! }
//!
//! query s2 court k1 {
//!   facts f1 f2;
//! }
//! ```
//!
//! `intermediate p` declares both `p` and `p'`. Keywords are reserved and
//! cannot be used as names. [`parse`] checks references and duplicate
//! declarations; [`Model::from_document`] runs the semantic validation.
//! [`serialize`] emits the canonical form, which is a fixpoint of
//! `serialize ∘ parse`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::authority::{AuthorityError, CourtSystem};
use crate::classifier::{ClassifierModel, ModelError, State, Valuation};
use crate::factor::{Factor, Name, Outcome};
use crate::hierarchy::{Hierarchy, HierarchyError, RawHierarchy};
use crate::rules::{Rule, SolutionError};

const KEYWORDS: &[&str] = &[
    "hierarchy",
    "base",
    "intermediate",
    "link",
    "courts",
    "order",
    "selfbound",
    "option",
    "state",
    "query",
    "court",
    "time",
    "outcome",
    "facts",
    "rule",
];

/// 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: {message}")]
    Lex { pos: Pos, message: String },
    #[error("{pos}: found {found}, expected {}", .expected.join(" or "))]
    Syntax {
        pos: Pos,
        found: String,
        expected: Vec<String>,
    },
    #[error("{pos}: `{name}` is already declared")]
    DuplicateDeclaration { pos: Pos, name: String },
    #[error("{pos}: `{name}` is not a declared {kind}")]
    UnknownReference {
        pos: Pos,
        name: String,
        kind: &'static str,
    },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Lex { pos, .. }
            | ParseError::Syntax { pos, .. }
            | ParseError::DuplicateDeclaration { pos, .. }
            | ParseError::UnknownReference { pos, .. } => *pos,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Lex { .. } => "lex",
            ParseError::Syntax { .. } => "syntax",
            ParseError::DuplicateDeclaration { .. } => "duplicate-declaration",
            ParseError::UnknownReference { .. } => "unknown-reference",
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    LBrace,
    RBrace,
    Semi,
    Comma,
    Prime,
    Arrow,
    Gt,
    Eq,
    Question,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "`{s}`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Prime => f.write_str("`'`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Question => f.write_str("`?`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let start = i;
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '{' | '}' | ';' | ',' | '\'' | '>' | '=' | '?' => {
                i += 1;
                out.push((
                    match c {
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        ';' => Tok::Semi,
                        ',' => Tok::Comma,
                        '\'' => Tok::Prime,
                        '>' => Tok::Gt,
                        '=' => Tok::Eq,
                        _ => Tok::Question,
                    },
                    pos,
                ));
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 2;
                out.push((Tok::Arrow, pos));
            }
            c if c == '-' || c.is_ascii_digit() => {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                if s == "-" {
                    return Err(ParseError::Lex {
                        pos,
                        message: "stray `-`".into(),
                    });
                }
                if i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                    return Err(ParseError::Lex {
                        pos,
                        message: "identifiers must start with a letter or `_`".into(),
                    });
                }
                out.push((Tok::Number(s), pos));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let inner_dash = d == '-'
                        && chars
                            .get(i + 1)
                            .is_some_and(|n| n.is_ascii_alphanumeric() || *n == '_');
                    if d.is_ascii_alphanumeric() || d == '_' || inner_dash {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            }
            other => {
                return Err(ParseError::Lex {
                    pos,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
        col += i - start;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Document

/// A factor as written: a name with optional prime, or an outcome digit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FactorRef {
    Named { name: Name, primed: bool },
    Outcome(Outcome),
}

impl fmt::Display for FactorRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorRef::Named { name, primed } => {
                write!(f, "{name}{}", if *primed { "'" } else { "" })
            }
            FactorRef::Outcome(o) => write!(f, "{o}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spanned<T> {
    pub value: T,
    pub pos: Pos,
}

impl<T> Spanned<T> {
    fn new(value: T, pos: Pos) -> Spanned<T> {
        Spanned { value, pos }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HierarchyBlock {
    pub base: Vec<Spanned<Name>>,
    pub intermediate: Vec<Spanned<Name>>,
    pub links: Vec<Spanned<(FactorRef, FactorRef)>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CourtsBlock {
    pub orders: Vec<Spanned<Vec<Name>>>,
    pub selfbound: Vec<Spanned<Name>>,
    pub options: Vec<Spanned<(String, String)>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleDecl {
    pub antecedent: Vec<FactorRef>,
    pub conclusion: FactorRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateBlock {
    pub id: Spanned<Name>,
    /// Declared with the `query` keyword.
    pub query: bool,
    pub court: Option<Spanned<Name>>,
    pub time: Option<i64>,
    /// `None` is `?`.
    pub outcome: Option<Outcome>,
    pub facts: Vec<Spanned<Name>>,
    pub rules: Vec<Spanned<RuleDecl>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModelDocument {
    pub hierarchy: HierarchyBlock,
    pub courts: Option<CourtsBlock>,
    pub states: Vec<StateBlock>,
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> Result<Pos, ParseError> {
        if self.peek() == &t {
            Ok(self.bump().1)
        } else {
            self.fail(&[&t.to_string()])
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        if self.at_keyword(kw) {
            Ok(self.bump().1)
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    fn id(&mut self) -> Result<Spanned<Name>, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let (t, pos) = self.bump();
                let Tok::Ident(s) = t else { unreachable!() };
                Ok(Spanned::new(s.into(), pos))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn at_id(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
    }

    fn ids_until_semi(&mut self, at_least_one: bool) -> Result<Vec<Spanned<Name>>, ParseError> {
        let mut out = Vec::new();
        while self.at_id() {
            out.push(self.id()?);
        }
        if at_least_one && out.is_empty() {
            return self.fail(&["identifier"]);
        }
        if self.peek() != &Tok::Semi {
            return self.fail(&["identifier", "`;`"]);
        }
        self.bump();
        Ok(out)
    }

    fn factor(&mut self) -> Result<(FactorRef, Pos), ParseError> {
        let name = self.id()?;
        let primed = self.eat(&Tok::Prime);
        Ok((
            FactorRef::Named {
                name: name.value,
                primed,
            },
            name.pos,
        ))
    }

    fn target(&mut self) -> Result<(FactorRef, Pos), ParseError> {
        match self.peek() {
            Tok::Number(n) if n == "0" || n == "1" => {
                let o = if n == "0" {
                    Outcome::Defendant
                } else {
                    Outcome::Plaintiff
                };
                let pos = self.bump().1;
                Ok((FactorRef::Outcome(o), pos))
            }
            _ if self.at_id() => self.factor(),
            _ => self.fail(&["factor", "`0`", "`1`"]),
        }
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                let pos = self.pos();
                self.bump();
                n.parse().map_err(|_| ParseError::Lex {
                    pos,
                    message: format!("integer `{n}` out of range"),
                })
            }
            _ => self.fail(&["integer"]),
        }
    }

    fn document(&mut self) -> Result<ModelDocument, ParseError> {
        let hierarchy = self.hierarchy()?;
        let courts = if self.at_keyword("courts") {
            Some(self.courts()?)
        } else {
            None
        };
        let mut states = Vec::new();
        loop {
            if self.at_keyword("state") {
                states.push(self.state(false)?);
            } else if self.at_keyword("query") {
                states.push(self.state(true)?);
            } else if self.peek() == &Tok::Eof {
                break;
            } else if courts.is_none() && states.is_empty() {
                return self.fail(&["`courts`", "`state`", "`query`", "end of input"]);
            } else {
                return self.fail(&["`state`", "`query`", "end of input"]);
            }
        }
        Ok(ModelDocument {
            hierarchy,
            courts,
            states,
        })
    }

    fn hierarchy(&mut self) -> Result<HierarchyBlock, ParseError> {
        self.keyword("hierarchy")?;
        self.expect(Tok::LBrace)?;
        let mut block = HierarchyBlock::default();
        loop {
            if self.at_keyword("base") {
                self.bump();
                block.base.extend(self.ids_until_semi(true)?);
            } else if self.at_keyword("intermediate") {
                self.bump();
                block.intermediate.extend(self.ids_until_semi(true)?);
            } else if self.at_keyword("link") {
                let pos = self.bump().1;
                let (from, _) = self.factor()?;
                self.expect(Tok::Arrow)?;
                let (to, _) = self.target()?;
                self.expect(Tok::Semi)?;
                block.links.push(Spanned::new((from, to), pos));
            } else if self.peek() == &Tok::RBrace {
                self.bump();
                break;
            } else {
                return self.fail(&["`base`", "`intermediate`", "`link`", "`}`"]);
            }
        }
        if block.base.is_empty() {
            return Err(ParseError::Syntax {
                pos: self.toks[self.at.saturating_sub(1)].1,
                found: "`}`".into(),
                expected: vec!["`base`".into()],
            });
        }
        Ok(block)
    }

    fn courts(&mut self) -> Result<CourtsBlock, ParseError> {
        self.keyword("courts")?;
        self.expect(Tok::LBrace)?;
        let mut block = CourtsBlock::default();
        loop {
            if self.at_keyword("order") {
                let pos = self.bump().1;
                let mut chain = vec![self.id()?.value];
                self.expect(Tok::Gt)?;
                chain.push(self.id()?.value);
                while self.eat(&Tok::Gt) {
                    chain.push(self.id()?.value);
                }
                if self.peek() != &Tok::Semi {
                    return self.fail(&["`>`", "`;`"]);
                }
                self.bump();
                block.orders.push(Spanned::new(chain, pos));
            } else if self.at_keyword("selfbound") {
                self.bump();
                block.selfbound.extend(self.ids_until_semi(true)?);
            } else if self.at_keyword("option") {
                let pos = self.bump().1;
                let key = self.id()?.value.to_string();
                self.expect(Tok::Eq)?;
                let value = match self.peek().clone() {
                    Tok::Ident(s) | Tok::Number(s) => {
                        self.bump();
                        s
                    }
                    _ => return self.fail(&["option value"]),
                };
                self.expect(Tok::Semi)?;
                block.options.push(Spanned::new((key, value), pos));
            } else if self.peek() == &Tok::RBrace {
                self.bump();
                break;
            } else {
                return self.fail(&["`order`", "`selfbound`", "`option`", "`}`"]);
            }
        }
        Ok(block)
    }

    fn state(&mut self, query: bool) -> Result<StateBlock, ParseError> {
        self.bump();
        let id = self.id()?;
        let court = if self.at_keyword("court") {
            self.bump();
            Some(self.id()?)
        } else {
            None
        };
        let time = if self.at_keyword("time") {
            self.bump();
            Some(self.integer()?)
        } else {
            None
        };
        let outcome = if query {
            None
        } else {
            if !self.at_keyword("outcome") {
                let mut expected = Vec::new();
                if court.is_none() && time.is_none() {
                    expected.push("`court`");
                }
                if time.is_none() {
                    expected.push("`time`");
                }
                expected.push("`outcome`");
                return self.fail(&expected);
            }
            self.bump();
            match self.peek() {
                Tok::Number(n) if n == "0" => {
                    self.bump();
                    Some(Outcome::Defendant)
                }
                Tok::Number(n) if n == "1" => {
                    self.bump();
                    Some(Outcome::Plaintiff)
                }
                Tok::Question => {
                    self.bump();
                    None
                }
                _ => return self.fail(&["`0`", "`1`", "`?`"]),
            }
        };
        self.expect(Tok::LBrace)?;
        self.keyword("facts")?;
        let facts = self.ids_until_semi(false)?;
        let mut rules = Vec::new();
        if !query {
            while self.at_keyword("rule") {
                let pos = self.bump().1;
                self.expect(Tok::LBrace)?;
                let mut antecedent = vec![self.factor()?.0];
                while self.eat(&Tok::Comma) {
                    antecedent.push(self.factor()?.0);
                }
                if self.peek() != &Tok::RBrace {
                    return self.fail(&["`,`", "`}`"]);
                }
                self.bump();
                self.expect(Tok::Arrow)?;
                let (conclusion, _) = self.target()?;
                self.expect(Tok::Semi)?;
                rules.push(Spanned::new(
                    RuleDecl {
                        antecedent,
                        conclusion,
                    },
                    pos,
                ));
            }
        }
        if self.peek() != &Tok::RBrace {
            return self.fail(if query { &["`}`"] } else { &["`rule`", "`}`"] });
        }
        self.bump();
        Ok(StateBlock {
            id,
            query,
            court,
            time,
            outcome,
            facts,
            rules,
        })
    }
}

/// Parses a document and checks declarations and references.
pub fn parse(text: &str) -> Result<ModelDocument, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let doc = p.document()?;
    check_references(&doc)?;
    Ok(doc)
}

fn check_references(doc: &ModelDocument) -> Result<(), ParseError> {
    let mut names = BTreeSet::new();
    let hb = &doc.hierarchy;
    for n in hb.base.iter().chain(&hb.intermediate) {
        if !names.insert(n.value.clone()) {
            return Err(ParseError::DuplicateDeclaration {
                pos: n.pos,
                name: n.value.to_string(),
            });
        }
    }
    let base: BTreeSet<&Name> = hb.base.iter().map(|n| &n.value).collect();
    let inter: BTreeSet<&Name> = hb.intermediate.iter().map(|n| &n.value).collect();
    let known = |f: &FactorRef| match f {
        FactorRef::Named { name, primed } => {
            inter.contains(name) || (!primed && base.contains(name))
        }
        FactorRef::Outcome(_) => true,
    };
    let unknown = |f: &FactorRef, pos: Pos| ParseError::UnknownReference {
        pos,
        name: f.to_string(),
        kind: "factor",
    };
    for l in &hb.links {
        for f in [&l.value.0, &l.value.1] {
            if !known(f) {
                return Err(unknown(f, l.pos));
            }
        }
    }

    let mut courts = BTreeSet::new();
    if let Some(cb) = &doc.courts {
        courts.extend(cb.orders.iter().flat_map(|o| o.value.iter().cloned()));
        courts.extend(cb.selfbound.iter().map(|s| s.value.clone()));
    }
    let mut ids = BTreeSet::new();
    for s in &doc.states {
        if !ids.insert(s.id.value.clone()) {
            return Err(ParseError::DuplicateDeclaration {
                pos: s.id.pos,
                name: s.id.value.to_string(),
            });
        }
        if let Some(c) = &s.court {
            if !courts.contains(&c.value) {
                return Err(ParseError::UnknownReference {
                    pos: c.pos,
                    name: c.value.to_string(),
                    kind: "court",
                });
            }
        }
        for f in &s.facts {
            if !base.contains(&f.value) {
                return Err(ParseError::UnknownReference {
                    pos: f.pos,
                    name: f.value.to_string(),
                    kind: "base factor",
                });
            }
        }
        for r in &s.rules {
            for f in r.value.antecedent.iter().chain([&r.value.conclusion]) {
                if !known(f) {
                    return Err(unknown(f, r.pos));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Serializer

/// Orders ids so that digit runs compare numerically (`s2 < s10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for ((da, xa), (db, xb)) in ca.iter().zip(&cb) {
        let ord = if *da && *db {
            let (ta, tb) = (xa.trim_start_matches('0'), xb.trim_start_matches('0'));
            ta.len().cmp(&tb.len()).then(ta.cmp(tb))
        } else {
            xa.cmp(xb)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then(a.cmp(b))
}

fn sorted_names<'a>(it: impl IntoIterator<Item = &'a Name>) -> Vec<&'a Name> {
    let mut v: Vec<&Name> = it
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    v.sort_by(|a, b| natural_cmp(a, b));
    v
}

fn factor_key(f: &FactorRef) -> (u8, String, bool) {
    match f {
        FactorRef::Named { name, primed } => (0, name.to_string(), *primed),
        FactorRef::Outcome(o) => (1, o.to_string(), false),
    }
}

fn factor_cmp(a: &FactorRef, b: &FactorRef) -> Ordering {
    let (ka, kb) = (factor_key(a), factor_key(b));
    ka.0.cmp(&kb.0)
        .then_with(|| natural_cmp(&ka.1, &kb.1))
        .then(ka.2.cmp(&kb.2))
}

/// Canonical text: header comment, sorted declarations, one statement per
/// line, two-space indent, blank line between blocks.
pub fn serialize(doc: &ModelDocument) -> String {
    let mut out = String::from("# dsl-version: 1\nhierarchy {\n");
    let hb = &doc.hierarchy;
    let line = |out: &mut String, kw: &str, names: Vec<&Name>| {
        if !names.is_empty() {
            let parts: Vec<&str> = names.iter().map(|n| &***n).collect();
            let _ = writeln!(out, "  {kw} {};", parts.join(" "));
        }
    };
    line(
        &mut out,
        "base",
        sorted_names(hb.base.iter().map(|n| &n.value)),
    );
    line(
        &mut out,
        "intermediate",
        sorted_names(hb.intermediate.iter().map(|n| &n.value)),
    );
    let mut links: Vec<&(FactorRef, FactorRef)> = hb.links.iter().map(|l| &l.value).collect();
    links.sort_by(|a, b| factor_cmp(&a.0, &b.0).then_with(|| factor_cmp(&a.1, &b.1)));
    links.dedup();
    for (a, b) in links {
        let _ = writeln!(out, "  link {a} -> {b};");
    }
    out.push_str("}\n");

    if let Some(cb) = &doc.courts {
        out.push_str("\ncourts {\n");
        let mut orders: Vec<&Vec<Name>> = cb.orders.iter().map(|o| &o.value).collect();
        orders.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| natural_cmp(x, y))
                .find(|o| o.is_ne())
                .unwrap_or(a.len().cmp(&b.len()))
        });
        orders.dedup();
        for o in orders {
            let parts: Vec<&str> = o.iter().map(|n| &**n).collect();
            let _ = writeln!(out, "  order {};", parts.join(" > "));
        }
        line(
            &mut out,
            "selfbound",
            sorted_names(cb.selfbound.iter().map(|n| &n.value)),
        );
        let opts: BTreeMap<&str, &str> = cb
            .options
            .iter()
            .map(|o| (o.value.0.as_str(), o.value.1.as_str()))
            .collect();
        for (k, v) in opts {
            let _ = writeln!(out, "  option {k} = {v};");
        }
        out.push_str("}\n");
    }

    let mut states: Vec<&StateBlock> = doc.states.iter().collect();
    states.sort_by(|a, b| natural_cmp(&a.id.value, &b.id.value));
    for s in states {
        let _ = write!(
            out,
            "\n{} {}",
            if s.query { "query" } else { "state" },
            s.id.value
        );
        if let Some(c) = &s.court {
            let _ = write!(out, " court {}", c.value);
        }
        if let Some(t) = s.time {
            let _ = write!(out, " time {t}");
        }
        if !s.query {
            let _ = write!(
                out,
                " outcome {}",
                s.outcome.map_or("?".to_string(), |o| o.to_string())
            );
        }
        out.push_str(" {\n");
        let facts = sorted_names(s.facts.iter().map(|f| &f.value));
        if facts.is_empty() {
            out.push_str("  facts;\n");
        } else {
            line(&mut out, "facts", facts);
        }
        let mut rules: Vec<(FactorRef, Vec<FactorRef>)> = s
            .rules
            .iter()
            .map(|r| {
                let mut a = r.value.antecedent.clone();
                a.sort_by(factor_cmp);
                a.dedup();
                (r.value.conclusion.clone(), a)
            })
            .collect();
        rules.sort_by(|x, y| {
            factor_cmp(&x.0, &y.0).then_with(|| {
                x.1.iter()
                    .zip(&y.1)
                    .map(|(a, b)| factor_cmp(a, b))
                    .find(|o| o.is_ne())
                    .unwrap_or(x.1.len().cmp(&y.1.len()))
            })
        });
        for (c, a) in rules {
            let parts: Vec<String> = a.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "  rule {{{}}} -> {c};", parts.join(", "));
        }
        out.push_str("}\n");
    }
    out
}

impl ModelDocument {
    pub fn to_text(&self) -> String {
        serialize(self)
    }

    /// Rebuilds a document from a validated model. Undecided states become
    /// queries.
    pub fn from_model(model: &Model) -> ModelDocument {
        let at = |v| Spanned::new(v, Pos::default());
        let h = model.hierarchy();
        let fref = |f: &Factor| match f {
            Factor::Base(n) => FactorRef::Named {
                name: n.clone(),
                primed: false,
            },
            Factor::Intermediate { name, negated } => FactorRef::Named {
                name: name.clone(),
                primed: *negated,
            },
            Factor::Decision(o) => FactorRef::Outcome(*o),
        };
        let hierarchy = HierarchyBlock {
            base: h.base_names().iter().cloned().map(at).collect(),
            intermediate: h.intermediate_names().iter().cloned().map(at).collect(),
            links: h
                .links()
                .iter()
                .map(|(a, b)| Spanned::new((fref(a), fref(b)), Pos::default()))
                .collect(),
        };
        let courts = model.courts.as_ref().map(|k| CourtsBlock {
            orders: k
                .covering()
                .into_iter()
                .map(|(a, b)| Spanned::new(vec![a, b], Pos::default()))
                .collect(),
            selfbound: k.self_bound().iter().cloned().map(at).collect(),
            options: if k.strict_incuriam() {
                Vec::new()
            } else {
                vec![Spanned::new(
                    ("strict-incuriam".to_string(), "false".to_string()),
                    Pos::default(),
                )]
            },
        });
        let states = model
            .classifier
            .states()
            .iter()
            .map(|s| StateBlock {
                id: at(s.id.clone()),
                query: !s.is_decided(),
                court: s.court.clone().map(at),
                time: s.time,
                outcome: s.valuation.outcome(),
                facts: s
                    .facts
                    .iter()
                    .filter_map(|f| match f {
                        Factor::Base(n) => Some(at(n.clone())),
                        _ => None,
                    })
                    .collect(),
                rules: s
                    .rules
                    .iter()
                    .map(|r| {
                        Spanned::new(
                            RuleDecl {
                                antecedent: r.antecedent().iter().map(fref).collect(),
                                conclusion: fref(r.conclusion()),
                            },
                            Pos::default(),
                        )
                    })
                    .collect(),
            })
            .collect();
        ModelDocument {
            hierarchy,
            courts,
            states,
        }
    }
}

// ---------------------------------------------------------------------------
// Loading

/// Anything that can go wrong between text and a validated model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Authority(#[from] AuthorityError),
}

impl LoadError {
    pub fn is_parse(&self) -> bool {
        matches!(self, LoadError::Parse(_))
    }

    /// Stable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::Parse(e) => e.code(),
            LoadError::Hierarchy(e) => match e {
                HierarchyError::Cycle(_) => "cycle",
                HierarchyError::ConflictingLinks { .. } => "conflicting-links",
                HierarchyError::DanglingFactor(_) => "dangling-factor",
                HierarchyError::OrphanConcern(_) => "orphan-concern",
                HierarchyError::InvalidLink { .. } => "invalid-link",
                HierarchyError::DuplicateName(_) => "duplicate-name",
                HierarchyError::InvalidName(_) => "invalid-name",
                HierarchyError::BeyondTopIssue(..) => "beyond-top-issue",
                HierarchyError::NotAFavoredTarget(_) => "not-a-favored-target",
            },
            LoadError::Model(e) => model_code(e),
            LoadError::Authority(e) => match e {
                AuthorityError::CourtCycle(_) => "court-cycle",
                AuthorityError::UnknownCourt { .. } => "unknown-court",
                AuthorityError::MissingMetadata(_) => "missing-metadata",
                AuthorityError::SimultaneousDecisions(..) => "simultaneous-decisions",
                AuthorityError::UnknownOption(_) => "unknown-option",
                AuthorityError::InvalidOption { .. } => "invalid-option",
                AuthorityError::Reasoning(_) => "reasoning",
            },
        }
    }
}

fn model_code(e: &ModelError) -> &'static str {
    match e {
        ModelError::C1Violation(_) => "c1-violation",
        ModelError::C2Violation { .. } => "c2-violation",
        ModelError::DuplicateStateId(_) => "duplicate-state",
        ModelError::UndeclaredFactor { .. } => "undeclared-factor",
        ModelError::InvalidSolution { source, .. } => match source {
            SolutionError::MalformedRule(_) => "malformed-rule",
            SolutionError::Inadmissible(_) => "inadmissible-rule",
            SolutionError::Ungrounded(_) => "ungrounded-rule",
            SolutionError::MissingConcernRule(_) => "missing-concern-rule",
            SolutionError::DuplicateConcernRule(_) => "duplicate-concern-rule",
            SolutionError::UnrelatedRule(_) => "unrelated-rule",
            SolutionError::NotBaseFact(_) => "not-base-fact",
        },
        ModelError::Undecided(_) => "undecided",
        ModelError::UnknownState(_) => "unknown-state",
        ModelError::Case(_) => "case",
    }
}

/// A validated model: hierarchy, states and the optional court system.
#[derive(Clone, Debug)]
pub struct Model {
    pub classifier: ClassifierModel,
    pub courts: Option<CourtSystem>,
}

impl Model {
    pub fn parse(text: &str) -> Result<Model, LoadError> {
        Model::from_document(&parse(text)?)
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        self.classifier.hierarchy()
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Model, LoadError> {
        let hb = &doc.hierarchy;
        let inter: BTreeSet<&Name> = hb.intermediate.iter().map(|n| &n.value).collect();
        let resolve = |f: &FactorRef| match f {
            FactorRef::Outcome(o) => Factor::Decision(*o),
            FactorRef::Named { name, primed } if inter.contains(name) => Factor::Intermediate {
                name: name.clone(),
                negated: *primed,
            },
            FactorRef::Named { name, .. } => Factor::Base(name.clone()),
        };
        let raw = RawHierarchy {
            base: hb.base.iter().map(|n| n.value.clone()).collect(),
            intermediates: hb.intermediate.iter().map(|n| n.value.clone()).collect(),
            links: hb
                .links
                .iter()
                .map(|l| (resolve(&l.value.0), resolve(&l.value.1)))
                .collect(),
        };
        let hierarchy = Arc::new(Hierarchy::new(raw)?);

        let courts = match &doc.courts {
            Some(cb) => Some(CourtSystem::new(
                &cb.orders
                    .iter()
                    .map(|o| o.value.clone())
                    .collect::<Vec<_>>(),
                &cb.selfbound
                    .iter()
                    .map(|s| s.value.clone())
                    .collect::<Vec<_>>(),
                &cb.options
                    .iter()
                    .map(|o| o.value.clone())
                    .collect::<Vec<_>>(),
            )?),
            None => None,
        };

        let mut states = Vec::with_capacity(doc.states.len());
        for sb in &doc.states {
            let mut rules = BTreeSet::new();
            for r in &sb.rules {
                let rule = Rule::new(
                    r.value.antecedent.iter().map(&resolve),
                    resolve(&r.value.conclusion),
                )
                .map_err(|source| ModelError::InvalidSolution {
                    state: sb.id.value.clone(),
                    source,
                })?;
                rules.insert(rule);
            }
            states.push(State {
                id: sb.id.value.clone(),
                facts: sb
                    .facts
                    .iter()
                    .map(|f| Factor::Base(f.value.clone()))
                    .collect(),
                rules,
                valuation: sb.outcome.map_or(Valuation::Undecided, Valuation::Decided),
                court: sb.court.as_ref().map(|c| c.value.clone()),
                time: sb.time,
            });
        }
        let classifier = ClassifierModel::new(hierarchy, states)?;
        Ok(Model { classifier, courts })
    }

    pub fn to_text(&self) -> String {
        serialize(&ModelDocument::from_model(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C_EX: &str = "
hierarchy {
  base f1 f2 f3 f4 f5 f6;
  intermediate p q r;
  link f1->p; link f2 -> p; link f3 -> p'; link f3 -> q';
  link p -> q; link p' -> q'; link q -> 1;
  link f4 -> r; link f5 -> r'; link f6 -> r'; link r' -> 0;
}
state s1 outcome 1 { facts f2 f3 f4 f5;
  rule {f2} -> p; rule {f4} -> r; rule {p} -> q; rule {q} -> 1; }
state s2 outcome 0 { facts f1 f3 f4 f5 f6;
  rule {f1} -> p; rule {f5, f6} -> r'; rule {p} -> q; rule {r'} -> 0; }
query s3 { facts f1 f2 f3 f4 f5 f6; }
";

    #[test]
    fn parses_example_document() {
        let doc = parse(C_EX).unwrap();
        assert_eq!(doc.states.len(), 3);
        let m = Model::from_document(&doc).unwrap();
        let vals: Vec<String> = m
            .classifier
            .states()
            .iter()
            .map(|s| format!("{}:{}", s.id, s.valuation))
            .collect();
        assert_eq!(vals, ["s1:1", "s2:0", "s3:?"]);
        assert_eq!(m.hierarchy().top_degree(), 3);
    }

    #[test]
    fn canonical_fixpoint() {
        let once = serialize(&parse(C_EX).unwrap());
        let twice = serialize(&parse(&once).unwrap());
        assert_eq!(once, twice);
        assert!(once.starts_with("# dsl-version: 1\nhierarchy {\n  base f1 f2"));
        assert!(once.contains("  rule {f5, f6} -> r';\n"));
        let m = Model::parse(&once).unwrap();
        assert_eq!(m.to_text(), once);
    }

    #[test]
    fn minimal_document() {
        let doc = parse("hierarchy { base f1; }").unwrap();
        assert_eq!(
            serialize(&doc),
            "# dsl-version: 1\nhierarchy {\n  base f1;\n}\n"
        );
        let m = Model::from_document(&doc).unwrap();
        assert_eq!(m.hierarchy().concerns().count(), 0);
    }

    #[test]
    fn syntax_error_at_missing_conclusion() {
        let text = "hierarchy { base f1; intermediate p; link f1 -> p; link p -> 1; }\n\
                    state s outcome 1 { facts f1; rule {f1} -> ; }";
        match parse(text).unwrap_err() {
            ParseError::Syntax {
                pos,
                found,
                expected,
            } => {
                assert_eq!(pos, Pos { line: 2, col: 44 });
                assert_eq!(found, "`;`");
                assert_eq!(expected, ["factor", "`0`", "`1`"]);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn reference_and_duplicate_errors() {
        assert!(matches!(
            parse("hierarchy { base f1 f1; }"),
            Err(ParseError::DuplicateDeclaration { .. })
        ));
        assert!(matches!(
            parse("hierarchy { base f1; link f1 -> p; }"),
            Err(ParseError::UnknownReference { .. })
        ));
        assert!(matches!(
            parse("hierarchy { base f1; intermediate p; link f1 -> p; link p -> 1; }\nquery s { facts p; }"),
            Err(ParseError::UnknownReference { kind: "base factor", .. })
        ));
        assert!(matches!(
            parse("hierarchy { base f1; }\nquery s court k { facts f1; }"),
            Err(ParseError::UnknownReference { kind: "court", .. })
        ));
        assert!(matches!(
            parse("hierarchy { base f$; }"),
            Err(ParseError::Lex { .. })
        ));
        assert!(matches!(
            parse("hierarchy { base time; }"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn hyphenated_option_keys() {
        let text = "hierarchy { base f1; }\ncourts { order a > b > c; selfbound c; option strict-incuriam = false; }";
        let doc = parse(text).unwrap();
        let m = Model::from_document(&doc).unwrap();
        assert!(!m.courts.as_ref().unwrap().strict_incuriam());
        let out = serialize(&doc);
        assert!(out.contains("\ncourts {\n  order a > b > c;\n  selfbound c;\n  option strict-incuriam = false;\n}\n"));
    }

    #[test]
    fn natural_order() {
        let mut v = vec!["s10", "s2", "s1", "sstar", "s9"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, ["s1", "s2", "s9", "s10", "sstar"]);
    }
}
