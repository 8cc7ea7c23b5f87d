//! Formula language: parsing, printing, and the subformula table.
//!
//! The subformula table fixes an enumeration `φ1..φd` of the subformula
//! closure of a goal formula. Antecedent multisets are then represented as
//! vectors in `ℕ^d` (coordinate `i` = multiplicity of `φ_{i+1}`), and stoups
//! as indices in `0..=d` where `0` is the reserved empty stoup.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A propositional formula over `*`, `/\`, `\/`, `->` with constants 0 and 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Formula {
    Atom(String),
    Const0,
    Const1,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Fus(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }
    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }
    pub fn fus(l: Formula, r: Formula) -> Formula {
        Formula::Fus(Box::new(l), Box::new(r))
    }
    pub fn imp(l: Formula, r: Formula) -> Formula {
        Formula::Imp(Box::new(l), Box::new(r))
    }

    /// Immediate subterms (empty for atoms and constants).
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::Const0 | Formula::Const1 => vec![],
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Fus(l, r)
            | Formula::Imp(l, r) => vec![l, r],
        }
    }

    /// Number of connective (internal) nodes.
    pub fn connective_count(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Const0 | Formula::Const1 => 0,
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Fus(l, r)
            | Formula::Imp(l, r) => 1 + l.connective_count() + r.connective_count(),
        }
    }
}

/// Binding strength for the canonical printer; higher binds tighter.
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Atom(_) | Formula::Const0 | Formula::Const1 => 4,
        Formula::Fus(_, _) => 3,
        Formula::And(_, _) => 2,
        Formula::Or(_, _) => 1,
        Formula::Imp(_, _) => 0,
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Prints with minimal parentheses relative to the fixed precedence
        // and associativity (-> right-associative, the rest left).
        fn side(f: &mut fmt::Formatter<'_>, sub: &Formula, min: u8) -> fmt::Result {
            if prec(sub) < min {
                write!(f, "(")?;
                write!(f, "{sub}")?;
                write!(f, ")")
            } else {
                write!(f, "{sub}")
            }
        }
        match self {
            Formula::Atom(s) => write!(f, "{s}"),
            Formula::Const0 => write!(f, "0"),
            Formula::Const1 => write!(f, "1"),
            Formula::Fus(l, r) => {
                side(f, l, 3)?;
                write!(f, " * ")?;
                side(f, r, 4)
            }
            Formula::And(l, r) => {
                side(f, l, 2)?;
                write!(f, " /\\ ")?;
                side(f, r, 3)
            }
            Formula::Or(l, r) => {
                side(f, l, 1)?;
                write!(f, " \\/ ")?;
                side(f, r, 2)
            }
            Formula::Imp(l, r) => {
                side(f, l, 1)?;
                write!(f, " -> ")?;
                side(f, r, 0)
            }
        }
    }
}

/// Parse failure with a byte offset into the input.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {position}: {message}")]
pub struct SyntaxError {
    pub position: usize,
    pub message: String,
}

/// A formula mentioned outside the ambient subformula table.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("formula not in subformula table: {formula}")]
pub struct UnknownFormula {
    pub formula: String,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn error(&self, message: &str) -> SyntaxError {
        SyntaxError {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek_op(&mut self) -> Option<&'static str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        for op in ["->", "\\/", "/\\", "*"] {
            if rest.starts_with(op.as_bytes()) {
                return Some(op);
            }
        }
        None
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.or()?;
        if self.peek_op() == Some("->") {
            self.eat("->");
            let rhs = self.formula()?; // right-associative
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, SyntaxError> {
        let mut acc = self.and()?;
        while self.peek_op() == Some("\\/") {
            self.eat("\\/");
            let rhs = self.and()?;
            acc = Formula::or(acc, rhs);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula, SyntaxError> {
        let mut acc = self.fus()?;
        while self.peek_op() == Some("/\\") {
            self.eat("/\\");
            let rhs = self.fus()?;
            acc = Formula::and(acc, rhs);
        }
        Ok(acc)
    }

    fn fus(&mut self) -> Result<Formula, SyntaxError> {
        let mut acc = self.atom()?;
        while self.peek_op() == Some("*") {
            self.eat("*");
            let rhs = self.atom()?;
            acc = Formula::fus(acc, rhs);
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Formula, SyntaxError> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.formula()?;
                self.skip_ws();
                if !self.eat(")") {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(b'0') => {
                self.pos += 1;
                Ok(Formula::Const0)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(Formula::Const1)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap()
                    .to_string();
                Ok(Formula::Atom(name))
            }
            _ => Err(self.error("expected formula")),
        }
    }

    fn expect_end(&mut self) -> Result<(), SyntaxError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }
}

/// Parses a formula per the fixed grammar; whitespace-insensitive.
pub fn parse(text: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(text);
    let f = p.formula()?;
    p.expect_end()?;
    Ok(f)
}

/// The enumeration `φ1..φd` of a subformula-closed set.
///
/// Order is the deduplicated postorder of the root formula (first occurrence
/// wins), so indices are deterministic for a given goal. Index `0` is
/// reserved for the empty stoup and is not an entry; formula `φ_i` lives at
/// `entries[i-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubformulaTable {
    entries: Vec<Formula>,
    lookup: HashMap<Formula, usize>,
}

impl SubformulaTable {
    /// Builds the table for the subformula closure of `root`.
    pub fn new(root: &Formula) -> SubformulaTable {
        let mut tbl = SubformulaTable {
            entries: Vec::new(),
            lookup: HashMap::new(),
        };
        tbl.insert_postorder(root);
        tbl
    }

    /// Builds one table covering every formula in `roots`.
    pub fn for_all<'a>(roots: impl IntoIterator<Item = &'a Formula>) -> SubformulaTable {
        let mut tbl = SubformulaTable {
            entries: Vec::new(),
            lookup: HashMap::new(),
        };
        for root in roots {
            tbl.insert_postorder(root);
        }
        tbl
    }

    fn insert_postorder(&mut self, f: &Formula) {
        for child in f.children() {
            self.insert_postorder(child);
        }
        if !self.lookup.contains_key(f) {
            self.entries.push(f.clone());
            self.lookup.insert(f.clone(), self.entries.len());
        }
    }

    /// Number of entries `d`.
    pub fn d(&self) -> usize {
        self.entries.len()
    }

    /// 1-based index of `f`, if present.
    pub fn index_of(&self, f: &Formula) -> Option<usize> {
        self.lookup.get(f).copied()
    }

    /// Formula at 1-based index `i`.
    pub fn formula(&self, i: usize) -> &Formula {
        &self.entries[i - 1]
    }

    /// Entries in table order (`φ1..φd`).
    pub fn entries(&self) -> &[Formula] {
        &self.entries
    }
}

/// Multiplicity vector of a formula multiset over the table.
pub fn multiset_to_vector(
    ms: &[Formula],
    tbl: &SubformulaTable,
) -> Result<Vec<u32>, UnknownFormula> {
    let mut v = vec![0u32; tbl.d()];
    for f in ms {
        let i = tbl.index_of(f).ok_or_else(|| UnknownFormula {
            formula: f.to_string(),
        })?;
        v[i - 1] += 1;
    }
    Ok(v)
}
