//! The `.st` surface language: parsing, elaboration and printing.
//!
//! A source file declares the message alphabet once and then any number of
//! mutually recursive type equations:
//!
//! ```text
//! alphabet { true, false, z, p }
//!
//! type T1 = !true.!{z,p}.T1 + !false.end?
//! type R2 = !true.(?z.end! + ?p.R2)
//! ```
//!
//! Terms are sums of polarized prefixes. `!x.T` sends `x` and continues as
//! `T`; `?{x,y}.T` receives either label with the same continuation; `end!`
//! and `end?` are the terminated output and input branches; `nil` is the
//! undefined behaviour; a bare name refers to another equation. Recursion is
//! expressed purely through the equations, so every cycle must pass through
//! at least one prefix (an equation like `type X = X` is rejected).
//!
//! [`parse`] produces a [`SourceFile`], [`elaborate`] turns it into a
//! normalized [`SessionSystem`], and [`print`] renders a state back into a
//! self-contained source file. Printing then re-elaborating always yields a
//! state bisimilar to the one printed.

mod elaborate;
mod lexer;
mod parser;
mod printer;

use thiserror::Error;

use crate::system::Polarity;

pub use elaborate::{elaborate, ElabError};
pub use parser::parse;
pub use printer::{print, print_system};

/// A line/column pair, both 1-based, pointing into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Index of a term in its [`SourceFile`]'s arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TermId(usize);

/// One syntactic term. Sub-terms are arena indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Nil,
    End(Polarity),
    Ref(String),
    Prefix {
        polarity: Polarity,
        labels: Vec<String>,
        body: TermId,
    },
    Sum(Vec<TermId>),
}

/// One `type NAME = term` equation.
#[derive(Debug, Clone)]
pub struct TypeDef {
    pub name: String,
    pub pos: Pos,
    pub term: TermId,
}

/// A non-fatal diagnostic attached to an otherwise valid file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub pos: Pos,
    pub message: String,
}

/// A parsed source file: the declared alphabet, the equations, and the term
/// arena they point into.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub alphabet: Vec<String>,
    pub typedefs: Vec<TypeDef>,
    pub warnings: Vec<Warning>,
    terms: Vec<(Term, Pos)>,
}

impl SourceFile {
    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.0].0
    }

    pub fn term_pos(&self, id: TermId) -> Pos {
        self.terms[id.0].1
    }

    pub fn typedef(&self, name: &str) -> Option<&TypeDef> {
        self.typedefs.iter().find(|d| d.name == name)
    }

    pub(crate) fn push_term(&mut self, term: Term, pos: Pos) -> TermId {
        self.terms.push((term, pos));
        TermId(self.terms.len() - 1)
    }
}

/// Errors raised while parsing. All positions are deterministic functions of
/// the input text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: expected {expected}")]
    Syntax { pos: Pos, expected: String },
    #[error("{pos}: duplicate type name `{name}`")]
    DuplicateTypeName { pos: Pos, name: String },
    #[error("{pos}: unknown label `{label}` (not in the declared alphabet)")]
    UnknownLabel { pos: Pos, label: String },
    #[error("{pos}: duplicate alphabet label `{label}`")]
    DuplicateAlphabetLabel { pos: Pos, label: String },
}

/// Names with a fixed syntactic role; not usable as labels or type names.
pub(crate) const KEYWORDS: [&str; 4] = ["alphabet", "type", "nil", "end"];
