//! The rule language: knowledge-base model, text format, validation and the
//! interactive rule editor.
//!
//! A knowledge base is a partitioned rule base. Each rule joins a conjunction
//! of attribute-value premises to one or more disjunctive conclusions over a
//! single verifiable attribute, weighted either by explicit masses or by 1-10
//! expert rankings plus a relevance score.

mod editor;
mod model;
mod parse;
mod serialize;
pub mod sexp;
mod validate;

use std::fmt;

use thiserror::Error;

pub use editor::{editor_session, EditorError};
pub use model::{
    AttributeDecl, AttributeKind, Conclusion, EvidencePattern, KnowledgeBase, Rule, RuleBody, DEFAULT_EXIT_THRESHOLD,
};
pub use parse::parse_kb;
pub use serialize::serialize_kb;
pub use sexp::Pos;
pub(crate) use validate::partition_cycle;
pub use validate::{validate_kb, Diagnostic, Severity};

use crate::evidence::Belief;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownAttribute,
    UnknownValue,
    MixedConclusion,
    DuplicateRule,
    DuplicateDeclaration,
    UndeclaredPartition,
    InvalidRule,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, at: Pos, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            line: at.line,
            column: at.column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("a rule premise needs at least one piece of evidence")]
pub struct EmptyLhs;

/// Belief in a conjunctive premise: the weakest of its parts.
pub fn lhs_belief(beliefs: &[Belief]) -> Result<Belief, EmptyLhs> {
    beliefs
        .iter()
        .copied()
        .reduce(|a, b| if b.value() < a.value() { b } else { a })
        .ok_or(EmptyLhs)
}
