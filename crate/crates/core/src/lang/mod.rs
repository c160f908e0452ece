//! The textual constraint language: lexer, parser, printers and a small
//! driver that solves a query and renders the answer.

mod answer;
mod lexer;
mod parser;
mod printer;

use std::fmt;
use std::ops::Range;

use crate::ctr::Ctr;
use crate::engine::{KLimit, VarId};

pub use answer::{print_answer, run, visible_vars, Answer, Outcome, RunError, RunOptions, Show};
pub use lexer::{tokenize, TokKind, Token};
pub use parser::{parse, parse_with_names};
pub use printer::{format_domain, print_ctr, print_expr};

/// A parsed query. Variable `i` of the body is named `names[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub k: KLimit,
    pub body: Ctr,
    pub names: Vec<String>,
}

impl Query {
    pub fn var(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(VarId::from_index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Range<usize>,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(span: Range<usize>, message: impl Into<String>) -> Self {
        ParseError { span, message: message.into(), expected: Vec::new() }
    }

    pub fn expected(span: Range<usize>, expected: &[&str], found: &TokKind) -> Self {
        ParseError {
            span,
            message: format!("unexpected {}", found.describe()),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// 1-based line and column of the error start.
    pub fn line_col(&self, src: &str) -> (usize, usize) {
        let upto = &src[..self.span.start.min(src.len())];
        let line = upto.matches('\n').count() + 1;
        let col = upto.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }

    /// Multi-line diagnostic with the offending line and a caret marker.
    pub fn render(&self, src: &str, file: &str) -> String {
        let (line, col) = self.line_col(src);
        let text = src.lines().nth(line - 1).unwrap_or("");
        let width = src.get(self.span.clone()).map_or(1, |s| s.chars().count().max(1));
        let width = width.min(text.chars().count().saturating_sub(col - 1).max(1));
        format!("{file}:{line}:{col}: {self}\n  {text}\n  {}{}", " ".repeat(col - 1), "^".repeat(width))
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)?;
        if !self.expected.is_empty() {
            write!(f, ", expected one of: {}", self.expected.join(" "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
