//! Clause-level SQL scanning: a tokenizer plus a FROM/JOIN/alias scanner that
//! recovers the tables and qualified columns a ground-truth query touches.
//! This is not a SQL parser; it never rejects a statement for dialect syntax.

mod extract;
mod tokenizer;

use thiserror::Error;

pub use extract::{extract_relevant_set, RelevantSet};
pub use tokenizer::{tokenize_sql, SqlToken, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("empty SQL input")]
    Empty,
    #[error("unterminated {what} starting at byte {offset}")]
    Unterminated { what: &'static str, offset: usize },
}
