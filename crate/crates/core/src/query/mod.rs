//! Query language front end: lexer, parser, type checker and printer.

use std::fmt;

pub mod ast;
pub mod lexer;
pub mod parser;
mod pretty;
pub mod schema;
pub mod typecheck;
pub mod typed;

pub use ast::{Pos, Program};
pub use lexer::{lex, Token, TokenKind};
pub use parser::parse_query;
pub use pretty::pretty_print;
pub use typecheck::typecheck;
pub use typed::TypedProgram;

use crate::engine::Registry;

/// A positioned diagnostic from any front-end phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl QueryError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        QueryError {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn at(pos: Pos, message: impl Into<String>) -> Self {
        Self::new(pos.line, pos.column, message)
    }

    pub fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    /// `file:line:col: error: message`
    pub fn render(&self, file: &str) -> String {
        format!(
            "{file}:{}:{}: error: {}",
            self.line, self.column, self.message
        )
    }
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for QueryError {}

/// Lex, parse and type-check `text` against `registry`.
pub fn compile(text: &str, registry: &Registry) -> Result<TypedProgram, Vec<QueryError>> {
    let tokens = lex(text).map_err(|e| vec![e])?;
    let program = parse_query(&tokens).map_err(|e| vec![e])?;
    typecheck(&program, registry)
}
