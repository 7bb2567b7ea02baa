//! Lexer, recursive-descent parser and printer for the query language.

pub mod ast;
pub mod lexer;
mod parse;
mod print;

pub use ast::*;
pub use lexer::{tokenize, Keyword, Token, TokenKind};
pub use parse::{parse, parse_pattern, parse_query, split_statements, MAX_NESTING};

#[cfg(test)]
pub(crate) mod tests;
