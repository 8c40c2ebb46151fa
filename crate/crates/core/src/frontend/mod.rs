//! Tokenizer, parser and pretty-printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod printer;

pub use lexer::Span;
