//! Lexing, parsing, name resolution and thread desugaring.

pub mod ast;
pub mod desugar;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod resolve;
pub mod span;

use span::{SourceMap, Span};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{0}")]
    Lex(#[from] lexer::LexError),
    #[error("{0}")]
    Parse(#[from] parser::ParseError),
}

impl FrontendError {
    pub fn span(&self) -> Span {
        match self {
            FrontendError::Lex(e) => e.span,
            FrontendError::Parse(e) => e.span,
        }
    }
}

/// Tokenizes and parses one file into a fresh source map.
pub fn parse_source(name: &str, text: &str) -> Result<(SourceMap, ast::Program), FrontendError> {
    let mut sm = SourceMap::new();
    let prog = parse_into(&mut sm, name, text)?;
    Ok((sm, prog))
}

/// Adds a file to `sm` and parses it.
pub fn parse_into(sm: &mut SourceMap, name: &str, text: &str) -> Result<ast::Program, FrontendError> {
    let id = sm.add(name, text);
    let toks = lexer::tokenize(id, sm.text(id))?;
    Ok(parser::parse_program(&toks)?)
}
