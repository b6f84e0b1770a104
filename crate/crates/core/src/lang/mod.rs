//! A small Lucid-like language of recursive stream equations.
//!
//! ```text
//! -- the Fibonacci sequence
//! fib = 0 fby (fib + (1 fby wait(fib)))
//! ```
//!
//! Programs are parsed ([`parse`]), checked for causality
//! ([`check_causality`]) and elaborated into IR terms ([`elaborate`]).

mod ast;
mod causality;
mod elaborate;
mod parser;

pub use ast::{BinOp, Def, Expr, ExprKind, InputDecl, Pos, Program, Unif};
pub use causality::{check_causality, Checked, Component, Guard, Occurrence};
pub use elaborate::{elaborate, Elaborated};
pub use parser::{parse, parse_expr, SyntaxError};

use crate::ir::{self, Signature, TypeError};
use crate::stream::Stream;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("causality error at {pos}: `{name}` is used in `{def}` without a delay, closing an instantaneous cycle")]
    Causality { name: String, def: String, pos: Pos },
    #[error("unknown identifier `{name}` at {pos}")]
    Unbound { name: String, pos: Pos },
    #[error("`{name}` is defined twice (second definition at {pos})")]
    Duplicate { name: String, pos: Pos },
    #[error("type error at {pos}: {message}")]
    Type { pos: Pos, message: String },
    #[error("program has no definitions")]
    NoMain,
    #[error("no definition named `{0}`")]
    UnknownMain(String),
    #[error("elaboration produced an ill-typed term: {0}")]
    Ir(#[from] TypeError),
    #[error("internal elaboration error: {0}")]
    Internal(String),
}

impl LangError {
    pub fn is_syntax(&self) -> bool {
        matches!(self, LangError::Syntax(_))
    }
}

/// A program elaborated and compiled to a stream.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub program: Program,
    pub elaborated: Elaborated,
    pub stream: Stream,
}

/// Parse, check, elaborate and compile in one go.
pub fn compile_source(src: &str, main: Option<&str>, sig: &Signature) -> Result<Compiled, LangError> {
    let program = parse(src)?;
    let checked = check_causality(&program)?;
    let elaborated = elaborate(&checked, main)?;
    let stream = ir::compile(&elaborated.term, sig)?;
    Ok(Compiled {
        program,
        elaborated,
        stream,
    })
}

#[cfg(test)]
mod tests;
