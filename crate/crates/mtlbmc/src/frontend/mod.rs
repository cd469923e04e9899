//! Language front end: parsing, static checks, loop unwinding, and
//! normalization into guarded statements with explicit shared-access events.
//!
//! The pipeline is `parse` → `inline_and_unwind` → `normalize` →
//! `program_order`. After `normalize`, every statement carries a guard (its
//! path condition, interned as a chain of branch conditions over locals) and
//! touches shared state through at most one read or write event; this is the
//! form the encoder, the interpreter, and the witness machinery all consume.

pub mod ast;
mod normalize;
mod order;
mod parser;
mod resolve;
mod unwind;

pub use ast::{BinOp, Pos, Program, UnOp};
pub use normalize::{
    normalize, render_nexpr, Access, EventId, EventInfo, GuardId, GuardNode, LocalId, NExpr, NStmt,
    NStmtKind, NormalizedProgram, SharedId, SharedVar, ThreadInstance, GUARD_TRUE,
};
pub use order::{event_labels, program_order, topo_events, ProgramOrder};
pub use unwind::{inline_and_unwind, UnwindConfig};

use thiserror::Error;

/// Errors from parsing, static checks, or unwinding.
#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: `{name}` is not declared")]
    Undeclared { pos: Pos, name: String },
    #[error("{pos}: `{name}` is already declared")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: identifiers starting with `__` are reserved")]
    ReservedName { pos: Pos },
    #[error("{pos}: spawn target `{name}` is not a defined thread")]
    UnknownThread { pos: Pos, name: String },
    #[error("{pos}: `{name}` is a thread handle and cannot be used as a value")]
    HandleAsValue { pos: Pos, name: String },
    #[error("{pos}: handle `{name}` is already bound by an earlier spawn")]
    HandleReused { pos: Pos, name: String },
    #[error("{pos}: handle `{name}` is joined more than once")]
    DoubleJoin { pos: Pos, name: String },
    #[error("{pos}: `{name}` is not a spawned thread handle")]
    JoinOfNonHandle { pos: Pos, name: String },
    #[error("{pos}: join of `{name}` appears before its spawn")]
    JoinBeforeSpawn { pos: Pos, name: String },
    #[error("{pos}: spawn and join must appear unconditionally (not inside if or while)")]
    ConditionalSpawn { pos: Pos },
    #[error("thread spawn recursion involving `{name}` (recursion is not allowed)")]
    RecursionDetected { name: String },
    #[error("unwinding to depth {depth} exceeds the statement budget of {budget}")]
    DepthOverflow { depth: u32, budget: usize },
    #[error("internal front-end invariant violated: {0}")]
    Internal(String),
}

/// Parses source text and resolves all names, returning a checked AST.
pub fn parse(src: &str) -> Result<Program, FrontendError> {
    let program = parser::parse_text(src)?;
    resolve::check(&program)?;
    Ok(program)
}

/// Runs the whole front-end pipeline: parse, check, unwind, normalize.
pub fn compile(src: &str, config: &UnwindConfig) -> Result<NormalizedProgram, FrontendError> {
    let ast = parse(src)?;
    let unwound = inline_and_unwind(&ast, config)?;
    normalize(&unwound)
}
