//! DIMACS CNF reading and writing.
//!
//! The parser accepts the usual liberal format: `c` comment lines, one
//! `p cnf <vars> <clauses>` header, and whitespace-separated literal groups
//! terminated by `0` (clauses may span lines). The writer emits one clause
//! per line. This is the escape hatch for cross-checking the bundled solver
//! against external ones.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::Lit;

/// Errors raised while reading a DIMACS file.
#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected 'p cnf <vars> <clauses>' header, got {found:?}")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: token {token:?} is not a literal")]
    BadToken { line: usize, token: String },
    #[error("line {line}: literal {lit} exceeds declared variable count {vars}")]
    LitOutOfRange { line: usize, lit: i32, vars: u32 },
    #[error("unterminated clause at end of input")]
    UnterminatedClause,
    #[error("missing 'p cnf' header")]
    MissingHeader,
}

/// A parsed CNF instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

/// Reads a CNF instance from DIMACS text.
pub fn read<R: BufRead>(reader: R) -> Result<Cnf, DimacsError> {
    let mut num_vars: Option<u32> = None;
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    let mut current: Vec<Lit> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('p') {
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            let parsed = if parts.len() == 4 && parts[0] == "p" && parts[1] == "cnf" {
                parts[2]
                    .parse::<u32>()
                    .ok()
                    .zip(parts[3].parse::<u64>().ok())
            } else {
                None
            };
            match parsed {
                Some((v, _)) => num_vars = Some(v),
                None => {
                    return Err(DimacsError::BadHeader {
                        line: lineno,
                        found: trimmed.to_string(),
                    })
                }
            }
            continue;
        }
        let vars = num_vars.ok_or(DimacsError::MissingHeader)?;
        for token in trimmed.split_whitespace() {
            let n: i32 = token.parse().map_err(|_| DimacsError::BadToken {
                line: lineno,
                token: token.to_string(),
            })?;
            if n == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                if n.unsigned_abs() > vars {
                    return Err(DimacsError::LitOutOfRange {
                        line: lineno,
                        lit: n,
                        vars,
                    });
                }
                current.push(Lit::from_dimacs(n));
            }
        }
    }
    if !current.is_empty() {
        return Err(DimacsError::UnterminatedClause);
    }
    Ok(Cnf {
        num_vars: num_vars.ok_or(DimacsError::MissingHeader)?,
        clauses,
    })
}

/// Writes a CNF instance as DIMACS text.
pub fn write<W: Write>(writer: &mut W, num_vars: u32, clauses: &[Vec<Lit>]) -> std::io::Result<()> {
    writeln!(writer, "p cnf {} {}", num_vars, clauses.len())?;
    for clause in clauses {
        for lit in clause {
            write!(writer, "{} ", lit.to_dimacs())?;
        }
        writeln!(writer, "0")?;
    }
    Ok(())
}
