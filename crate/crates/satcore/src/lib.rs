//! A small incremental CDCL SAT solver.
//!
//! The solver is deliberately conventional: two-watched-literal propagation,
//! first-UIP conflict analysis with basic clause minimization, VSIDS-style
//! activity ordering with phase saving, Luby restarts, and activity-based
//! deletion of learnt clauses. Clauses may be added between `solve` calls and
//! solving under assumptions yields a final-conflict core over those
//! assumptions. Runs are deterministic for a fixed [`SolverConfig`].
//!
//! DIMACS import/export lives in [`dimacs`] as an escape hatch for
//! differential testing against external solvers.

mod solver;

pub mod dimacs;

pub use solver::{Model, SolveResult, Solver, SolverConfig};

/// A boolean variable, identified by a dense index starting at 0.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Var(u32);

impl Var {
    /// Builds a variable from its dense index.
    pub fn from_index(index: u32) -> Var {
        Var(index)
    }

    /// The dense index of this variable.
    pub fn index(self) -> u32 {
        self.0
    }
}

/// A literal: a variable together with a polarity.
///
/// Encoded as `2 * var + sign` so literals index watch lists directly.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Lit(u32);

impl Lit {
    /// The positive literal of `v`.
    pub fn positive(v: Var) -> Lit {
        Lit(v.0 << 1)
    }

    /// The negative literal of `v`.
    pub fn negative(v: Var) -> Lit {
        Lit(v.0 << 1 | 1)
    }

    /// Builds a literal with an explicit polarity (`true` = positive).
    pub fn new(v: Var, positive: bool) -> Lit {
        Lit(v.0 << 1 | (!positive as u32))
    }

    /// The underlying variable.
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    /// Whether this is the positive literal of its variable.
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Dense code of the literal, usable as an array index.
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Parses a nonzero DIMACS integer (`3` → var 2 positive, `-3` → negative).
    pub fn from_dimacs(n: i32) -> Lit {
        debug_assert!(n != 0);
        Lit::new(Var((n.unsigned_abs()) - 1), n > 0)
    }

    /// Renders the literal as a DIMACS integer.
    pub fn to_dimacs(self) -> i32 {
        let v = (self.0 >> 1) as i32 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl std::fmt::Display for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}
