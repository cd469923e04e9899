//! Abstract syntax for the input language.

/// A source position (1-based line and column).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A whole program: shared declarations, thread definitions, and `main`.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub shared: Vec<SharedDecl>,
    pub threads: Vec<ThreadDef>,
    pub main: Block,
}

/// `shared int NAME = INIT;` (INIT defaults to 0).
#[derive(Clone, Debug, PartialEq)]
pub struct SharedDecl {
    pub name: String,
    pub init: i64,
    pub pos: Pos,
}

/// `thread NAME { ... }`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreadDef {
    pub name: String,
    pub body: Block,
    pub pos: Pos,
}

/// A brace-delimited statement sequence.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

/// A statement with its source position.
#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    /// `NAME = EXPR;` where NAME is shared or local.
    Assign { name: String, value: Expr },
    /// `local int NAME;` or `local int NAME = EXPR;`.
    Local { name: String, init: Option<Expr> },
    /// `if (EXPR) BLOCK` with optional `else BLOCK`.
    If {
        cond: Expr,
        then_branch: Block,
        else_branch: Option<Block>,
    },
    /// `while (EXPR) BLOCK`.
    While { cond: Expr, body: Block },
    /// `assert(EXPR);`.
    Assert { cond: Expr },
    /// `assume(EXPR);`.
    Assume { cond: Expr },
    /// `HANDLE = spawn THREAD;`.
    Spawn { handle: String, thread: String },
    /// `join HANDLE;`.
    Join { handle: String },
}

/// An expression over signed bounded integers. Comparisons and logical
/// operators yield 0 or 1; any nonzero value is true in a condition.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Var {
        name: String,
        pos: Pos,
    },
    /// `nondet()`: an unconstrained value, fresh per occurrence.
    Nondet,
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum UnOp {
    /// Logical negation: `!e` is 1 if `e` is 0, else 0.
    Not,
    /// Arithmetic negation.
    Neg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// Logical conjunction. Both operands are evaluated (no short-circuit).
    And,
    /// Logical disjunction. Both operands are evaluated (no short-circuit).
    Or,
}

impl std::fmt::Display for UnOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnOp::Not => "!",
            UnOp::Neg => "-",
        })
    }
}

impl std::fmt::Display for BinOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        })
    }
}
