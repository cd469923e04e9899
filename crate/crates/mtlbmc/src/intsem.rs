//! Bounded integer semantics: two's-complement arithmetic at a configurable
//! bit width.
//!
//! Every value is an `i64` whose meaning is its low `width` bits interpreted
//! as a signed integer; [`truncate`] is the canonicalizer. The interpreter
//! and the circuit encoder both evaluate through this module, so "the same
//! semantics on both paths" is a property of one function rather than a
//! convention between two.

use crate::frontend::{BinOp, UnOp};

/// Sign-extends the low `width` bits of `v`. `width` must be in `1..=64`.
pub fn truncate(v: i64, width: u32) -> i64 {
    debug_assert!((1..=64).contains(&width));
    if width == 64 {
        return v;
    }
    let shift = 64 - width;
    (v << shift) >> shift
}

/// 0 is false, everything else is true.
pub fn truthy(v: i64) -> bool {
    v != 0
}

fn from_bool(b: bool) -> i64 {
    i64::from(b)
}

/// Evaluates a binary operator at the given width. Comparisons are signed
/// over the truncated operands; logical operators test truthiness of both
/// sides (no short-circuit). Results are canonical (`truncate`d).
pub fn eval_binop(op: BinOp, lhs: i64, rhs: i64, width: u32) -> i64 {
    let a = truncate(lhs, width);
    let b = truncate(rhs, width);
    match op {
        BinOp::Add => truncate(a.wrapping_add(b), width),
        BinOp::Sub => truncate(a.wrapping_sub(b), width),
        BinOp::Mul => truncate(a.wrapping_mul(b), width),
        BinOp::Eq => from_bool(a == b),
        BinOp::Ne => from_bool(a != b),
        BinOp::Lt => from_bool(a < b),
        BinOp::Le => from_bool(a <= b),
        BinOp::Gt => from_bool(a > b),
        BinOp::Ge => from_bool(a >= b),
        BinOp::And => from_bool(truthy(a) && truthy(b)),
        BinOp::Or => from_bool(truthy(a) || truthy(b)),
    }
}

/// Evaluates a unary operator at the given width.
pub fn eval_unop(op: UnOp, operand: i64, width: u32) -> i64 {
    let a = truncate(operand, width);
    match op {
        UnOp::Not => from_bool(!truthy(a)),
        UnOp::Neg => truncate(a.wrapping_neg(), width),
    }
}
