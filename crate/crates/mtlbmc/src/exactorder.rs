//! Exact feasibility decision for event-order graphs.
//!
//! The closure rules in [`crate::eog`] are sound but incomplete: when they
//! derive no contradiction the graph may still admit no execution. This
//! module decides the question exactly by asking a private SAT instance for
//! a total order of the events that respects program order and places every
//! read's writer as the latest preceding same-variable write.
//!
//! Every guard and selector literal of the graph is mapped to a proxy
//! assumption, so an unsatisfiable instance yields a *reason*: a subset of
//! those literals whose conjunction already forbids any order. Negating the
//! reason gives a refinement clause exactly like the ones the closure
//! produces, just potentially coarser.

use std::collections::HashMap;

use satcore::{Lit, SolveResult, Solver};
use thiserror::Error;

use crate::encoder::bitblast::{decode_unsigned, Bit, Blaster};
use crate::eog::{Eog, EogError};
use crate::frontend::Access;

/// Failure of the exact check.
#[derive(Debug, Error)]
pub enum ExactError {
    #[error(transparent)]
    Invalid(#[from] EogError),
    /// The instance was unsatisfiable without any assumptions. Program order
    /// alone is always realizable (it is acyclic), so this indicates a bug.
    #[error("order requirements unsatisfiable independent of any guard or selector")]
    EmptyCore,
}

/// Outcome of the exact check.
#[derive(Clone, Debug)]
pub enum ExactVerdict {
    /// The graph is realizable; `order` lists the events in one witnessing
    /// schedule.
    Feasible { order: Vec<usize> },
    /// No order exists. `reason` is the subset of guard/selector literals
    /// (sorted, deduplicated) that already forces the contradiction.
    Infeasible { reason: Vec<Lit> },
}

/// Negates a reason into a refinement clause.
pub fn blocking_clause(reason: &[Lit]) -> Vec<Lit> {
    reason.iter().map(|&l| !l).collect()
}

/// Decides whether the graph is realizable by any total order.
pub fn validate_exact(eog: &Eog) -> Result<ExactVerdict, ExactError> {
    eog.validate()?;
    let n = eog.events.len();
    if n == 0 {
        return Ok(ExactVerdict::Feasible { order: Vec::new() });
    }

    let mut bl = Blaster::new(0);
    let clock_bits = usize::BITS - (n - 1).max(1).leading_zeros();
    let clocks: Vec<Vec<Bit>> = (0..n).map(|_| bl.fresh_vec(clock_bits)).collect();

    // One proxy variable per distinct external variable; assumptions carry
    // the external literal's sign.
    let mut proxy_of: HashMap<u32, Lit> = HashMap::new();
    let mut external_of: HashMap<u32, Lit> = HashMap::new();
    let mut assumptions: Vec<Lit> = Vec::new();
    let mut proxy = |bl: &mut Blaster, l: Lit| -> Lit {
        let base = *proxy_of.entry(l.var().index()).or_insert_with(|| {
            let Bit::Wire(p) = bl.fresh() else {
                unreachable!()
            };
            external_of.insert(p.var().index(), Lit::positive(l.var()));
            p
        });
        if l.is_positive() {
            base
        } else {
            !base
        }
    };

    let guard_proxy: Vec<Option<Lit>> = eog
        .events
        .iter()
        .map(|ev| ev.guard.map(|g| proxy(&mut bl, g)))
        .collect();
    for g in guard_proxy.iter().flatten() {
        if !assumptions.contains(g) {
            assumptions.push(*g);
        }
    }

    // Program order, gated by the endpoint guards so the core can name them.
    for &(a, b) in &eog.po {
        let lt = bl.lt_unsigned(&clocks[a], &clocks[b]);
        let mut clause = vec![lt];
        if let Some(g) = guard_proxy[a] {
            clause.push(Bit::Wire(!g));
        }
        if let Some(g) = guard_proxy[b] {
            clause.push(Bit::Wire(!g));
        }
        bl.clause(&clause);
    }

    // Each link: writer first, and no executed same-variable write between.
    for edge in &eog.rf {
        let s = proxy(&mut bl, edge.sel);
        if !assumptions.contains(&s) {
            assumptions.push(s);
        }
        let (w, r) = (edge.writer, edge.reader);
        let lt = bl.lt_unsigned(&clocks[w], &clocks[r]);
        bl.clause(&[Bit::Wire(!s), lt]);
        for o in 0..n {
            if o == w
                || eog.events[o].access != Access::Write
                || eog.events[o].var != eog.events[r].var
            {
                continue;
            }
            let before_writer = bl.lt_unsigned(&clocks[o], &clocks[w]);
            let after_reader = bl.lt_unsigned(&clocks[r], &clocks[o]);
            let mut clause = vec![Bit::Wire(!s), before_writer, after_reader];
            if let Some(g) = guard_proxy[o] {
                clause.push(Bit::Wire(!g));
            }
            bl.clause(&clause);
        }
    }

    let mut solver = Solver::new();
    for _ in 0..bl.num_vars() {
        solver.new_var();
    }
    for c in bl.take_clauses() {
        solver.add_clause(&c);
    }
    match solver.solve(&assumptions) {
        SolveResult::Sat(model) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&e| (decode_unsigned(&clocks[e], &model), e));
            Ok(ExactVerdict::Feasible { order })
        }
        SolveResult::Unsat(core) => {
            if core.is_empty() {
                return Err(ExactError::EmptyCore);
            }
            let mut reason: Vec<Lit> = core
                .iter()
                .map(|p| {
                    let ext = external_of[&p.var().index()];
                    if p.is_positive() {
                        ext
                    } else {
                        !ext
                    }
                })
                .collect();
            reason.sort_by_key(|l| l.code());
            reason.dedup();
            Ok(ExactVerdict::Infeasible { reason })
        }
    }
}
