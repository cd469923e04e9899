//! Event-order graphs and the derivation rules that refute infeasible ones.
//!
//! An event-order graph (EOG) captures one candidate counterexample: the
//! shared-memory events the model executes, program order between them, and
//! a reads-from edge for every read. The graph is *feasible* if some total
//! order of the events respects program order and lets every read observe
//! its writer with no same-variable write in between.
//!
//! Feasibility is refuted by closing the graph under three rules over a
//! derived strict order `≺`:
//!
//! 1. `a ≺ b` and `b ≺ c` imply `a ≺ c` (transitivity);
//! 2. if `w` is read by `r`, any other same-variable write ordered before
//!    `r` must be before `w` (it may not intervene);
//! 3. if `w` is read by `r`, any other same-variable write ordered after
//!    `w` must be after `r` (same).
//!
//! If closure makes some event precede itself the graph is infeasible.
//! Every derived ordering carries *reasons*: minimal sets of literals (guard
//! and reads-from selector variables) whose truth forced it. Negating a
//! reason of a reflexive ordering yields a clause that is sound for every
//! execution, yet rules out the current candidate — the refinement step.
//! Closure is incomplete: a graph it cannot refute is not necessarily
//! feasible (see `exactorder` for the decision procedure).

pub mod fuzz;
pub mod json;

use std::collections::VecDeque;

use thiserror::Error;

use satcore::Lit;

use crate::bits::BitMat;
use crate::frontend::Access;

/// One shared-memory event of a candidate execution.
#[derive(Clone, Debug)]
pub struct EogEvent {
    /// Display label, e.g. `x2`.
    pub label: String,
    /// Shared variable index.
    pub var: usize,
    pub access: Access,
    /// Owning thread instance (diagnostics only).
    pub thread: usize,
    /// Literal that is true iff the event executes; `None` when its guard is
    /// constant true. Reasons collect these.
    pub guard: Option<Lit>,
}

/// `reader` observes the value written by `writer`; `sel` is the selector
/// literal that was true in the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RfEdge {
    pub writer: usize,
    pub reader: usize,
    pub sel: Lit,
}

/// A candidate execution's events and orderings.
///
/// `po` should be the full (transitive) program order restricted to these
/// events: rule 1 would recover missing transitive pairs, but seeding them
/// directly gives each pair its own two-guard reason instead of a chain's.
#[derive(Clone, Debug, Default)]
pub struct Eog {
    pub events: Vec<EogEvent>,
    pub po: Vec<(usize, usize)>,
    pub rf: Vec<RfEdge>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EogError {
    #[error("event index {0} out of range")]
    EventOutOfRange(usize),
    #[error("program order relates event {0} to itself")]
    ReflexivePo(usize),
    #[error("program order contains a cycle through event {0}")]
    CyclicPo(usize),
    #[error("reads-from edge {writer} -> {reader} mixes variables or access kinds")]
    MalformedRf { writer: usize, reader: usize },
    #[error("reader {0} has more than one reads-from edge")]
    MultipleRf(usize),
}

impl Eog {
    /// Structural checks: indices in range, program order a strict partial
    /// order, each reads-from edge a same-variable write-to-read pair, and
    /// at most one edge per reader.
    pub fn validate(&self) -> Result<(), EogError> {
        let n = self.events.len();
        let mut po = BitMat::new(n);
        for &(a, b) in &self.po {
            if a >= n {
                return Err(EogError::EventOutOfRange(a));
            }
            if b >= n {
                return Err(EogError::EventOutOfRange(b));
            }
            if a == b {
                return Err(EogError::ReflexivePo(a));
            }
            po.set(a, b);
        }
        po.close_transitively();
        if let Some(e) = po.reflexive_entry() {
            return Err(EogError::CyclicPo(e));
        }
        let mut seen_reader = vec![false; n];
        for edge in &self.rf {
            if edge.writer >= n {
                return Err(EogError::EventOutOfRange(edge.writer));
            }
            if edge.reader >= n {
                return Err(EogError::EventOutOfRange(edge.reader));
            }
            let w = &self.events[edge.writer];
            let r = &self.events[edge.reader];
            if w.access != Access::Write || r.access != Access::Read || w.var != r.var {
                return Err(EogError::MalformedRf {
                    writer: edge.writer,
                    reader: edge.reader,
                });
            }
            if seen_reader[edge.reader] {
                return Err(EogError::MultipleRf(edge.reader));
            }
            seen_reader[edge.reader] = true;
        }
        Ok(())
    }

    /// Closes the graph under the derivation rules.
    pub fn close(&self, config: &ClosureConfig) -> Closure {
        Closure::build(self, config)
    }
}

/// Order in which changed pairs are reprocessed. The verdict is the same
/// either way; exposing the choice lets tests check exactly that.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum WorklistPolicy {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Clone, Debug)]
pub struct ClosureConfig {
    /// Most reasons kept per ordered pair; smallest sets win.
    pub max_reasons_per_pair: usize,
    pub policy: WorklistPolicy,
}

impl Default for ClosureConfig {
    fn default() -> ClosureConfig {
        ClosureConfig {
            max_reasons_per_pair: 32,
            policy: WorklistPolicy::Fifo,
        }
    }
}

/// A set of literals whose joint truth forces an ordering; sorted by code.
pub type Reason = Vec<Lit>;

/// Counters from one closure run.
#[derive(Clone, Copy, Debug, Default)]
pub struct ClosureStats {
    pub pairs: usize,
    pub rule_firings: u64,
}

/// The derived order with reasons, after closure.
pub struct Closure {
    n: usize,
    /// Antichain of minimal reasons per pair, indexed `a * n + b`; an empty
    /// vector means the pair is underived.
    reasons: Vec<Vec<Reason>>,
    /// `after` row `a` = all `b` with `a ≺ b`; `before` row `b` = all `a`.
    after: BitMat,
    before: BitMat,
    /// Events `e` with `e ≺ e`.
    reflexive: Vec<usize>,
    stats: ClosureStats,
}

impl Closure {
    /// True iff closure proved the graph infeasible.
    pub fn is_infeasible(&self) -> bool {
        !self.reflexive.is_empty()
    }

    /// True iff `a ≺ b` was derived.
    pub fn ordered(&self, a: usize, b: usize) -> bool {
        !self.reasons[a * self.n + b].is_empty()
    }

    /// Minimal reasons derived for `a ≺ b` (empty if underived).
    pub fn reasons(&self, a: usize, b: usize) -> &[Reason] {
        &self.reasons[a * self.n + b]
    }

    pub fn stats(&self) -> ClosureStats {
        self.stats
    }

    /// Blocking clauses refuting this graph: one per distinct minimal reason
    /// of a reflexive ordering, each the negation of its literals. Empty iff
    /// the graph was not proved infeasible.
    pub fn refutation_clauses(&self) -> Vec<Vec<Lit>> {
        let mut cores: Vec<Reason> = Vec::new();
        for &e in &self.reflexive {
            for reason in &self.reasons[e * self.n + e] {
                if cores.iter().any(|kept| is_subset(kept, reason)) {
                    continue;
                }
                cores.retain(|kept| !is_subset(reason, kept));
                cores.push(reason.clone());
            }
        }
        cores.sort_by(compare_reasons);
        cores
            .iter()
            .map(|reason| reason.iter().map(|&l| !l).collect())
            .collect()
    }

    fn build(eog: &Eog, config: &ClosureConfig) -> Closure {
        let n = eog.events.len();
        let mut closure = Closure {
            n,
            reasons: vec![Vec::new(); n * n],
            after: BitMat::new(n),
            before: BitMat::new(n),
            reflexive: Vec::new(),
            stats: ClosureStats::default(),
        };
        let mut work = Worklist::new(n, config.policy);

        // Seed program order: the pair holds whenever both events execute.
        for &(a, b) in &eog.po {
            let mut reason: Reason = Vec::new();
            if let Some(g) = eog.events[a].guard {
                reason.push(g);
            }
            if let Some(g) = eog.events[b].guard {
                reason.push(g);
            }
            normalize_reason(&mut reason);
            if closure.insert(a, b, reason, config) {
                work.push(a, b);
            }
        }
        // Seed reads-from: the selector implies both guards, so it alone is
        // the reason.
        for edge in &eog.rf {
            if closure.insert(edge.writer, edge.reader, vec![edge.sel], config) {
                work.push(edge.writer, edge.reader);
            }
        }

        // Index rf edges by endpoint for rules 2 and 3.
        let mut rf_by_reader: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut rf_by_writer: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, edge) in eog.rf.iter().enumerate() {
            rf_by_reader[edge.reader].push(i);
            rf_by_writer[edge.writer].push(i);
        }

        while let Some((a, b)) = work.pop() {
            if a == b {
                // Reasons of a refutation need no further consequences.
                continue;
            }
            let premise = closure.reasons[a * n + b].clone();

            // Rule 1, as left premise: (a ≺ b) ∧ (b ≺ c) ⇒ a ≺ c.
            for c in closure.after.row_iter(b).collect::<Vec<_>>() {
                closure.stats.rule_firings += 1;
                closure.derive_product((a, c), &premise, (b, c), config, &mut work);
            }
            // Rule 1, as right premise: (c ≺ a) ∧ (a ≺ b) ⇒ c ≺ b.
            for c in closure.before.row_iter(a).collect::<Vec<_>>() {
                closure.stats.rule_firings += 1;
                closure.derive_product((c, b), &premise, (c, a), config, &mut work);
            }
            // Rule 2: w ◁ r (sel λ) ∧ a ≺ r, a another same-var write ⇒ a ≺ w.
            if eog.events[a].access == Access::Write {
                for &ei in &rf_by_reader[b] {
                    let edge = eog.rf[ei];
                    if edge.writer != a && eog.events[a].var == eog.events[b].var {
                        closure.stats.rule_firings += 1;
                        closure.derive_with_sel(
                            a,
                            edge.writer,
                            &premise,
                            edge.sel,
                            config,
                            &mut work,
                        );
                    }
                }
            }
            // Rule 3: w ◁ r (sel λ) ∧ w ≺ b, b another same-var write ⇒ r ≺ b.
            if eog.events[b].access == Access::Write {
                for &ei in &rf_by_writer[a] {
                    let edge = eog.rf[ei];
                    if eog.events[b].var == eog.events[a].var {
                        closure.stats.rule_firings += 1;
                        closure.derive_with_sel(
                            edge.reader,
                            b,
                            &premise,
                            edge.sel,
                            config,
                            &mut work,
                        );
                    }
                }
            }
        }

        closure.reflexive = (0..n).filter(|&e| closure.ordered(e, e)).collect();
        closure.stats.pairs = (0..n * n)
            .filter(|&p| !closure.reasons[p].is_empty())
            .count();
        closure
    }

    /// Derives `conclusion` from the cross product of `premise` and the
    /// current reasons of the `second` pair.
    fn derive_product(
        &mut self,
        conclusion: (usize, usize),
        premise: &[Reason],
        second: (usize, usize),
        config: &ClosureConfig,
        work: &mut Worklist,
    ) {
        let (u, v) = conclusion;
        let (p2a, p2b) = second;
        let other = self.reasons[p2a * self.n + p2b].clone();
        let mut changed = false;
        for r1 in premise {
            for r2 in &other {
                let mut union = r1.clone();
                union.extend_from_slice(r2);
                normalize_reason(&mut union);
                changed |= self.insert(u, v, union, config);
            }
        }
        if changed {
            work.push(u, v);
        }
    }

    /// Derives `(u, v)` from each premise reason extended with a selector.
    fn derive_with_sel(
        &mut self,
        u: usize,
        v: usize,
        premise: &[Reason],
        sel: Lit,
        config: &ClosureConfig,
        work: &mut Worklist,
    ) {
        let mut changed = false;
        for r in premise {
            let mut union = r.clone();
            union.push(sel);
            normalize_reason(&mut union);
            changed |= self.insert(u, v, union, config);
        }
        if changed {
            work.push(u, v);
        }
    }

    /// Inserts a reason into a pair's antichain. Returns true if the
    /// antichain changed.
    fn insert(&mut self, a: usize, b: usize, reason: Reason, config: &ClosureConfig) -> bool {
        let antichain = &mut self.reasons[a * self.n + b];
        if antichain.iter().any(|kept| is_subset(kept, &reason)) {
            return false;
        }
        if antichain.len() >= config.max_reasons_per_pair {
            // Full and the candidate sorts after the current worst: drop it.
            if let Some(last) = antichain.last() {
                if compare_reasons(last, &reason) != std::cmp::Ordering::Greater {
                    return false;
                }
            }
        }
        antichain.retain(|kept| !is_subset(&reason, kept));
        let pos = antichain
            .binary_search_by(|kept| compare_reasons(kept, &reason))
            .unwrap_or_else(|p| p);
        antichain.insert(pos, reason);
        antichain.truncate(config.max_reasons_per_pair);
        self.after.set(a, b);
        self.before.set(b, a);
        true
    }
}

/// Sorts and dedupes a reason in place.
fn normalize_reason(reason: &mut Reason) {
    reason.sort_by_key(|l| l.code());
    reason.dedup();
}

/// Subset test over sorted literal sets.
fn is_subset(small: &[Lit], large: &[Lit]) -> bool {
    if small.len() > large.len() {
        return false;
    }
    let mut it = large.iter();
    'outer: for l in small {
        for m in it.by_ref() {
            match m.code().cmp(&l.code()) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

/// Cheapest first: fewer literals, then lexicographic by code.
fn compare_reasons(a: &Reason, b: &Reason) -> std::cmp::Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| a.iter().map(|l| l.code()).cmp(b.iter().map(|l| l.code())))
}

struct Worklist {
    queue: VecDeque<(usize, usize)>,
    queued: Vec<bool>,
    n: usize,
    policy: WorklistPolicy,
}

impl Worklist {
    fn new(n: usize, policy: WorklistPolicy) -> Worklist {
        Worklist {
            queue: VecDeque::new(),
            queued: vec![false; n * n],
            n,
            policy,
        }
    }

    fn push(&mut self, a: usize, b: usize) {
        if !self.queued[a * self.n + b] {
            self.queued[a * self.n + b] = true;
            self.queue.push_back((a, b));
        }
    }

    fn pop(&mut self) -> Option<(usize, usize)> {
        let pair = match self.policy {
            WorklistPolicy::Fifo => self.queue.pop_front(),
            WorklistPolicy::Lifo => self.queue.pop_back(),
        }?;
        self.queued[pair.0 * self.n + pair.1] = false;
        Some(pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use satcore::Var;

    fn lit(i: u32) -> Lit {
        Lit::positive(Var::from_index(i))
    }

    fn event(label: &str, var: usize, access: Access) -> EogEvent {
        EogEvent {
            label: label.to_string(),
            var,
            access,
            thread: 0,
            guard: None,
        }
    }

    fn close(eog: &Eog) -> Closure {
        eog.validate().unwrap();
        eog.close(&ClosureConfig::default())
    }

    #[test]
    fn validate_rejects_malformed_graphs() {
        let mut eog = Eog {
            events: vec![event("w", 0, Access::Write), event("r", 0, Access::Read)],
            po: vec![(0, 1), (1, 0)],
            rf: vec![],
        };
        assert!(matches!(eog.validate(), Err(EogError::CyclicPo(_))));
        eog.po = vec![(0, 1)];
        eog.rf = vec![RfEdge {
            writer: 1,
            reader: 0,
            sel: lit(0),
        }];
        assert!(matches!(eog.validate(), Err(EogError::MalformedRf { .. })));
    }

    #[test]
    fn rule_two_orders_other_write_before_writer() {
        // w1 ◁ r (sel λ), w2 ≺ r in program order ⇒ w2 ≺ w1 with reason {λ}.
        let eog = Eog {
            events: vec![
                event("w1", 0, Access::Write),
                event("r", 0, Access::Read),
                event("w2", 0, Access::Write),
            ],
            po: vec![(2, 1)],
            rf: vec![RfEdge {
                writer: 0,
                reader: 1,
                sel: lit(7),
            }],
        };
        let c = close(&eog);
        assert!(!c.is_infeasible());
        assert!(c.ordered(2, 0));
        assert_eq!(c.reasons(2, 0), &[vec![lit(7)]]);
    }

    #[test]
    fn rule_three_orders_other_write_after_reader() {
        // w1 ◁ r (sel λ), w1 ≺ w2 ⇒ r ≺ w2 with reason {λ}.
        let eog = Eog {
            events: vec![
                event("w1", 0, Access::Write),
                event("r", 0, Access::Read),
                event("w2", 0, Access::Write),
            ],
            po: vec![(0, 2)],
            rf: vec![RfEdge {
                writer: 0,
                reader: 1,
                sel: lit(3),
            }],
        };
        let c = close(&eog);
        assert!(!c.is_infeasible());
        assert!(c.ordered(1, 2));
        assert_eq!(c.reasons(1, 2), &[vec![lit(3)]]);
    }

    #[test]
    fn read_before_its_writer_is_infeasible() {
        let eog = Eog {
            events: vec![event("w", 0, Access::Write), event("r", 0, Access::Read)],
            po: vec![(1, 0)],
            rf: vec![RfEdge {
                writer: 0,
                reader: 1,
                sel: lit(2),
            }],
        };
        let c = close(&eog);
        assert!(c.is_infeasible());
        // The cycle needs the selector; program order is unconditional here.
        assert_eq!(c.refutation_clauses(), vec![vec![!lit(2)]]);
    }

    #[test]
    fn crossing_reads_are_infeasible_with_both_selectors() {
        // Thread A: read y, then write x. Thread B: read x, then write y.
        // Each read observes the other thread's *later* write — impossible
        // in any interleaving; transitivity alone cycles the writes.
        let eog = Eog {
            events: vec![
                event("ry", 1, Access::Read),
                event("wx", 0, Access::Write),
                event("rx", 0, Access::Read),
                event("wy", 1, Access::Write),
            ],
            po: vec![(0, 1), (2, 3)],
            rf: vec![
                RfEdge {
                    writer: 1,
                    reader: 2,
                    sel: lit(10),
                },
                RfEdge {
                    writer: 3,
                    reader: 0,
                    sel: lit(11),
                },
            ],
        };
        let c = close(&eog);
        assert!(c.is_infeasible());
        let kappa = c.refutation_clauses();
        assert_eq!(kappa, vec![vec![!lit(10), !lit(11)]]);
    }

    #[test]
    fn guards_enter_reasons() {
        // Same crossing shape, but wy executes under a guard literal g: the
        // cycle routes through the program-order pair (rx, wy), whose reason
        // includes g, so g must appear in the refutation.
        let mut guarded = event("wy", 1, Access::Write);
        guarded.guard = Some(lit(5));
        let eog = Eog {
            events: vec![
                event("ry", 1, Access::Read),
                event("wx", 0, Access::Write),
                event("rx", 0, Access::Read),
                guarded,
            ],
            po: vec![(0, 1), (2, 3)],
            rf: vec![
                RfEdge {
                    writer: 1,
                    reader: 2,
                    sel: lit(10),
                },
                RfEdge {
                    writer: 3,
                    reader: 0,
                    sel: lit(11),
                },
            ],
        };
        let c = close(&eog);
        assert!(c.is_infeasible());
        let kappa = c.refutation_clauses();
        assert_eq!(kappa.len(), 1);
        assert!(kappa[0].contains(&!lit(10)));
        assert!(kappa[0].contains(&!lit(11)));
        assert!(kappa[0].contains(&!lit(5)));
    }

    #[test]
    fn incomparable_reasons_coexist() {
        // (0,3) is derivable through 1 (guard g1) and through 2 (guard g2):
        // both singletons stay in the antichain, cheapest code first.
        let mut m1 = event("m1", 1, Access::Read);
        m1.guard = Some(lit(1));
        let mut m2 = event("m2", 2, Access::Read);
        m2.guard = Some(lit(2));
        let eog = Eog {
            events: vec![
                event("u", 0, Access::Read),
                m1,
                m2,
                event("v", 3, Access::Read),
            ],
            po: vec![(0, 1), (1, 3), (0, 2), (2, 3)],
            rf: vec![],
        };
        let c = close(&eog);
        assert!(!c.is_infeasible());
        assert_eq!(c.reasons(0, 3), &[vec![lit(1)], vec![lit(2)]]);
    }

    #[test]
    fn feasible_chain_stays_feasible() {
        let eog = Eog {
            events: vec![
                event("w1", 0, Access::Write),
                event("w2", 0, Access::Write),
                event("r", 0, Access::Read),
            ],
            po: vec![(0, 1), (1, 2)],
            rf: vec![RfEdge {
                writer: 1,
                reader: 2,
                sel: lit(4),
            }],
        };
        let c = close(&eog);
        assert!(!c.is_infeasible());
        assert!(c.refutation_clauses().is_empty());
        // Rule 2 on (w1 ≺ r): w1 ≺ w2 — consistent, no cycle.
        assert!(c.ordered(0, 1));
    }

    #[test]
    fn reading_an_intervening_write_is_infeasible() {
        // po: w1 ≺ w2 ≺ r, but r reads from w1: rule 3 puts r ≺ w2, cycle
        // with po w2 ≺ r.
        let eog = Eog {
            events: vec![
                event("w1", 0, Access::Write),
                event("w2", 0, Access::Write),
                event("r", 0, Access::Read),
            ],
            po: vec![(0, 1), (1, 2), (0, 2)],
            rf: vec![RfEdge {
                writer: 0,
                reader: 2,
                sel: lit(9),
            }],
        };
        let c = close(&eog);
        assert!(c.is_infeasible());
        assert_eq!(c.refutation_clauses(), vec![vec![!lit(9)]]);
    }

    #[test]
    fn policies_agree_on_verdict() {
        let eog = Eog {
            events: vec![
                event("w1", 0, Access::Write),
                event("r2", 1, Access::Read),
                event("w2", 1, Access::Write),
                event("r1", 0, Access::Read),
            ],
            po: vec![(0, 1), (2, 3)],
            rf: vec![
                RfEdge {
                    writer: 0,
                    reader: 3,
                    sel: lit(10),
                },
                RfEdge {
                    writer: 2,
                    reader: 1,
                    sel: lit(11),
                },
            ],
        };
        let fifo = eog.close(&ClosureConfig {
            policy: WorklistPolicy::Fifo,
            ..ClosureConfig::default()
        });
        let lifo = eog.close(&ClosureConfig {
            policy: WorklistPolicy::Lifo,
            ..ClosureConfig::default()
        });
        assert_eq!(fifo.is_infeasible(), lifo.is_infeasible());
        assert_eq!(fifo.refutation_clauses(), lifo.refutation_clauses());
    }
}
