//! Brute-force feasibility of event-order graphs, by enumerating total
//! orders. Exponential and intended for graphs of at most ~14 events: the
//! reference the closure rules and the exact ordering check are tested
//! against.

use crate::eog::Eog;
use crate::frontend::Access;

/// Finds a total order (as a list of event indices) that respects program
/// order and lets every read-from edge hold with no intervening same-variable
/// write, or `None` if no such order exists.
pub fn feasible_order(eog: &Eog) -> Option<Vec<usize>> {
    let n = eog.events.len();
    debug_assert!(n <= 20, "brute-force enumeration is for small graphs");
    // Direct predecessor counts from po.
    let mut preds = vec![0usize; n];
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &eog.po {
        preds[b] += 1;
        succs[a].push(b);
    }
    let rf_of_reader: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for edge in &eog.rf {
            v[edge.reader] = Some(edge.writer);
        }
        v
    };
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    search(
        eog,
        &mut preds,
        &succs,
        &rf_of_reader,
        &mut placed,
        &mut order,
    )
    .then_some(order)
}

fn search(
    eog: &Eog,
    preds: &mut Vec<usize>,
    succs: &[Vec<usize>],
    rf_of_reader: &[Option<usize>],
    placed: &mut Vec<bool>,
    order: &mut Vec<usize>,
) -> bool {
    let n = eog.events.len();
    if order.len() == n {
        return true;
    }
    for e in 0..n {
        if placed[e] || preds[e] != 0 {
            continue;
        }
        if !placement_ok(eog, rf_of_reader, placed, e) {
            continue;
        }
        placed[e] = true;
        order.push(e);
        for &s in &succs[e] {
            preds[s] -= 1;
        }
        if search(eog, preds, succs, rf_of_reader, placed, order) {
            return true;
        }
        for &s in &succs[e] {
            preds[s] += 1;
        }
        order.pop();
        placed[e] = false;
    }
    false
}

/// Local admissibility of appending `e` to the current prefix.
fn placement_ok(eog: &Eog, rf_of_reader: &[Option<usize>], placed: &[bool], e: usize) -> bool {
    let ev = &eog.events[e];
    // A read must follow its writer.
    if ev.access == Access::Read {
        if let Some(w) = rf_of_reader[e] {
            if !placed[w] {
                return false;
            }
        }
    }
    // A write may not land between another writer and its still-pending
    // reader of the same variable.
    if ev.access == Access::Write {
        for edge in &eog.rf {
            if edge.writer != e
                && eog.events[edge.writer].var == ev.var
                && placed[edge.writer]
                && !placed[edge.reader]
            {
                return false;
            }
        }
    }
    true
}
