//! Program order over shared-access events.
//!
//! Statements of one instance execute in list order; a spawn statement
//! precedes everything in the child; everything in the child precedes the
//! statement joining it. The induced strict partial order restricted to
//! shared-access events is the program-order relation the rest of the
//! pipeline consumes. `topo_events` additionally fixes one deterministic
//! linearization used to number events for diagnostics.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::normalize::{EventId, NStmtKind, NormalizedProgram};
use super::FrontendError;
use crate::bits::{BitMat, BitSet};

/// The program-order relation as a reachability matrix over events.
#[derive(Clone, Debug)]
pub struct ProgramOrder {
    matrix: BitMat,
}

impl ProgramOrder {
    /// True iff event `a` is before event `b` in program order.
    pub fn before(&self, a: EventId, b: EventId) -> bool {
        self.matrix.get(a, b)
    }

    /// Number of events the relation covers.
    pub fn len(&self) -> usize {
        self.matrix.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.is_empty()
    }

    /// All ordered pairs `(a, b)` with `a` before `b`.
    pub fn pairs(&self) -> impl Iterator<Item = (EventId, EventId)> + '_ {
        self.matrix.iter_pairs()
    }
}

/// One node per statement plus a start and an end node per instance.
struct PointGraph {
    /// Successor adjacency, indexed by point id.
    succs: Vec<Vec<usize>>,
    /// Event carried by each point, if any.
    event_at: Vec<Option<EventId>>,
    /// `start` point of each instance.
    start: Vec<usize>,
    num_points: usize,
}

fn stmt_point(starts: &[usize], instance: usize, stmt: usize) -> usize {
    // Layout per instance: start, stmt 0, …, stmt n-1, end.
    starts[instance] + 1 + stmt
}

fn end_point(starts: &[usize], p: &NormalizedProgram, instance: usize) -> usize {
    starts[instance] + 1 + p.instances[instance].stmts.len()
}

fn build_point_graph(p: &NormalizedProgram) -> Result<PointGraph, FrontendError> {
    let mut starts = Vec::with_capacity(p.instances.len());
    let mut num_points = 0;
    for inst in &p.instances {
        starts.push(num_points);
        num_points += inst.stmts.len() + 2;
    }

    let mut succs = vec![Vec::new(); num_points];
    let mut event_at = vec![None; num_points];

    for (i, inst) in p.instances.iter().enumerate() {
        let mut prev = starts[i];
        for (s, stmt) in inst.stmts.iter().enumerate() {
            let point = stmt_point(&starts, i, s);
            succs[prev].push(point);
            prev = point;
            match &stmt.kind {
                NStmtKind::SharedRead { event, .. } | NStmtKind::SharedWrite { event, .. } => {
                    event_at[point] = Some(*event);
                }
                NStmtKind::Spawn { child } => {
                    succs[point].push(starts[*child]);
                }
                NStmtKind::Join { child } => {
                    succs[end_point(&starts, p, *child)].push(point);
                }
                _ => {}
            }
        }
        succs[prev].push(end_point(&starts, p, i));
    }

    // Sanity: reject cycles (impossible for well-formed spawn/join, but the
    // closure below silently under-approximates on cyclic input).
    let mut indeg = vec![0usize; num_points];
    for outs in &succs {
        for &t in outs {
            indeg[t] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..num_points).filter(|&n| indeg[n] == 0).collect();
    let mut seen = 0;
    while let Some(n) = queue.pop() {
        seen += 1;
        for &t in &succs[n] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                queue.push(t);
            }
        }
    }
    if seen != num_points {
        return Err(FrontendError::Internal(
            "spawn/join structure is cyclic".to_string(),
        ));
    }

    Ok(PointGraph {
        succs,
        event_at,
        start: starts,
        num_points,
    })
}

/// Computes the program-order relation of a normalized program.
pub fn program_order(p: &NormalizedProgram) -> Result<ProgramOrder, FrontendError> {
    let graph = build_point_graph(p)?;
    let num_events = p.events.len();

    // Reverse-topological accumulation: reach[n] = events at or after n
    // (excluding n's own event). Process points so successors come first.
    let order = topo_points(&graph);
    let mut reach: Vec<BitSet> = (0..graph.num_points)
        .map(|_| BitSet::new(num_events))
        .collect();
    let mut matrix = BitMat::new(num_events);
    for &n in order.iter().rev() {
        let mut acc = BitSet::new(num_events);
        for &t in &graph.succs[n] {
            if let Some(e) = graph.event_at[t] {
                acc.insert(e);
            }
            acc.union_with(&reach[t]);
        }
        if let Some(e) = graph.event_at[n] {
            for after in acc.iter() {
                matrix.set(e, after);
            }
        }
        reach[n] = acc;
    }
    Ok(ProgramOrder { matrix })
}

/// Kahn topological sort of the point graph, smallest point id first.
fn topo_points(graph: &PointGraph) -> Vec<usize> {
    let mut indeg = vec![0usize; graph.num_points];
    for outs in &graph.succs {
        for &t in outs {
            indeg[t] += 1;
        }
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..graph.num_points)
        .filter(|&n| indeg[n] == 0)
        .map(Reverse)
        .collect();
    let mut out = Vec::with_capacity(graph.num_points);
    while let Some(Reverse(n)) = heap.pop() {
        out.push(n);
        for &t in &graph.succs[n] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                heap.push(Reverse(t));
            }
        }
    }
    out
}

/// A deterministic linearization of all events, respecting program order.
///
/// Ties are broken by `(instance, statement position)` so that every event
/// inside a spawned child is drained before the statement that joins it, and
/// earlier instances go first among independent events. Event subscripts in
/// diagnostics (`x1`, `x2`, …) are per-variable counters along this order.
pub fn topo_events(p: &NormalizedProgram) -> Vec<EventId> {
    let graph = build_point_graph(p).expect("normalized program has acyclic spawn structure");
    let mut indeg = vec![0usize; graph.num_points];
    for outs in &graph.succs {
        for &t in outs {
            indeg[t] += 1;
        }
    }
    // Key: (instance, position within instance) of the point.
    let key = |n: usize| -> (usize, usize) {
        let instance = match graph.start.binary_search(&n) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        (instance, n - graph.start[instance])
    };
    let mut heap: BinaryHeap<Reverse<((usize, usize), usize)>> = (0..graph.num_points)
        .filter(|&n| indeg[n] == 0)
        .map(|n| Reverse((key(n), n)))
        .collect();
    let mut out = Vec::with_capacity(p.events.len());
    while let Some(Reverse((_, n))) = heap.pop() {
        if let Some(e) = graph.event_at[n] {
            out.push(e);
        }
        for &t in &graph.succs[n] {
            indeg[t] -= 1;
            if indeg[t] == 0 {
                heap.push(Reverse((key(t), t)));
            }
        }
    }
    out
}

/// Per-event display labels like `x1`, `x2`: per-variable counters along the
/// `topo_events` order.
pub fn event_labels(p: &NormalizedProgram) -> Vec<String> {
    let mut counters = vec![0u32; p.shared.len()];
    let mut labels = vec![String::new(); p.events.len()];
    for e in topo_events(p) {
        let var = p.events[e].var;
        counters[var] += 1;
        labels[e] = format!("{}{}", p.shared[var].name, counters[var]);
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::super::{compile, UnwindConfig};
    use super::*;
    use crate::frontend::Access;

    fn cfg() -> UnwindConfig {
        UnwindConfig::default()
    }

    #[test]
    fn straight_line_is_totally_ordered() {
        let p = compile("shared int x; main { x = 1; x = 2; x = 3; }", &cfg()).unwrap();
        let po = program_order(&p).unwrap();
        // init, w1, w2, w3.
        assert_eq!(po.len(), 4);
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(po.before(a, b), a < b, "events {a},{b}");
            }
        }
    }

    #[test]
    fn parallel_threads_are_unordered() {
        let src = "
            shared int x;
            thread a { x = 1; }
            thread b { x = 2; }
            main { local int p; local int q; p = spawn a; q = spawn b; join p; join q; }
        ";
        let p = compile(src, &cfg()).unwrap();
        let po = program_order(&p).unwrap();
        let ea = p.events_of_instance(1).next().unwrap();
        let eb = p.events_of_instance(2).next().unwrap();
        assert!(!po.before(ea, eb));
        assert!(!po.before(eb, ea));
        // Both follow the initializer write.
        let init = p.events_of_instance(0).next().unwrap();
        assert!(po.before(init, ea));
        assert!(po.before(init, eb));
    }

    #[test]
    fn join_orders_child_before_later_statements() {
        let src = "
            shared int x;
            thread a { x = 1; }
            main { local int p; p = spawn a; join p; x = 2; }
        ";
        let p = compile(src, &cfg()).unwrap();
        let po = program_order(&p).unwrap();
        let child_write = p.events_of_instance(1).next().unwrap();
        let after_join = p.events_of_instance(0).last().unwrap();
        assert!(po.before(child_write, after_join));
    }

    #[test]
    fn order_is_transitive_and_irreflexive() {
        let src = "
            shared int x; shared int y;
            thread a { x = 1; y = x; }
            main { local int p; p = spawn a; x = 5; join p; y = 2; }
        ";
        let p = compile(src, &cfg()).unwrap();
        let po = program_order(&p).unwrap();
        let n = po.len();
        for a in 0..n {
            assert!(!po.before(a, a));
            for b in 0..n {
                for c in 0..n {
                    if po.before(a, b) && po.before(b, c) {
                        assert!(po.before(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn labels_follow_instance_then_position() {
        // Typical shape: main initializes, spawns two children, joins,
        // then reads. Child 1's accesses get lower subscripts than child 2's,
        // and main's post-join reads come last.
        let src = "
            shared int x = 1; shared int y = 1;
            thread t1 { x = y + 1; }
            thread t2 { y = x + 1; }
            main {
                local int p; local int q;
                p = spawn t1; q = spawn t2;
                join p; join q;
                assert(!(x == 2 && y == 2));
            }
        ";
        let p = compile(src, &cfg()).unwrap();
        let labels = event_labels(&p);
        // Init writes are x1, y1.
        let inits: Vec<&str> = p
            .events_of_instance(0)
            .take(2)
            .map(|e| labels[e].as_str())
            .collect();
        assert_eq!(inits, vec!["x1", "y1"]);
        // t1 reads y2 and writes x2; t2 reads x3 and writes y3 (t1 first).
        let t1: Vec<&str> = p
            .events_of_instance(1)
            .map(|e| labels[e].as_str())
            .collect();
        assert_eq!(t1, vec!["y2", "x2"]);
        let t2: Vec<&str> = p
            .events_of_instance(2)
            .map(|e| labels[e].as_str())
            .collect();
        assert_eq!(t2, vec!["x3", "y3"]);
        // Main's post-join reads are numbered after all child accesses.
        let main_reads: Vec<&str> = p
            .events_of_instance(0)
            .filter(|&e| p.events[e].access == Access::Read)
            .map(|e| labels[e].as_str())
            .collect();
        assert_eq!(main_reads, vec!["x4", "y4"]);
    }
}
