//! Seeded random event-order graphs for differential testing.
//!
//! The generator favors small graphs with plenty of same-variable traffic so
//! that both feasible and infeasible shapes occur often. All randomness comes
//! from the seed: a failing case is reproducible from its seed alone.

use satcore::{Lit, Var};

use super::{Eog, EogEvent, RfEdge};
use crate::bits::BitMat;
use crate::frontend::Access;

/// Shape bounds for generated graphs.
#[derive(Clone, Debug)]
pub struct FuzzConfig {
    pub max_threads: usize,
    pub max_events_per_thread: usize,
    pub num_vars: usize,
    /// Per-mill chance that an event carries a guard literal.
    pub guard_chance: u32,
    /// Per-mill chance that a read gets a reads-from edge.
    pub rf_chance: u32,
    /// Per-mill chance for each extra cross-thread order pair.
    pub cross_chance: u32,
}

impl Default for FuzzConfig {
    fn default() -> FuzzConfig {
        FuzzConfig {
            max_threads: 3,
            max_events_per_thread: 3,
            num_vars: 2,
            guard_chance: 250,
            rf_chance: 850,
            cross_chance: 150,
        }
    }
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n.max(1) as u64) as usize
    }

    fn chance(&mut self, per_mill: u32) -> bool {
        self.next() % 1000 < u64::from(per_mill)
    }
}

/// Generates one random graph. The result always passes `Eog::validate`.
pub fn random_eog(seed: u64, config: &FuzzConfig) -> Eog {
    let mut rng = SplitMix(seed);
    let threads = 1 + rng.below(config.max_threads);
    let mut events = Vec::new();
    let mut next_lit = 0u32;
    let fresh = |next_lit: &mut u32| {
        let l = Lit::positive(Var::from_index(*next_lit));
        *next_lit += 1;
        l
    };

    let mut thread_ranges = Vec::new();
    for t in 0..threads {
        let count = 1 + rng.below(config.max_events_per_thread);
        let begin = events.len();
        for k in 0..count {
            let var = rng.below(config.num_vars);
            let access = if rng.chance(500) {
                Access::Read
            } else {
                Access::Write
            };
            let guard = rng
                .chance(config.guard_chance)
                .then(|| fresh(&mut next_lit));
            events.push(EogEvent {
                label: format!("t{t}e{k}"),
                var,
                access,
                thread: t,
                guard,
            });
        }
        thread_ranges.push(begin..events.len());
    }

    let n = events.len();
    // Program order: total within each thread, plus random forward
    // cross-thread pairs (index order keeps the relation acyclic), then
    // transitively closed — the same shape the driver produces.
    let mut po = BitMat::new(n);
    for range in &thread_ranges {
        for a in range.clone() {
            for b in a + 1..range.end {
                po.set(a, b);
            }
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if events[a].thread != events[b].thread && rng.chance(config.cross_chance) {
                po.set(a, b);
            }
        }
    }
    po.close_transitively();

    let mut rf = Vec::new();
    for r in 0..n {
        if events[r].access != Access::Read || !rng.chance(config.rf_chance) {
            continue;
        }
        let writers: Vec<usize> = (0..n)
            .filter(|&w| events[w].access == Access::Write && events[w].var == events[r].var)
            .collect();
        if writers.is_empty() {
            continue;
        }
        let writer = writers[rng.below(writers.len())];
        rf.push(RfEdge {
            writer,
            reader: r,
            sel: fresh(&mut next_lit),
        });
    }

    Eog {
        events,
        po: po.iter_pairs().collect(),
        rf,
    }
}

/// Generates a graph whose program order is an arbitrary forward DAG over
/// singleton threads, rather than per-thread chains. This covers shapes a
/// spawn tree cannot produce; closure and the exact check must still agree
/// with enumeration on them. Bounds are reused from `config`:
/// `max_threads * max_events_per_thread` caps the event count and
/// `cross_chance` is the per-pair edge probability.
pub fn random_dag_eog(seed: u64, config: &FuzzConfig) -> Eog {
    let mut rng = SplitMix(seed ^ 0xD1B54A32D192ED03);
    let cap = (config.max_threads * config.max_events_per_thread).max(2);
    let n = 2 + rng.below(cap - 1);
    let mut next_lit = 0u32;
    let fresh = |next_lit: &mut u32| {
        let l = Lit::positive(Var::from_index(*next_lit));
        *next_lit += 1;
        l
    };

    let mut events = Vec::with_capacity(n);
    for k in 0..n {
        let var = rng.below(config.num_vars);
        let access = if rng.chance(500) {
            Access::Read
        } else {
            Access::Write
        };
        let guard = rng
            .chance(config.guard_chance)
            .then(|| fresh(&mut next_lit));
        events.push(EogEvent {
            label: format!("e{k}"),
            var,
            access,
            thread: k,
            guard,
        });
    }

    let mut po = BitMat::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.chance(config.cross_chance) {
                po.set(a, b);
            }
        }
    }
    po.close_transitively();

    let mut rf = Vec::new();
    for r in 0..n {
        if events[r].access != Access::Read || !rng.chance(config.rf_chance) {
            continue;
        }
        let writers: Vec<usize> = (0..n)
            .filter(|&w| events[w].access == Access::Write && events[w].var == events[r].var)
            .collect();
        if writers.is_empty() {
            continue;
        }
        let writer = writers[rng.below(writers.len())];
        rf.push(RfEdge {
            writer,
            reader: r,
            sel: fresh(&mut next_lit),
        });
    }

    Eog {
        events,
        po: po.iter_pairs().collect(),
        rf,
    }
}
