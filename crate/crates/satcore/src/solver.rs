//! The CDCL search engine.

use crate::{Lit, Var};

/// Tunables for the search. The defaults are conventional; all runs are
/// deterministic for a fixed config, and `seed` only perturbs the initial
/// variable ordering (useful for shaking out order-dependent behavior).
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Seed for the initial activity jitter.
    pub seed: u64,
    /// Multiplicative VSIDS decay, applied per conflict.
    pub var_decay: f64,
    /// Multiplicative learnt-clause activity decay, applied per conflict.
    pub clause_decay: f64,
    /// Conflicts allowed before the first restart; scaled by the Luby sequence.
    pub restart_base: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            var_decay: 0.95,
            clause_decay: 0.999,
            restart_base: 100,
        }
    }
}

/// Outcome of [`Solver::solve`].
#[derive(Clone, Debug)]
pub enum SolveResult {
    /// Satisfiable; carries a total assignment.
    Sat(Model),
    /// Unsatisfiable; carries a subset of the assumptions that, conjoined
    /// with the clause database, is unsatisfiable (empty if the database
    /// alone is unsatisfiable).
    Unsat(Vec<Lit>),
}

impl SolveResult {
    /// True if this is the `Sat` variant.
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

/// A total assignment to all allocated variables.
#[derive(Clone, Debug)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    /// Truth value of a literal under the model.
    pub fn value(&self, l: Lit) -> bool {
        self.values[l.var().index() as usize] == l.is_positive()
    }

    /// Truth value of a variable under the model.
    pub fn var_value(&self, v: Var) -> bool {
        self.values[v.index() as usize]
    }

    /// Number of assigned variables.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the model assigns no variables.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Cumulative search statistics.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

#[derive(Clone, Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
    deleted: bool,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: usize,
    blocker: Lit,
}

#[derive(Clone, Copy)]
struct VarData {
    reason: Option<usize>,
    level: u32,
}

enum Search {
    Sat(Model),
    Unsat(Vec<Lit>),
    Restart,
}

/// An incremental CDCL solver. See the crate docs for the feature set.
pub struct Solver {
    config: SolverConfig,
    clauses: Vec<Clause>,
    num_problem_clauses: usize,
    num_learnts: usize,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<Option<bool>>,
    vardata: Vec<VarData>,
    activity: Vec<f64>,
    polarity: Vec<bool>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    assumptions: Vec<Lit>,
    seen: Vec<bool>,
    ok: bool,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    /// A solver with default configuration.
    pub fn new() -> Solver {
        Solver::with_config(SolverConfig::default())
    }

    /// A solver with an explicit configuration.
    pub fn with_config(config: SolverConfig) -> Solver {
        Solver {
            config,
            clauses: Vec::new(),
            num_problem_clauses: 0,
            num_learnts: 0,
            watches: Vec::new(),
            assigns: Vec::new(),
            vardata: Vec::new(),
            activity: Vec::new(),
            polarity: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            assumptions: Vec::new(),
            seen: Vec::new(),
            ok: true,
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 2000.0,
            stats: SolverStats::default(),
        }
    }

    /// Allocates a fresh variable.
    pub fn new_var(&mut self) -> Var {
        let v = Var::from_index(self.assigns.len() as u32);
        self.assigns.push(None);
        self.vardata.push(VarData {
            reason: None,
            level: 0,
        });
        // A tiny seed-dependent jitter breaks activity ties so the initial
        // branching order is a pure function of the seed.
        let jitter =
            splitmix64(self.config.seed ^ (v.index() as u64).wrapping_mul(0x9e3779b97f4a7c15));
        self.activity.push((jitter as f64 / u64::MAX as f64) * 1e-9);
        self.polarity.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v, &self.activity);
        v
    }

    /// Number of allocated variables.
    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    /// Grows the variable table so `v` is valid.
    pub fn ensure_var(&mut self, v: Var) {
        while self.num_vars() <= v.index() {
            self.new_var();
        }
    }

    /// Number of live problem (non-learnt) clauses.
    pub fn num_clauses(&self) -> usize {
        self.num_problem_clauses
    }

    /// Search statistics so far.
    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the clause database has been proven unsatisfiable outright.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    /// Adds a clause, growing the variable table as needed. Top-level
    /// simplification applies: satisfied clauses are dropped, false literals
    /// removed, and the empty clause marks the database unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.cancel_until(0);
        if !self.ok {
            return;
        }
        for &l in lits {
            self.ensure_var(l.var());
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        // Tautology or satisfied-at-top-level clauses carry no information.
        for w in c.windows(2) {
            if w[0].var() == w[1].var() {
                return;
            }
        }
        c.retain(|&l| self.value(l) != Some(false));
        if c.iter().any(|&l| self.value(l) == Some(true)) {
            return;
        }
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.unchecked_enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let cref = self.alloc_clause(c, false);
                self.attach_clause(cref);
            }
        }
    }

    /// Solves the current database under the given assumptions.
    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.cancel_until(0);
        if !self.ok {
            return SolveResult::Unsat(Vec::new());
        }
        for &a in assumptions {
            self.ensure_var(a.var());
        }
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat(Vec::new());
        }
        self.assumptions = assumptions.to_vec();
        let mut restarts = 0u32;
        loop {
            let budget = (self.config.restart_base as f64 * luby(2.0, restarts)) as u64;
            match self.search(budget) {
                Search::Sat(m) => {
                    self.cancel_until(0);
                    return SolveResult::Sat(m);
                }
                Search::Unsat(core) => {
                    self.cancel_until(0);
                    return SolveResult::Unsat(core);
                }
                Search::Restart => {
                    restarts += 1;
                    self.stats.restarts += 1;
                }
            }
        }
    }

    fn search(&mut self, conflict_budget: u64) -> Search {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Search::Unsat(Vec::new());
                }
                let (learnt, bt_level) = self.analyze(confl);
                self.cancel_until(bt_level);
                if learnt.len() == 1 {
                    self.unchecked_enqueue(learnt[0], None);
                } else {
                    let cref = self.alloc_clause(learnt, true);
                    self.attach_clause(cref);
                    self.bump_clause(cref);
                    let first = self.clauses[cref].lits[0];
                    self.unchecked_enqueue(first, Some(cref));
                }
                self.var_inc /= self.config.var_decay;
                self.cla_inc /= self.config.clause_decay;
            } else {
                if conflicts >= conflict_budget {
                    self.cancel_until(0);
                    return Search::Restart;
                }
                if self.num_learnts as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                // Establish assumptions, then branch.
                let next = loop {
                    if (self.decision_level() as usize) < self.assumptions.len() {
                        let p = self.assumptions[self.decision_level() as usize];
                        match self.value(p) {
                            Some(true) => self.new_decision_level(),
                            Some(false) => return Search::Unsat(self.analyze_final(p)),
                            None => break Some(p),
                        }
                    } else {
                        break self.pick_branch_lit();
                    }
                };
                match next {
                    Some(p) => {
                        self.stats.decisions += 1;
                        self.new_decision_level();
                        self.unchecked_enqueue(p, None);
                    }
                    None => return Search::Sat(self.extract_model()),
                }
            }
        }
    }

    fn extract_model(&self) -> Model {
        Model {
            values: self
                .assigns
                .iter()
                .map(|a| a.expect("total assignment at SAT"))
                .collect(),
        }
    }

    fn value(&self, l: Lit) -> Option<bool> {
        self.assigns[l.var().index() as usize].map(|b| b == l.is_positive())
    }

    fn level(&self, v: Var) -> u32 {
        self.vardata[v.index() as usize].level
    }

    fn reason(&self, v: Var) -> Option<usize> {
        self.vardata[v.index() as usize].reason
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn new_decision_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    fn unchecked_enqueue(&mut self, l: Lit, reason: Option<usize>) {
        debug_assert!(self.value(l).is_none());
        self.assigns[l.var().index() as usize] = Some(l.is_positive());
        self.vardata[l.var().index() as usize] = VarData {
            reason,
            level: self.decision_level(),
        };
        self.trail.push(l);
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let bound = self.trail_lim[level as usize];
        for i in (bound..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.polarity[v.index() as usize] = l.is_positive();
            self.assigns[v.index() as usize] = None;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(bound);
        self.trail_lim.truncate(level as usize);
        self.qhead = bound;
    }

    fn pick_branch_lit(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v.index() as usize].is_none() {
                return Some(Lit::new(v, self.polarity[v.index() as usize]));
            }
        }
        None
    }

    /// Unit propagation; returns a conflicting clause reference, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let ws = std::mem::take(&mut self.watches[p.code()]);
            let mut kept: Vec<Watcher> = Vec::with_capacity(ws.len());
            let mut iter = ws.into_iter();
            while let Some(w) = iter.next() {
                if self.value(w.blocker) == Some(true) {
                    kept.push(w);
                    continue;
                }
                if self.clauses[w.cref].deleted {
                    continue;
                }
                // Normalize so the false literal sits at position 1.
                let first = {
                    let c = &mut self.clauses[w.cref];
                    if c.lits[0] == false_lit {
                        c.lits.swap(0, 1);
                    }
                    debug_assert_eq!(c.lits[1], false_lit);
                    c.lits[0]
                };
                if first != w.blocker && self.value(first) == Some(true) {
                    kept.push(Watcher {
                        cref: w.cref,
                        blocker: first,
                    });
                    continue;
                }
                // Look for a replacement watch.
                let mut moved = false;
                let len = self.clauses[w.cref].lits.len();
                for k in 2..len {
                    let lk = self.clauses[w.cref].lits[k];
                    if self.value(lk) != Some(false) {
                        self.clauses[w.cref].lits.swap(1, k);
                        self.watches[(!lk).code()].push(Watcher {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                // Clause is unit or conflicting under the current assignment.
                kept.push(Watcher {
                    cref: w.cref,
                    blocker: first,
                });
                if self.value(first) == Some(false) {
                    kept.extend(iter);
                    self.watches[p.code()] = kept;
                    self.qhead = self.trail.len();
                    return Some(w.cref);
                }
                self.unchecked_enqueue(first, Some(w.cref));
            }
            self.watches[p.code()] = kept;
        }
        None
    }

    /// First-UIP conflict analysis with basic recursive minimization.
    /// Returns the learnt clause (asserting literal first) and the backtrack level.
    fn analyze(&mut self, confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![Lit::positive(Var::from_index(0))]; // slot 0 patched below
        let mut path_count = 0u32;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut cref = confl;
        loop {
            self.bump_clause(cref);
            let start = if p.is_none() { 0 } else { 1 };
            for k in start..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = q.var();
                if !self.seen[v.index() as usize] && self.level(v) > 0 {
                    self.seen[v.index() as usize] = true;
                    self.bump_var(v);
                    if self.level(v) >= self.decision_level() {
                        path_count += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // Select the next trail literal to resolve on.
            while !self.seen[self.trail[idx - 1].var().index() as usize] {
                idx -= 1;
            }
            idx -= 1;
            let pl = self.trail[idx];
            self.seen[pl.var().index() as usize] = false;
            path_count -= 1;
            if path_count == 0 {
                learnt[0] = !pl;
                break;
            }
            cref = self
                .reason(pl.var())
                .expect("non-decision literal on conflict path has a reason");
            p = Some(pl);
        }

        // Basic minimization: drop literals whose reasons are subsumed by the
        // rest of the clause.
        let mut to_clear: Vec<Var> = learnt[1..].iter().map(|l| l.var()).collect();
        let retained: Vec<Lit> = learnt[1..]
            .iter()
            .copied()
            .filter(|&q| !self.lit_redundant(q))
            .collect();
        learnt.truncate(1);
        learnt.extend(retained);
        to_clear.push(learnt[0].var());
        for v in to_clear {
            self.seen[v.index() as usize] = false;
        }

        // Backtrack to the second-highest decision level in the clause.
        let bt_level = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level(learnt[i].var()) > self.level(learnt[max_i].var()) {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level(learnt[1].var())
        };
        (learnt, bt_level)
    }

    fn lit_redundant(&self, q: Lit) -> bool {
        match self.reason(q.var()) {
            None => false,
            Some(cref) => self.clauses[cref].lits[1..]
                .iter()
                .all(|&r| self.seen[r.var().index() as usize] || self.level(r.var()) == 0),
        }
    }

    /// Explains why assumption `p` is falsified: returns a subset of the
    /// assumptions that together with the database is unsatisfiable.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut core = vec![p];
        if self.decision_level() == 0 {
            return core;
        }
        self.seen[p.var().index() as usize] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let x = self.trail[i];
            let v = x.var();
            if !self.seen[v.index() as usize] {
                continue;
            }
            match self.reason(v) {
                None => {
                    // A decision above level 0 is an assumption here: this is
                    // only called while establishing the assumption prefix.
                    debug_assert!(self.level(v) > 0);
                    if x != p {
                        core.push(x);
                    }
                }
                Some(cref) => {
                    for &q in &self.clauses[cref].lits[1..] {
                        if self.level(q.var()) > 0 {
                            self.seen[q.var().index() as usize] = true;
                        }
                    }
                }
            }
            self.seen[v.index() as usize] = false;
        }
        self.seen[p.var().index() as usize] = false;
        core
    }

    fn alloc_clause(&mut self, lits: Vec<Lit>, learnt: bool) -> usize {
        debug_assert!(lits.len() >= 2);
        let cref = self.clauses.len();
        self.clauses.push(Clause {
            lits,
            learnt,
            activity: 0.0,
            deleted: false,
        });
        if learnt {
            self.num_learnts += 1;
        } else {
            self.num_problem_clauses += 1;
        }
        cref
    }

    fn attach_clause(&mut self, cref: usize) {
        let (l0, l1) = {
            let c = &self.clauses[cref];
            (c.lits[0], c.lits[1])
        };
        self.watches[(!l0).code()].push(Watcher { cref, blocker: l1 });
        self.watches[(!l1).code()].push(Watcher { cref, blocker: l0 });
    }

    fn bump_var(&mut self, v: Var) {
        self.activity[v.index() as usize] += self.var_inc;
        if self.activity[v.index() as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.update(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        if !self.clauses[cref].learnt {
            return;
        }
        self.clauses[cref].activity += self.cla_inc;
        if self.clauses[cref].activity > 1e20 {
            for c in &mut self.clauses {
                if c.learnt {
                    c.activity *= 1e-20;
                }
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn locked(&self, cref: usize) -> bool {
        let c = &self.clauses[cref];
        if c.deleted || c.lits.len() < 2 {
            return false;
        }
        self.value(c.lits[0]) == Some(true) && self.reason(c.lits[0].var()) == Some(cref)
    }

    /// Deletes roughly half of the learnt clauses, lowest activity first.
    /// Locked (reason) and binary clauses are kept.
    fn reduce_db(&mut self) {
        let mut learnt_refs: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                let c = &self.clauses[i];
                c.learnt && !c.deleted && c.lits.len() > 2
            })
            .collect();
        learnt_refs.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .unwrap()
                .then(a.cmp(&b))
        });
        let target = learnt_refs.len() / 2;
        let mut removed = 0;
        for &cref in &learnt_refs {
            if removed >= target {
                break;
            }
            if self.locked(cref) {
                continue;
            }
            let c = &mut self.clauses[cref];
            c.deleted = true;
            c.lits = Vec::new();
            self.num_learnts -= 1;
            removed += 1;
        }
        self.max_learnts *= 1.15;
    }
}

fn luby(y: f64, mut x: u32) -> f64 {
    let mut size: u64 = 1;
    let mut seq: i32 = 0;
    while size < x as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x as u64 {
        size = (size - 1) / 2;
        seq -= 1;
        x = (x as u64 % size) as u32;
    }
    y.powi(seq)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Max-heap over variables keyed by activity, ties broken by index.
#[derive(Default)]
struct VarHeap {
    heap: Vec<Var>,
    pos: Vec<i32>,
}

impl VarHeap {
    fn better(a: Var, b: Var, act: &[f64]) -> bool {
        let (aa, ab) = (act[a.index() as usize], act[b.index() as usize]);
        aa > ab || (aa == ab && a.index() < b.index())
    }

    fn insert(&mut self, v: Var, act: &[f64]) {
        while self.pos.len() <= v.index() as usize {
            self.pos.push(-1);
        }
        if self.pos[v.index() as usize] >= 0 {
            return;
        }
        self.pos[v.index() as usize] = self.heap.len() as i32;
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn update(&mut self, v: Var, act: &[f64]) {
        if (v.index() as usize) < self.pos.len() && self.pos[v.index() as usize] >= 0 {
            self.sift_up(self.pos[v.index() as usize] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<Var> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        self.pos[top.index() as usize] = -1;
        let last = self.heap.pop().unwrap();
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last.index() as usize] = 0;
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if Self::better(self.heap[i], self.heap[parent], act) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < self.heap.len() && Self::better(self.heap[l], self.heap[best], act) {
                best = l;
            }
            if r < self.heap.len() && Self::better(self.heap[r], self.heap[best], act) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i].index() as usize] = i as i32;
        self.pos[self.heap[j].index() as usize] = j as i32;
    }
}
