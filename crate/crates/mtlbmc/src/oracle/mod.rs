//! Explicit-state interpreter: the independent reference the SAT pipeline is
//! checked against, and the replayer that validates witness schedules.
//!
//! A program is unsafe iff some *complete* execution — every spawned thread
//! runs to completion — satisfies every executed `assume` and violates some
//! executed `assert`. That is exactly the set of executions the CNF encoding
//! ranges over, so interpreter and solver verdicts are comparable.
//!
//! Exploration schedules at shared-access granularity: statements that touch
//! only thread-local state commute with everything in other threads, so they
//! are drained eagerly in a canonical order instead of being interleaved.
//! Only guard-true shared reads and writes are branching points. `nondet()`
//! forks over a configurable finite value set.

pub mod brute;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{GuardId, NExpr, NStmt, NStmtKind, NormalizedProgram, GUARD_TRUE};
use crate::intsem;

/// Exploration limits and value domains.
#[derive(Clone, Debug)]
pub struct OracleConfig {
    /// Bit width of every integer.
    pub width: u32,
    /// Values `nondet()` ranges over during exploration.
    pub nondet_values: Vec<i64>,
    /// Total statement budget across the whole exploration.
    pub max_steps: u64,
}

impl Default for OracleConfig {
    fn default() -> OracleConfig {
        OracleConfig {
            width: 32,
            nondet_values: vec![0, 1, 2],
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exploration exceeded the step budget of {limit}")]
    StepBudget { limit: u64 },
    #[error("execution is stuck: no thread can make progress")]
    Stuck,
}

/// Errors from replaying a schedule that does not describe a valid complete
/// execution of the program.
#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("step {step}: instance {instance} is not running")]
    NotRunning { step: usize, instance: usize },
    #[error(
        "step {step}: schedule names statement {expected} but instance {instance} is at {actual}"
    )]
    CursorMismatch {
        step: usize,
        instance: usize,
        expected: usize,
        actual: usize,
    },
    #[error("step {step}: join of an unfinished thread")]
    JoinNotFinished { step: usize },
    #[error("step {step}: a live assume evaluated to false")]
    AssumeFailed { step: usize },
    #[error("step {step}: statement needs {needed} nondet values, schedule provides {provided}")]
    NondetArity {
        step: usize,
        needed: usize,
        provided: usize,
    },
    #[error("schedule ends before every thread has finished")]
    Incomplete,
}

/// A shared write performed by one schedule step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteRecord {
    pub var: String,
    pub value: i64,
}

/// One executed (or guard-skipped) statement in a linearized execution.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub instance: usize,
    pub thread: String,
    pub stmt: usize,
    pub text: String,
    /// False when the statement's guard evaluated to false (a no-op step).
    pub executed: bool,
    /// Values consumed by `nondet()` sites, left to right.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nondet: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub write: Option<WriteRecord>,
}

/// A total order over the statements of one complete execution.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub steps: Vec<ScheduleStep>,
}

/// Result of exhaustive exploration.
#[derive(Clone, Debug)]
pub enum OracleVerdict {
    Safe,
    Unsafe { schedule: Schedule, message: String },
}

#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub verdict: OracleVerdict,
    /// Complete executions examined.
    pub paths: u64,
    /// Statements executed in total.
    pub steps: u64,
}

#[derive(Clone)]
struct ThreadState {
    env: Vec<i64>,
    cursor: usize,
    started: bool,
    finished: bool,
}

#[derive(Clone)]
struct ExecState {
    shared: Vec<i64>,
    threads: Vec<ThreadState>,
    trace: Vec<ScheduleStep>,
    /// Message of the first assertion violated on this path, if any.
    violation: Option<String>,
}

impl ExecState {
    fn initial(p: &NormalizedProgram) -> ExecState {
        // Shared cells start at 0; declared initializers run as main's
        // leading write statements.
        ExecState {
            shared: vec![0; p.shared.len()],
            threads: p
                .instances
                .iter()
                .enumerate()
                .map(|(i, inst)| ThreadState {
                    env: vec![0; inst.local_names.len()],
                    cursor: 0,
                    started: i == 0,
                    finished: inst.stmts.is_empty() && i == 0,
                })
                .collect(),
            trace: Vec::new(),
            violation: None,
        }
    }

    fn running(&self, i: usize) -> bool {
        self.threads[i].started && !self.threads[i].finished
    }

    fn all_finished(&self) -> bool {
        self.threads.iter().all(|t| !t.started || t.finished)
    }
}

fn eval_guard(p: &NormalizedProgram, instance: usize, env: &[i64], guard: GuardId) -> bool {
    let mut g = guard;
    loop {
        if g == GUARD_TRUE {
            return true;
        }
        let node = &p.instances[instance].guards[g as usize];
        if let Some((slot, expect)) = node.cond {
            if intsem::truthy(env[slot]) != expect {
                return false;
            }
        }
        g = node.parent;
    }
}

fn eval_expr(expr: &NExpr, env: &[i64], width: u32, nondet: &mut std::slice::Iter<i64>) -> i64 {
    match expr {
        NExpr::Int(n) => intsem::truncate(*n, width),
        NExpr::Local(slot) => env[*slot],
        NExpr::Nondet => intsem::truncate(
            *nondet.next().expect("nondet value provided for each site"),
            width,
        ),
        NExpr::Unary { op, operand } => {
            let v = eval_expr(operand, env, width, nondet);
            intsem::eval_unop(*op, v, width)
        }
        NExpr::Binary { op, lhs, rhs } => {
            // Strict left-to-right evaluation; nondet sites are consumed in
            // that order even for logical operators.
            let l = eval_expr(lhs, env, width, nondet);
            let r = eval_expr(rhs, env, width, nondet);
            intsem::eval_binop(*op, l, r, width)
        }
    }
}

enum StepOutcome {
    Done,
    AssumeFailed,
    AssertFailed(String),
    Blocked,
}

/// Executes the statement at `instance`'s cursor, consuming `nondet_values`
/// for its nondet sites, appending to the trace, and advancing the cursor
/// (except when blocked at a join).
fn exec_one(
    p: &NormalizedProgram,
    width: u32,
    state: &mut ExecState,
    instance: usize,
    nondet_values: &[i64],
) -> StepOutcome {
    let cursor = state.threads[instance].cursor;
    let stmt: &NStmt = &p.instances[instance].stmts[cursor];
    let guard_holds = eval_guard(p, instance, &state.threads[instance].env, stmt.guard);

    let mut step = ScheduleStep {
        instance,
        thread: p.instances[instance].name.clone(),
        stmt: cursor,
        text: stmt.text.clone(),
        executed: guard_holds,
        nondet: nondet_values.to_vec(),
        write: None,
    };

    let mut outcome = StepOutcome::Done;
    if guard_holds {
        let mut nd = nondet_values.iter();
        match &stmt.kind {
            NStmtKind::LocalAssign { slot, expr } => {
                let v = eval_expr(expr, &state.threads[instance].env, width, &mut nd);
                state.threads[instance].env[*slot] = v;
            }
            NStmtKind::SharedRead { slot, event } => {
                let var = p.events[*event].var;
                state.threads[instance].env[*slot] = state.shared[var];
            }
            NStmtKind::SharedWrite { event, expr } => {
                let v = eval_expr(expr, &state.threads[instance].env, width, &mut nd);
                let var = p.events[*event].var;
                state.shared[var] = v;
                step.write = Some(WriteRecord {
                    var: p.shared[var].name.clone(),
                    value: v,
                });
            }
            NStmtKind::Assert { cond } => {
                let v = eval_expr(cond, &state.threads[instance].env, width, &mut nd);
                if !intsem::truthy(v) {
                    outcome = StepOutcome::AssertFailed(format!(
                        "{} fails in {} at {}",
                        stmt.text, p.instances[instance].name, stmt.pos
                    ));
                }
            }
            NStmtKind::Assume { cond } => {
                let v = eval_expr(cond, &state.threads[instance].env, width, &mut nd);
                if !intsem::truthy(v) {
                    outcome = StepOutcome::AssumeFailed;
                }
            }
            NStmtKind::Spawn { child } => {
                state.threads[*child].started = true;
                if p.instances[*child].stmts.is_empty() {
                    state.threads[*child].finished = true;
                }
            }
            NStmtKind::Join { child } => {
                if !state.threads[*child].finished {
                    return StepOutcome::Blocked;
                }
            }
        }
    }

    state.trace.push(step);
    state.threads[instance].cursor = cursor + 1;
    if state.threads[instance].cursor == p.instances[instance].stmts.len() {
        state.threads[instance].finished = true;
    }
    outcome
}

/// Number of nondet sites the statement at `instance`'s cursor will consume,
/// given the current environment (0 when its guard is false).
fn pending_nondet(p: &NormalizedProgram, state: &ExecState, instance: usize) -> usize {
    let cursor = state.threads[instance].cursor;
    let stmt = &p.instances[instance].stmts[cursor];
    if eval_guard(p, instance, &state.threads[instance].env, stmt.guard) {
        stmt.nondet_sites as usize
    } else {
        0
    }
}

/// True when the statement at the cursor is not a branching point: its guard
/// is false, or it is local-only, a spawn, or a join of a finished child.
fn is_invisible(p: &NormalizedProgram, state: &ExecState, instance: usize) -> bool {
    let cursor = state.threads[instance].cursor;
    let stmt = &p.instances[instance].stmts[cursor];
    if !eval_guard(p, instance, &state.threads[instance].env, stmt.guard) {
        return true;
    }
    match &stmt.kind {
        NStmtKind::SharedRead { .. } | NStmtKind::SharedWrite { .. } => false,
        NStmtKind::Join { child } => state.threads[*child].finished,
        _ => true,
    }
}

struct Explorer<'a> {
    p: &'a NormalizedProgram,
    config: &'a OracleConfig,
    steps: u64,
    paths: u64,
}

/// Explores every complete execution. Returns the first violating schedule
/// in the canonical exploration order, or `Safe`.
pub fn explore(p: &NormalizedProgram, config: &OracleConfig) -> Result<OracleOutcome, OracleError> {
    let mut explorer = Explorer {
        p,
        config,
        steps: 0,
        paths: 0,
    };
    let mut state = ExecState::initial(p);
    let verdict = match explorer.run(&mut state)? {
        Some(schedule_and_message) => OracleVerdict::Unsafe {
            schedule: schedule_and_message.0,
            message: schedule_and_message.1,
        },
        None => OracleVerdict::Safe,
    };
    Ok(OracleOutcome {
        verdict,
        paths: explorer.paths,
        steps: explorer.steps,
    })
}

impl<'a> Explorer<'a> {
    /// DFS from `state`; returns the first violating complete execution.
    fn run(&mut self, state: &mut ExecState) -> Result<Option<(Schedule, String)>, OracleError> {
        // Drain invisible statements in canonical (lowest instance) order.
        while let Some(i) =
            (0..state.threads.len()).find(|&i| state.running(i) && is_invisible(self.p, state, i))
        {
            let sites = pending_nondet(self.p, state, i);
            if sites > 0 {
                return self.fork_nondet(state, i, sites);
            }
            self.charge_step()?;
            match exec_one(self.p, self.config.width, state, i, &[]) {
                StepOutcome::Done => {}
                StepOutcome::AssumeFailed => {
                    // Every completion of this prefix re-executes this assume
                    // with the same (local-only) outcome: prune.
                    self.paths += 1;
                    return Ok(None);
                }
                StepOutcome::AssertFailed(message) => {
                    state.violation.get_or_insert(message);
                }
                StepOutcome::Blocked => unreachable!("invisible join is not blocked"),
            }
        }

        if state.all_finished() {
            self.paths += 1;
            return Ok(state.violation.take().map(|message| {
                (
                    Schedule {
                        steps: std::mem::take(&mut state.trace),
                    },
                    message,
                )
            }));
        }

        // Branch over every runnable guard-true shared access.
        let runnable: Vec<usize> = (0..state.threads.len())
            .filter(|&i| {
                state.running(i)
                    && matches!(
                        self.p.instances[i].stmts[state.threads[i].cursor].kind,
                        NStmtKind::SharedRead { .. } | NStmtKind::SharedWrite { .. }
                    )
            })
            .collect();
        if runnable.is_empty() {
            // All unfinished threads are blocked at joins; impossible for
            // checked programs.
            return Err(OracleError::Stuck);
        }
        for i in runnable {
            let sites = pending_nondet(self.p, state, i);
            if sites > 0 {
                if let Some(found) = self.fork_nondet(state, i, sites)? {
                    return Ok(Some(found));
                }
                continue;
            }
            let mut clone = state.clone();
            self.charge_step()?;
            match exec_one(self.p, self.config.width, &mut clone, i, &[]) {
                StepOutcome::Done => {}
                _ => unreachable!("shared access neither asserts nor blocks"),
            }
            if let Some(found) = self.run(&mut clone)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }

    /// Branches over every tuple of nondet values for the statement at
    /// `instance`'s cursor, then continues exploration.
    fn fork_nondet(
        &mut self,
        state: &ExecState,
        instance: usize,
        sites: usize,
    ) -> Result<Option<(Schedule, String)>, OracleError> {
        let mut tuple = vec![0usize; sites];
        loop {
            let values: Vec<i64> = tuple
                .iter()
                .map(|&ix| self.config.nondet_values[ix])
                .collect();
            let mut clone = state.clone();
            self.charge_step()?;
            let outcome = exec_one(self.p, self.config.width, &mut clone, instance, &values);
            let pruned = match outcome {
                StepOutcome::Done => false,
                StepOutcome::AssumeFailed => {
                    self.paths += 1;
                    true
                }
                StepOutcome::AssertFailed(message) => {
                    clone.violation.get_or_insert(message);
                    false
                }
                StepOutcome::Blocked => unreachable!("nondet statements never block"),
            };
            if !pruned {
                if let Some(found) = self.run(&mut clone)? {
                    return Ok(Some(found));
                }
            }
            // Advance the tuple odometer.
            let mut pos = sites;
            loop {
                if pos == 0 {
                    return Ok(None);
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < self.config.nondet_values.len() {
                    break;
                }
                tuple[pos] = 0;
            }
        }
    }

    fn charge_step(&mut self) -> Result<(), OracleError> {
        self.steps += 1;
        if self.steps > self.config.max_steps {
            return Err(OracleError::StepBudget {
                limit: self.config.max_steps,
            });
        }
        Ok(())
    }
}

/// Outcome of a successful replay: the execution is valid and complete.
#[derive(Clone, Debug)]
pub struct ReplayResult {
    /// Step index and message of the first assertion violation, if any.
    pub violation: Option<(usize, String)>,
    /// Shared memory at the end of the execution.
    pub final_shared: Vec<i64>,
}

/// Re-executes a schedule step by step, checking that it is a valid complete
/// execution of `p`. Nondet values are taken from the schedule.
pub fn replay(
    p: &NormalizedProgram,
    schedule: &Schedule,
    width: u32,
) -> Result<ReplayResult, ReplayError> {
    let mut state = ExecState::initial(p);
    let mut violation = None;
    for (k, planned) in schedule.steps.iter().enumerate() {
        let i = planned.instance;
        if i >= state.threads.len() || !state.running(i) {
            return Err(ReplayError::NotRunning {
                step: k,
                instance: i,
            });
        }
        let cursor = state.threads[i].cursor;
        if planned.stmt != cursor {
            return Err(ReplayError::CursorMismatch {
                step: k,
                instance: i,
                expected: planned.stmt,
                actual: cursor,
            });
        }
        let needed = pending_nondet(p, &state, i);
        if planned.nondet.len() < needed {
            return Err(ReplayError::NondetArity {
                step: k,
                needed,
                provided: planned.nondet.len(),
            });
        }
        match exec_one(p, width, &mut state, i, &planned.nondet) {
            StepOutcome::Done => {}
            StepOutcome::Blocked => return Err(ReplayError::JoinNotFinished { step: k }),
            StepOutcome::AssumeFailed => return Err(ReplayError::AssumeFailed { step: k }),
            StepOutcome::AssertFailed(message) => {
                if violation.is_none() {
                    violation = Some((k, message));
                }
            }
        }
    }
    if !state.all_finished() {
        return Err(ReplayError::Incomplete);
    }
    Ok(ReplayResult {
        violation,
        final_shared: state.shared,
    })
}
