//! Verification engines and the refinement loop.
//!
//! Three engines answer the same question — "can any interleaving violate an
//! assertion?" — with different machinery:
//!
//! * `cegar` (default): solve the abstraction (no ordering constraints);
//!   when a model appears, extract its event-order graph and check it. A
//!   realizable graph yields a replayable counterexample; otherwise a
//!   refinement clause blocking the graph's minimal cause is added and the
//!   loop repeats. Graph checking is the closure first, the exact SAT
//!   fallback only when the closure cannot decide.
//! * `monolithic`: solve the abstraction plus the full scheduling
//!   constraints in one shot.
//! * `explicit`: enumerate interleavings in the interpreter; exact for
//!   programs whose `nondet()` use is bounded to the explored value set.

pub mod witness;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use satcore::{Model, SolveResult, Solver};
use serde::Serialize;
use thiserror::Error;

use crate::encoder::{encode, EncodeConfig, EncodedProgram};
use crate::eog::ClosureConfig;
use crate::exactorder::{blocking_clause, validate_exact, ExactVerdict};
use crate::frontend::{compile, EventId, FrontendError, NormalizedProgram, UnwindConfig};
use crate::oracle::{explore, replay, OracleConfig, OracleError, OracleVerdict};
use witness::{build_witness, Witness};

/// Which verification strategy to run.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Engine {
    Cegar,
    Monolithic,
    Explicit,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Engine, String> {
        match s {
            "cegar" => Ok(Engine::Cegar),
            "monolithic" => Ok(Engine::Monolithic),
            "explicit" => Ok(Engine::Explicit),
            other => Err(format!(
                "unknown engine `{other}` (expected cegar, monolithic or explicit)"
            )),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Cegar => "cegar",
            Engine::Monolithic => "monolithic",
            Engine::Explicit => "explicit",
        })
    }
}

/// Everything configurable about a verification run.
#[derive(Clone, Debug)]
pub struct DriverConfig {
    pub engine: Engine,
    pub unwind: UnwindConfig,
    /// Bit width of every integer.
    pub width: u32,
    /// Refinement iteration budget for the cegar engine.
    pub max_iterations: usize,
    pub link_pruning: bool,
    /// Run extra self-checks each iteration (graph validity, clause
    /// progress) and fail loudly instead of silently continuing.
    pub check_invariants: bool,
    /// Recorded in stats; reserved for solver randomization. The bundled
    /// solver is deterministic, so runs are reproducible for any seed.
    pub seed: u64,
    pub closure: ClosureConfig,
    pub oracle: OracleConfig,
}

impl Default for DriverConfig {
    fn default() -> DriverConfig {
        DriverConfig {
            engine: Engine::Cegar,
            unwind: UnwindConfig::default(),
            width: 8,
            max_iterations: 10_000,
            link_pruning: true,
            check_invariants: false,
            seed: 0,
            closure: ClosureConfig::default(),
            oracle: OracleConfig::default(),
        }
    }
}

/// Result of a verification run.
#[derive(Clone, Debug)]
pub enum Verdict {
    Safe,
    Unsafe { witness: Witness },
    Unknown { reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Safe => "SAFE",
            Verdict::Unsafe { .. } => "UNSAFE",
            Verdict::Unknown { .. } => "UNKNOWN",
        }
    }
}

/// Wall time spent in each phase, in milliseconds.
#[derive(Clone, Debug, Default, Serialize)]
pub struct TimeMs {
    pub encode: u64,
    pub solve: u64,
    pub closure: u64,
    pub exact: u64,
    pub total: u64,
}

/// Clause counts of the encoding, by component.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ComponentCounts {
    pub init: usize,
    pub flow: usize,
    pub links: usize,
    pub errors: usize,
    pub sched: usize,
}

/// Machine-readable run statistics.
#[derive(Clone, Debug, Serialize)]
pub struct Stats {
    pub schema_version: u32,
    pub engine: String,
    pub verdict: String,
    pub seed: u64,
    /// Solver calls (refinement iterations for cegar, 1 otherwise).
    pub iterations: usize,
    /// Clauses handed to the solver before any refinement.
    pub clauses_initial: usize,
    /// Clauses added by refinement.
    pub clauses_refinement: usize,
    /// Clause count of the abstraction alone.
    pub clauses_abstraction: usize,
    /// Clause count of the full (abstraction + scheduling) encoding.
    pub clauses_full: usize,
    pub clauses_by_component: ComponentCounts,
    /// Times the exact-order fallback ran because the closure was undecided.
    pub fallback_invocations: usize,
    pub vars: u64,
    pub time_ms: TimeMs,
    /// Complete executions examined (explicit engine only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
}

/// Verdict plus statistics.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: Stats,
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Verifies a source program with the configured engine.
pub fn verify(src: &str, config: &DriverConfig) -> Result<Outcome, DriverError> {
    let started = Instant::now();
    let p = compile(src, &config.unwind)?;
    verify_normalized(&p, config, started)
}

/// Verifies an already-compiled program.
pub fn verify_normalized(
    p: &NormalizedProgram,
    config: &DriverConfig,
    started: Instant,
) -> Result<Outcome, DriverError> {
    match config.engine {
        Engine::Explicit => run_explicit(p, config, started),
        Engine::Monolithic => run_monolithic(p, config, started),
        Engine::Cegar => run_cegar(p, config, started),
    }
}

fn ms(since: Instant) -> u64 {
    since.elapsed().as_millis() as u64
}

fn base_stats(engine: Engine, config: &DriverConfig) -> Stats {
    Stats {
        schema_version: 1,
        engine: engine.to_string(),
        verdict: String::new(),
        seed: config.seed,
        iterations: 0,
        clauses_initial: 0,
        clauses_refinement: 0,
        clauses_abstraction: 0,
        clauses_full: 0,
        clauses_by_component: ComponentCounts::default(),
        fallback_invocations: 0,
        vars: 0,
        time_ms: TimeMs::default(),
        paths: None,
    }
}

fn record_encoding(stats: &mut Stats, enc: &EncodedProgram) {
    stats.clauses_abstraction = enc.abstraction_len();
    stats.clauses_full = enc.full_len();
    stats.clauses_by_component = ComponentCounts {
        init: enc.init.len(),
        flow: enc.flow.len(),
        links: enc.links.len(),
        errors: enc.errors.len(),
        sched: enc.sched.len(),
    };
    stats.vars = enc.num_vars as u64;
}

fn finish(mut stats: Stats, verdict: Verdict, started: Instant) -> Outcome {
    stats.verdict = verdict.name().to_string();
    stats.time_ms.total = ms(started);
    Outcome { verdict, stats }
}

/// Replays a witness in the interpreter; any disagreement is a driver bug.
fn confirm_witness(
    p: &NormalizedProgram,
    width: u32,
    witness: &Witness,
) -> Result<(), DriverError> {
    let result = replay(p, &witness.schedule, width)
        .map_err(|e| DriverError::Internal(format!("witness does not replay: {e}")))?;
    if result.violation.is_none() {
        return Err(DriverError::Internal(
            "witness replays without violating any assertion".to_string(),
        ));
    }
    Ok(())
}

fn run_explicit(
    p: &NormalizedProgram,
    config: &DriverConfig,
    started: Instant,
) -> Result<Outcome, DriverError> {
    let mut stats = base_stats(Engine::Explicit, config);
    let oracle_config = OracleConfig {
        width: config.width,
        ..config.oracle.clone()
    };
    let solve_start = Instant::now();
    let outcome = explore(p, &oracle_config);
    stats.time_ms.solve = ms(solve_start);
    stats.iterations = 1;
    let verdict = match outcome {
        Ok(o) => {
            stats.paths = Some(o.paths);
            match o.verdict {
                OracleVerdict::Safe => Verdict::Safe,
                OracleVerdict::Unsafe { schedule, message } => {
                    let witness = Witness { message, schedule };
                    confirm_witness(p, config.width, &witness)?;
                    Verdict::Unsafe { witness }
                }
            }
        }
        Err(OracleError::StepBudget { limit }) => Verdict::Unknown {
            reason: format!("explicit exploration exceeded the {limit}-step budget"),
        },
        Err(e) => Verdict::Unknown {
            reason: format!("explicit exploration failed: {e}"),
        },
    };
    Ok(finish(stats, verdict, started))
}

/// Fills a fresh solver with variables and clauses.
fn load_solver<'a>(num_vars: u32, clauses: impl Iterator<Item = &'a Vec<satcore::Lit>>) -> Solver {
    let mut solver = Solver::new();
    for _ in 0..num_vars {
        solver.new_var();
    }
    for c in clauses {
        solver.add_clause(c);
    }
    solver
}

/// The executed events of a model, ordered by their clock values.
fn clock_order(enc: &EncodedProgram, model: &Model) -> Vec<EventId> {
    let mut order: Vec<EventId> = (0..enc.events.len())
        .filter(|&e| enc.events[e].guard.eval(model))
        .collect();
    order.sort_by_key(|&e| {
        (
            enc.event_clock(model, e),
            enc.events[e].instance,
            enc.events[e].stmt,
        )
    });
    order
}

fn run_monolithic(
    p: &NormalizedProgram,
    config: &DriverConfig,
    started: Instant,
) -> Result<Outcome, DriverError> {
    let mut stats = base_stats(Engine::Monolithic, config);
    let encode_start = Instant::now();
    let enc = encode(
        p,
        &EncodeConfig {
            width: config.width,
            link_pruning: config.link_pruning,
        },
    );
    stats.time_ms.encode = ms(encode_start);
    record_encoding(&mut stats, &enc);
    stats.clauses_initial = enc.full_len();

    let mut solver = load_solver(enc.num_vars, enc.all_clauses());
    let solve_start = Instant::now();
    let result = solver.solve(&[]);
    stats.time_ms.solve = ms(solve_start);
    stats.iterations = 1;

    let verdict = match result {
        SolveResult::Unsat(_) => Verdict::Safe,
        SolveResult::Sat(model) => {
            if config.check_invariants {
                let (eog, _) = enc.decode_eog(&model).map_err(DriverError::Internal)?;
                eog.validate()
                    .map_err(|e| DriverError::Internal(format!("decoded graph invalid: {e}")))?;
            }
            enc.check_model(&model).map_err(DriverError::Internal)?;
            let order = clock_order(&enc, &model);
            let witness = build_witness(p, &enc, &model, &order).map_err(DriverError::Internal)?;
            confirm_witness(p, config.width, &witness)?;
            Verdict::Unsafe { witness }
        }
    };
    Ok(finish(stats, verdict, started))
}

fn run_cegar(
    p: &NormalizedProgram,
    config: &DriverConfig,
    started: Instant,
) -> Result<Outcome, DriverError> {
    let mut stats = base_stats(Engine::Cegar, config);
    let encode_start = Instant::now();
    let enc = encode(
        p,
        &EncodeConfig {
            width: config.width,
            link_pruning: config.link_pruning,
        },
    );
    stats.time_ms.encode = ms(encode_start);
    record_encoding(&mut stats, &enc);
    stats.clauses_initial = enc.abstraction_len();

    let mut solver = load_solver(enc.num_vars, enc.abstraction_clauses());
    // Lazily built when invariant checking is on: the full encoding, used to
    // confirm each refinement clause's reason admits no real execution.
    let mut full_solver: Option<Solver> = None;
    loop {
        if stats.iterations >= config.max_iterations {
            let reason = format!(
                "no fixpoint within {} refinement iterations",
                config.max_iterations
            );
            return Ok(finish(stats, Verdict::Unknown { reason }, started));
        }
        stats.iterations += 1;

        let solve_start = Instant::now();
        let result = solver.solve(&[]);
        stats.time_ms.solve += ms(solve_start);
        let model = match result {
            SolveResult::Unsat(_) => {
                return Ok(finish(stats, Verdict::Safe, started));
            }
            SolveResult::Sat(model) => model,
        };

        let (eog, orig) = enc.decode_eog(&model).map_err(DriverError::Internal)?;
        if config.check_invariants {
            eog.validate()
                .map_err(|e| DriverError::Internal(format!("decoded graph invalid: {e}")))?;
        }

        let closure_start = Instant::now();
        let closure = eog.close(&config.closure);
        stats.time_ms.closure += ms(closure_start);

        let refinement = if closure.is_infeasible() {
            let clauses = closure.refutation_clauses();
            if clauses.is_empty() {
                return Err(DriverError::Internal(
                    "infeasible closure produced no refinement clauses".to_string(),
                ));
            }
            clauses
        } else {
            stats.fallback_invocations += 1;
            let exact_start = Instant::now();
            let verdict = validate_exact(&eog)
                .map_err(|e| DriverError::Internal(format!("exact order check failed: {e}")))?;
            stats.time_ms.exact += ms(exact_start);
            match verdict {
                ExactVerdict::Feasible { order } => {
                    let order: Vec<EventId> = order.into_iter().map(|k| orig[k]).collect();
                    let witness =
                        build_witness(p, &enc, &model, &order).map_err(DriverError::Internal)?;
                    confirm_witness(p, config.width, &witness)?;
                    return Ok(finish(stats, Verdict::Unsafe { witness }, started));
                }
                ExactVerdict::Infeasible { reason } => vec![blocking_clause(&reason)],
            }
        };

        for clause in &refinement {
            // Progress: the clause must rule out the model we just saw.
            if clause.iter().any(|&l| model.value(l)) {
                return Err(DriverError::Internal(
                    "refinement clause does not block the current model".to_string(),
                ));
            }
            if config.check_invariants {
                // Soundness: the blocked combination must be unrealizable
                // even with full scheduling constraints, or the clause would
                // cut off a genuine counterexample.
                let checker =
                    full_solver.get_or_insert_with(|| load_solver(enc.num_vars, enc.all_clauses()));
                let reason: Vec<_> = clause.iter().map(|&l| !l).collect();
                if let SolveResult::Sat(_) = checker.solve(&reason) {
                    return Err(DriverError::Internal(
                        "refinement clause blocks a feasible execution".to_string(),
                    ));
                }
            }
            solver.add_clause(clause);
        }
        stats.clauses_refinement += refinement.len();
    }
}
