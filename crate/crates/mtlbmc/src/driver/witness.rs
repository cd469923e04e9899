//! Reconstructs a statement-level schedule from a model and an event order.
//!
//! A satisfying assignment fixes which statements execute, every value, and
//! (through the chosen event order) when each shared access happens. This
//! module linearizes that into a [`Schedule`] the interpreter can replay:
//! shared accesses follow the given order exactly, and everything else —
//! local statements, guard-false statements, spawns and joins — is flushed
//! as late as its thread's next access (or program end) requires.

use satcore::Model;
use serde::{Deserialize, Serialize};

use crate::encoder::EncodedProgram;
use crate::frontend::{EventId, NStmtKind, NormalizedProgram};
use crate::oracle::{Schedule, ScheduleStep, WriteRecord};

/// A replayable counterexample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub message: String,
    pub schedule: Schedule,
}

/// Builds a schedule that performs the executed shared accesses in `order`
/// (original event ids). Fails only on internal inconsistencies.
pub fn build_witness(
    p: &NormalizedProgram,
    enc: &EncodedProgram,
    model: &Model,
    order: &[EventId],
) -> Result<Witness, String> {
    let mut b = Builder {
        p,
        enc,
        model,
        cursor: vec![0; p.instances.len()],
        started: (0..p.instances.len()).map(|i| i == 0).collect(),
        steps: Vec::new(),
    };
    for &e in order {
        let info = &p.events[e];
        b.ensure_running(info.instance)?;
        b.advance_to(info.instance, info.stmt)?;
        if b.cursor[info.instance] != info.stmt {
            return Err(format!(
                "event order revisits statement {} of instance {}",
                info.stmt, info.instance
            ));
        }
        b.emit(info.instance);
    }
    for i in 0..p.instances.len() {
        if b.started[i] {
            b.run_to_end(i)?;
        }
    }

    let message = enc
        .violations
        .iter()
        .find(|v| model.value(v.lit))
        .map(|v| format!("violated: {}", v.text))
        .unwrap_or_else(|| "assertion violated".to_string());
    Ok(Witness {
        message,
        schedule: Schedule { steps: b.steps },
    })
}

struct Builder<'a> {
    p: &'a NormalizedProgram,
    enc: &'a EncodedProgram,
    model: &'a Model,
    cursor: Vec<usize>,
    started: Vec<bool>,
    steps: Vec<ScheduleStep>,
}

impl Builder<'_> {
    fn executed(&self, instance: usize, stmt: usize) -> bool {
        self.enc.stmt_executed(self.model, instance, stmt)
    }

    fn finished(&self, instance: usize) -> bool {
        self.cursor[instance] == self.p.instances[instance].stmts.len()
    }

    /// Emits the step at `cursor[instance]` and advances.
    fn emit(&mut self, instance: usize) {
        let s = self.cursor[instance];
        let stmt = &self.p.instances[instance].stmts[s];
        let executed = self.executed(instance, s);
        let nondet = if executed {
            self.enc.nondet_values(self.model, instance, s)
        } else {
            Vec::new()
        };
        let write = match &stmt.kind {
            NStmtKind::SharedWrite { event, .. } if executed => Some(WriteRecord {
                var: self.p.shared[self.p.events[*event].var].name.clone(),
                value: self.enc.event_value(self.model, *event),
            }),
            _ => None,
        };
        self.steps.push(ScheduleStep {
            instance,
            thread: self.p.instances[instance].name.clone(),
            stmt: s,
            text: stmt.text.clone(),
            executed,
            nondet,
            write,
        });
        self.cursor[instance] += 1;
        if executed {
            if let NStmtKind::Spawn { child } = stmt.kind {
                self.started[child] = true;
            }
        }
    }

    /// Makes sure an instance has been spawned, emitting its creator's steps
    /// up to and including the spawn.
    fn ensure_running(&mut self, instance: usize) -> Result<(), String> {
        if self.started[instance] {
            return Ok(());
        }
        let (parent, spawn_stmt) = self.p.instances[instance]
            .spawned_at
            .ok_or_else(|| format!("instance {instance} has no spawner"))?;
        self.ensure_running(parent)?;
        self.advance_to(parent, spawn_stmt + 1)?;
        if !self.started[instance] {
            return Err(format!("spawn of instance {instance} did not execute"));
        }
        Ok(())
    }

    /// Emits steps of `instance` until its cursor reaches `target`. Shared
    /// accesses must not occur on the way — they are scheduled by the caller.
    fn advance_to(&mut self, instance: usize, target: usize) -> Result<(), String> {
        while self.cursor[instance] < target {
            let s = self.cursor[instance];
            let stmt = &self.p.instances[instance].stmts[s];
            if self.executed(instance, s) {
                match &stmt.kind {
                    NStmtKind::SharedRead { .. } | NStmtKind::SharedWrite { .. } => {
                        return Err(format!(
                            "executed access at instance {instance} stmt {s} \
                             missing from the event order"
                        ));
                    }
                    NStmtKind::Join { child } => {
                        let child = *child;
                        if !self.finished(child) {
                            self.run_to_end(child)?;
                        }
                    }
                    _ => {}
                }
            }
            self.emit(instance);
        }
        Ok(())
    }

    fn run_to_end(&mut self, instance: usize) -> Result<(), String> {
        let end = self.p.instances[instance].stmts.len();
        self.advance_to(instance, end)
    }
}
