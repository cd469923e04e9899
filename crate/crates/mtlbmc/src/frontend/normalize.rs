//! Flattening into guarded statements with explicit shared-access events.
//!
//! Input must be loop-free (run `inline_and_unwind` first). Each thread
//! instance becomes a flat statement list; branching disappears into per
//! statement guards, interned as chains of (local, polarity) conditions.
//! Statements touching shared state are split so every statement performs at
//! most one shared access: reads are hoisted left-to-right into fresh local
//! temporaries, so `x = y + 1` with `x`, `y` shared becomes `__r0 = y` (a
//! read event) followed by `x = __r0 + 1` (a write event). Shared
//! initializers become write events at the head of `main`.

use super::ast::{BinOp, Block, Expr, Pos, Program, StmtKind, UnOp};
use super::FrontendError;

/// Index of a local slot within one thread instance.
pub type LocalId = usize;
/// Index into [`NormalizedProgram::events`].
pub type EventId = usize;
/// Index into a thread instance's guard table.
pub type GuardId = u32;
/// Index into [`NormalizedProgram::shared`].
pub type SharedId = usize;

/// The always-true guard; entry 0 of every guard table.
pub const GUARD_TRUE: GuardId = 0;

/// A shared variable and its initial value.
#[derive(Clone, Debug)]
pub struct SharedVar {
    pub name: String,
    pub init: i64,
}

/// Read or write access to a shared variable.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

/// One shared access: which instance and statement performs it, on which
/// variable, and in which direction.
#[derive(Clone, Debug)]
pub struct EventInfo {
    pub instance: usize,
    pub stmt: usize,
    pub var: SharedId,
    pub access: Access,
}

/// One node of a guard chain: `parent ∧ (local is truthy) == expect`.
/// The root (id 0) has `cond == None` and means `true`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardNode {
    pub parent: GuardId,
    pub cond: Option<(LocalId, bool)>,
}

/// A flattened statement.
#[derive(Clone, Debug)]
pub struct NStmt {
    pub guard: GuardId,
    pub kind: NStmtKind,
    pub pos: Pos,
    /// Rendered form for witnesses and diagnostics.
    pub text: String,
    /// Number of `nondet()` occurrences in the contained expression.
    pub nondet_sites: u32,
}

#[derive(Clone, Debug)]
pub enum NStmtKind {
    /// `slot := expr` over locals only.
    LocalAssign { slot: LocalId, expr: NExpr },
    /// `slot := shared` — the unique shared read of this statement.
    SharedRead { slot: LocalId, event: EventId },
    /// `shared := expr` over locals only.
    SharedWrite { event: EventId, expr: NExpr },
    /// Claim: `cond` must hold whenever the guard does.
    Assert { cond: NExpr },
    /// Blocking constraint: executions where the guard holds and `cond`
    /// does not are discarded.
    Assume { cond: NExpr },
    /// Makes `child` runnable.
    Spawn { child: usize },
    /// Blocks until `child` has finished.
    Join { child: usize },
}

/// Expression over locals: shared reads have been hoisted away.
#[derive(Clone, Debug)]
pub enum NExpr {
    Int(i64),
    Local(LocalId),
    Nondet,
    Unary {
        op: UnOp,
        operand: Box<NExpr>,
    },
    Binary {
        op: BinOp,
        lhs: Box<NExpr>,
        rhs: Box<NExpr>,
    },
}

/// One runtime thread: `main` is instance 0; every spawn statement creates
/// one more instance of the named thread's body.
#[derive(Clone, Debug)]
pub struct ThreadInstance {
    pub name: String,
    pub stmts: Vec<NStmt>,
    pub guards: Vec<GuardNode>,
    pub local_names: Vec<String>,
    /// `(parent instance, statement index of the spawn)`, `None` for main.
    pub spawned_at: Option<(usize, usize)>,
    /// `(parent instance, statement index of the join)`, if joined.
    pub joined_at: Option<(usize, usize)>,
}

/// The flattened program: the common input of the encoder, the interpreter,
/// and the witness machinery.
#[derive(Clone, Debug)]
pub struct NormalizedProgram {
    pub shared: Vec<SharedVar>,
    pub instances: Vec<ThreadInstance>,
    pub events: Vec<EventInfo>,
    pub num_asserts: usize,
}

impl NormalizedProgram {
    /// Looks up a shared variable by name.
    pub fn shared_id(&self, name: &str) -> Option<SharedId> {
        self.shared.iter().position(|v| v.name == name)
    }

    /// Events of one instance in statement order.
    pub fn events_of_instance(&self, instance: usize) -> impl Iterator<Item = EventId> + '_ {
        self.events
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.instance == instance)
            .map(|(i, _)| i)
    }
}

/// Flattens a loop-free checked AST. Total on valid input; `while` or a
/// violated spawn discipline indicates a pipeline bug and reports as
/// `Internal`/`ConditionalSpawn`.
pub fn normalize(program: &Program) -> Result<NormalizedProgram, FrontendError> {
    let shared: Vec<SharedVar> = program
        .shared
        .iter()
        .map(|d| SharedVar {
            name: d.name.clone(),
            init: d.init,
        })
        .collect();

    let mut norm = Normalizer {
        program,
        shared,
        instances: Vec::new(),
        events: Vec::new(),
        num_asserts: 0,
        spawn_counts: vec![0; program.threads.len()],
    };

    // Instance 0 is main; its first statements write the shared initializers.
    norm.instances
        .push(InstanceBuild::new("main".to_string(), None));
    for (var, decl) in norm.shared.clone().iter().enumerate() {
        let event = norm.add_event(0, 0, var, Access::Write);
        let inst = &mut norm.instances[0];
        let idx = inst.stmts.len();
        norm.events[event].stmt = idx;
        inst.stmts.push(NStmt {
            guard: GUARD_TRUE,
            kind: NStmtKind::SharedWrite {
                event,
                expr: NExpr::Int(decl.init),
            },
            pos: Pos::default(),
            text: format!("{} = {}", decl.name, decl.init),
            nondet_sites: 0,
        });
    }
    norm.flatten_instance(0, &program.main)?;

    // Children are queued by their spawn statements; build them in id order.
    let mut next = 1;
    while next < norm.instances.len() {
        let thread_idx = norm.instances[next]
            .source_thread
            .expect("child instance has a source thread");
        let body = program.threads[thread_idx].body.clone();
        norm.flatten_instance(next, &body)?;
        next += 1;
    }

    Ok(NormalizedProgram {
        shared: norm.shared,
        instances: norm
            .instances
            .into_iter()
            .map(InstanceBuild::finish)
            .collect(),
        events: norm.events,
        num_asserts: norm.num_asserts,
    })
}

struct InstanceBuild {
    name: String,
    source_thread: Option<usize>,
    stmts: Vec<NStmt>,
    guards: Vec<GuardNode>,
    local_names: Vec<String>,
    spawned_at: Option<(usize, usize)>,
    joined_at: Option<(usize, usize)>,
}

impl InstanceBuild {
    fn new(name: String, source_thread: Option<usize>) -> InstanceBuild {
        InstanceBuild {
            name,
            source_thread,
            stmts: Vec::new(),
            guards: vec![GuardNode {
                parent: GUARD_TRUE,
                cond: None,
            }],
            local_names: Vec::new(),
            spawned_at: None,
            joined_at: None,
        }
    }

    fn finish(self) -> ThreadInstance {
        ThreadInstance {
            name: self.name,
            stmts: self.stmts,
            guards: self.guards,
            local_names: self.local_names,
            spawned_at: self.spawned_at,
            joined_at: self.joined_at,
        }
    }
}

struct Normalizer<'a> {
    program: &'a Program,
    shared: Vec<SharedVar>,
    instances: Vec<InstanceBuild>,
    events: Vec<EventInfo>,
    num_asserts: usize,
    spawn_counts: Vec<usize>,
}

/// Per-instance flattening state.
struct Ctx {
    instance: usize,
    /// Scope stack mapping source names to slots.
    scopes: Vec<Vec<(String, LocalId)>>,
    /// Handles bound so far: source name → child instance.
    handles: Vec<(String, usize)>,
    temp_count: usize,
}

impl Ctx {
    fn lookup(&self, name: &str) -> Option<LocalId> {
        self.scopes
            .iter()
            .rev()
            .find_map(|scope| scope.iter().rev().find(|(n, _)| n == name).map(|&(_, s)| s))
    }
}

impl<'a> Normalizer<'a> {
    fn add_event(
        &mut self,
        instance: usize,
        stmt: usize,
        var: SharedId,
        access: Access,
    ) -> EventId {
        self.events.push(EventInfo {
            instance,
            stmt,
            var,
            access,
        });
        self.events.len() - 1
    }

    fn new_local(&mut self, instance: usize, name: String) -> LocalId {
        let names = &mut self.instances[instance].local_names;
        names.push(name);
        names.len() - 1
    }

    fn intern_guard(&mut self, instance: usize, parent: GuardId, cond: (LocalId, bool)) -> GuardId {
        let guards = &mut self.instances[instance].guards;
        let node = GuardNode {
            parent,
            cond: Some(cond),
        };
        if let Some(found) = guards.iter().position(|g| *g == node) {
            return found as GuardId;
        }
        guards.push(node);
        (guards.len() - 1) as GuardId
    }

    fn flatten_instance(&mut self, instance: usize, body: &Block) -> Result<(), FrontendError> {
        let mut ctx = Ctx {
            instance,
            scopes: vec![Vec::new()],
            handles: Vec::new(),
            temp_count: 0,
        };
        self.flatten_block(&mut ctx, body, GUARD_TRUE)
    }

    fn flatten_block(
        &mut self,
        ctx: &mut Ctx,
        block: &Block,
        guard: GuardId,
    ) -> Result<(), FrontendError> {
        ctx.scopes.push(Vec::new());
        for stmt in &block.stmts {
            self.flatten_stmt(ctx, stmt.pos, &stmt.kind, guard)?;
        }
        ctx.scopes.pop();
        Ok(())
    }

    fn flatten_stmt(
        &mut self,
        ctx: &mut Ctx,
        pos: Pos,
        kind: &StmtKind,
        guard: GuardId,
    ) -> Result<(), FrontendError> {
        match kind {
            StmtKind::Local { name, init } => {
                // Declaration first or the initializer could see the new slot.
                let value = init
                    .as_ref()
                    .map(|e| self.hoist_reads(ctx, e, guard, pos))
                    .transpose()?;
                let slot = self.new_local(ctx.instance, name.clone());
                ctx.scopes.last_mut().unwrap().push((name.clone(), slot));
                if let Some(expr) = value {
                    self.push_local_assign(ctx, slot, expr, guard, pos);
                }
                // Without an initializer the slot holds 0, matching the
                // interpreter's default environment; no statement needed.
            }
            StmtKind::Assign { name, value } => {
                let expr = self.hoist_reads(ctx, value, guard, pos)?;
                if let Some(slot) = ctx.lookup(name) {
                    self.push_local_assign(ctx, slot, expr, guard, pos);
                } else {
                    let var = self.shared_id_checked(name, pos)?;
                    let instance = ctx.instance;
                    let stmt_idx = self.instances[instance].stmts.len();
                    let event = self.add_event(instance, stmt_idx, var, Access::Write);
                    let text = format!(
                        "{} = {}",
                        self.shared[var].name,
                        self.render_expr(instance, &expr)
                    );
                    let nondet_sites = count_nondet(&expr);
                    self.instances[instance].stmts.push(NStmt {
                        guard,
                        kind: NStmtKind::SharedWrite { event, expr },
                        pos,
                        text,
                        nondet_sites,
                    });
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond_expr = self.hoist_reads(ctx, cond, guard, pos)?;
                let cond_slot = self.fresh_temp(ctx, "c");
                self.push_local_assign(ctx, cond_slot, cond_expr, guard, pos);
                let then_guard = self.intern_guard(ctx.instance, guard, (cond_slot, true));
                self.flatten_block(ctx, then_branch, then_guard)?;
                if let Some(else_block) = else_branch {
                    let else_guard = self.intern_guard(ctx.instance, guard, (cond_slot, false));
                    self.flatten_block(ctx, else_block, else_guard)?;
                }
            }
            StmtKind::While { .. } => {
                return Err(FrontendError::Internal(format!(
                    "loop at {pos} survived unwinding"
                )));
            }
            StmtKind::Assert { cond } => {
                let expr = self.hoist_reads(ctx, cond, guard, pos)?;
                self.num_asserts += 1;
                let instance = ctx.instance;
                let text = format!("assert({})", self.render_expr(instance, &expr));
                let nondet_sites = count_nondet(&expr);
                self.instances[instance].stmts.push(NStmt {
                    guard,
                    kind: NStmtKind::Assert { cond: expr },
                    pos,
                    text,
                    nondet_sites,
                });
            }
            StmtKind::Assume { cond } => {
                let expr = self.hoist_reads(ctx, cond, guard, pos)?;
                let instance = ctx.instance;
                let text = format!("assume({})", self.render_expr(instance, &expr));
                let nondet_sites = count_nondet(&expr);
                self.instances[instance].stmts.push(NStmt {
                    guard,
                    kind: NStmtKind::Assume { cond: expr },
                    pos,
                    text,
                    nondet_sites,
                });
            }
            StmtKind::Spawn { handle, thread } => {
                if guard != GUARD_TRUE {
                    return Err(FrontendError::ConditionalSpawn { pos });
                }
                let thread_idx = self
                    .program
                    .threads
                    .iter()
                    .position(|t| t.name == *thread)
                    .ok_or_else(|| FrontendError::UnknownThread {
                        pos,
                        name: thread.clone(),
                    })?;
                self.spawn_counts[thread_idx] += 1;
                let occurrence = self.spawn_counts[thread_idx];
                let name = if occurrence == 1 {
                    thread.clone()
                } else {
                    format!("{thread}#{occurrence}")
                };
                let child = self.instances.len();
                let mut build = InstanceBuild::new(name, Some(thread_idx));
                let instance = ctx.instance;
                let stmt_idx = self.instances[instance].stmts.len();
                build.spawned_at = Some((instance, stmt_idx));
                self.instances.push(build);
                ctx.handles.push((handle.clone(), child));
                let text = format!("{handle} = spawn {thread}");
                self.instances[instance].stmts.push(NStmt {
                    guard,
                    kind: NStmtKind::Spawn { child },
                    pos,
                    text,
                    nondet_sites: 0,
                });
            }
            StmtKind::Join { handle } => {
                if guard != GUARD_TRUE {
                    return Err(FrontendError::ConditionalSpawn { pos });
                }
                let child = ctx
                    .handles
                    .iter()
                    .rev()
                    .find(|(h, _)| h == handle)
                    .map(|&(_, c)| c)
                    .ok_or_else(|| FrontendError::JoinBeforeSpawn {
                        pos,
                        name: handle.clone(),
                    })?;
                let instance = ctx.instance;
                let stmt_idx = self.instances[instance].stmts.len();
                self.instances[child].joined_at = Some((instance, stmt_idx));
                self.instances[instance].stmts.push(NStmt {
                    guard,
                    kind: NStmtKind::Join { child },
                    pos,
                    text: format!("join {handle}"),
                    nondet_sites: 0,
                });
            }
        }
        Ok(())
    }

    fn shared_id_checked(&self, name: &str, pos: Pos) -> Result<SharedId, FrontendError> {
        self.shared
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| FrontendError::Undeclared {
                pos,
                name: name.to_string(),
            })
    }

    fn fresh_temp(&mut self, ctx: &mut Ctx, tag: &str) -> LocalId {
        let name = format!("__{tag}{}", ctx.temp_count);
        ctx.temp_count += 1;
        self.new_local(ctx.instance, name)
    }

    fn push_local_assign(
        &mut self,
        ctx: &mut Ctx,
        slot: LocalId,
        expr: NExpr,
        guard: GuardId,
        pos: Pos,
    ) {
        let instance = ctx.instance;
        let text = format!(
            "{} = {}",
            self.instances[instance].local_names[slot],
            self.render_expr(instance, &expr)
        );
        let nondet_sites = count_nondet(&expr);
        self.instances[instance].stmts.push(NStmt {
            guard,
            kind: NStmtKind::LocalAssign { slot, expr },
            pos,
            text,
            nondet_sites,
        });
    }

    /// Rewrites an expression over locals, emitting one `SharedRead`
    /// statement per shared occurrence in left-to-right order.
    fn hoist_reads(
        &mut self,
        ctx: &mut Ctx,
        expr: &Expr,
        guard: GuardId,
        pos: Pos,
    ) -> Result<NExpr, FrontendError> {
        Ok(match expr {
            Expr::Int(n) => NExpr::Int(*n),
            Expr::Nondet => NExpr::Nondet,
            Expr::Var { name, pos: vpos } => {
                if let Some(slot) = ctx.lookup(name) {
                    NExpr::Local(slot)
                } else {
                    let var = self.shared_id_checked(name, *vpos)?;
                    let temp = self.fresh_temp(ctx, "r");
                    let instance = ctx.instance;
                    let stmt_idx = self.instances[instance].stmts.len();
                    let event = self.add_event(instance, stmt_idx, var, Access::Read);
                    let text = format!(
                        "{} = {}",
                        self.instances[instance].local_names[temp], self.shared[var].name
                    );
                    self.instances[instance].stmts.push(NStmt {
                        guard,
                        kind: NStmtKind::SharedRead { slot: temp, event },
                        pos,
                        text,
                        nondet_sites: 0,
                    });
                    NExpr::Local(temp)
                }
            }
            Expr::Unary { op, operand } => NExpr::Unary {
                op: *op,
                operand: Box::new(self.hoist_reads(ctx, operand, guard, pos)?),
            },
            Expr::Binary { op, lhs, rhs } => {
                let l = self.hoist_reads(ctx, lhs, guard, pos)?;
                let r = self.hoist_reads(ctx, rhs, guard, pos)?;
                NExpr::Binary {
                    op: *op,
                    lhs: Box::new(l),
                    rhs: Box::new(r),
                }
            }
        })
    }

    fn render_expr(&self, instance: usize, expr: &NExpr) -> String {
        render_nexpr(&self.instances[instance].local_names, expr)
    }
}

fn count_nondet(expr: &NExpr) -> u32 {
    match expr {
        NExpr::Int(_) | NExpr::Local(_) => 0,
        NExpr::Nondet => 1,
        NExpr::Unary { operand, .. } => count_nondet(operand),
        NExpr::Binary { lhs, rhs, .. } => count_nondet(lhs) + count_nondet(rhs),
    }
}

/// Renders a normalized expression with full parenthesization.
pub fn render_nexpr(local_names: &[String], expr: &NExpr) -> String {
    match expr {
        NExpr::Int(n) => n.to_string(),
        NExpr::Local(slot) => local_names[*slot].clone(),
        NExpr::Nondet => "nondet()".to_string(),
        NExpr::Unary { op, operand } => {
            format!("{op}{}", render_nexpr_atom(local_names, operand))
        }
        NExpr::Binary { op, lhs, rhs } => format!(
            "{} {op} {}",
            render_nexpr_atom(local_names, lhs),
            render_nexpr_atom(local_names, rhs)
        ),
    }
}

fn render_nexpr_atom(local_names: &[String], expr: &NExpr) -> String {
    match expr {
        NExpr::Int(_) | NExpr::Local(_) | NExpr::Nondet => render_nexpr(local_names, expr),
        _ => format!("({})", render_nexpr(local_names, expr)),
    }
}
