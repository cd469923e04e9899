//! Static checks over the parsed AST: declarations, scoping, and the
//! spawn/join discipline.
//!
//! Handles are ordinary locals bound by exactly one `spawn`; they may not be
//! read, reassigned, or joined twice, and spawn/join must sit directly in a
//! function body (thread creation under a branch or loop has no well-defined
//! program order here, so it is rejected up front).

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::FrontendError;

pub fn check(program: &Program) -> Result<(), FrontendError> {
    let mut shared: HashMap<&str, &SharedDecl> = HashMap::new();
    for decl in &program.shared {
        check_name(&decl.name, decl.pos)?;
        if shared.insert(&decl.name, decl).is_some() {
            return Err(FrontendError::Duplicate {
                pos: decl.pos,
                name: decl.name.clone(),
            });
        }
    }
    let mut threads: HashSet<&str> = HashSet::new();
    for def in &program.threads {
        check_name(&def.name, def.pos)?;
        if !threads.insert(&def.name) {
            return Err(FrontendError::Duplicate {
                pos: def.pos,
                name: def.name.clone(),
            });
        }
    }
    for def in &program.threads {
        check_body(&def.body, &shared, &threads)?;
    }
    check_body(&program.main, &shared, &threads)?;
    Ok(())
}

fn check_name(name: &str, pos: Pos) -> Result<(), FrontendError> {
    if name.starts_with("__") {
        Err(FrontendError::ReservedName { pos })
    } else {
        Ok(())
    }
}

/// Per-local bookkeeping accumulated while walking one function body.
#[derive(Default)]
struct LocalUse {
    spawn: Option<(usize, Pos)>,
    join: Option<(usize, Pos)>,
    used_as_value: Option<Pos>,
}

struct BodyChecker<'a> {
    shared: &'a HashMap<&'a str, &'a SharedDecl>,
    threads: &'a HashSet<&'a str>,
    /// Innermost-last scope stack mapping local names to their use record.
    scopes: Vec<HashMap<String, usize>>,
    locals: Vec<(String, Pos, LocalUse)>,
    /// Running count of statements, used to order spawns against joins.
    stmt_counter: usize,
}

fn check_body(
    body: &Block,
    shared: &HashMap<&str, &SharedDecl>,
    threads: &HashSet<&str>,
) -> Result<(), FrontendError> {
    let mut checker = BodyChecker {
        shared,
        threads,
        scopes: vec![HashMap::new()],
        locals: Vec::new(),
        stmt_counter: 0,
    };
    checker.block(body, 0)?;
    // Handle discipline is checked after the walk so the error points at the
    // offending use regardless of statement order.
    for (name, _decl_pos, uses) in &checker.locals {
        if let Some((spawn_idx, _)) = uses.spawn {
            if let Some(pos) = uses.used_as_value {
                return Err(FrontendError::HandleAsValue {
                    pos,
                    name: name.clone(),
                });
            }
            if let Some((join_idx, join_pos)) = uses.join {
                if join_idx < spawn_idx {
                    return Err(FrontendError::JoinBeforeSpawn {
                        pos: join_pos,
                        name: name.clone(),
                    });
                }
            }
        } else if let Some((_, join_pos)) = uses.join {
            return Err(FrontendError::JoinOfNonHandle {
                pos: join_pos,
                name: name.clone(),
            });
        }
    }
    Ok(())
}

impl<'a> BodyChecker<'a> {
    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes
            .iter()
            .rev()
            .find_map(|scope| scope.get(name).copied())
    }

    fn block(&mut self, block: &Block, depth: u32) -> Result<(), FrontendError> {
        self.scopes.push(HashMap::new());
        for stmt in &block.stmts {
            self.stmt(stmt, depth)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, stmt: &Stmt, depth: u32) -> Result<(), FrontendError> {
        let idx = self.stmt_counter;
        self.stmt_counter += 1;
        match &stmt.kind {
            StmtKind::Local { name, init } => {
                check_name(name, stmt.pos)?;
                if let Some(e) = init {
                    self.expr(e)?;
                }
                // No shadowing: a local may not reuse a shared name or any
                // name visible in an enclosing scope.
                if self.shared.contains_key(name.as_str()) || self.lookup(name).is_some() {
                    return Err(FrontendError::Duplicate {
                        pos: stmt.pos,
                        name: name.clone(),
                    });
                }
                let id = self.locals.len();
                self.locals
                    .push((name.clone(), stmt.pos, LocalUse::default()));
                self.scopes.last_mut().unwrap().insert(name.clone(), id);
            }
            StmtKind::Assign { name, value } => {
                self.expr(value)?;
                if let Some(id) = self.lookup(name) {
                    self.note_value_use(id, stmt.pos);
                } else if !self.shared.contains_key(name.as_str()) {
                    return Err(FrontendError::Undeclared {
                        pos: stmt.pos,
                        name: name.clone(),
                    });
                }
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                self.expr(cond)?;
                self.block(then_branch, depth + 1)?;
                if let Some(e) = else_branch {
                    self.block(e, depth + 1)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.expr(cond)?;
                self.block(body, depth + 1)?;
            }
            StmtKind::Assert { cond } | StmtKind::Assume { cond } => {
                self.expr(cond)?;
            }
            StmtKind::Spawn { handle, thread } => {
                if depth > 0 {
                    return Err(FrontendError::ConditionalSpawn { pos: stmt.pos });
                }
                if !self.threads.contains(thread.as_str()) {
                    return Err(FrontendError::UnknownThread {
                        pos: stmt.pos,
                        name: thread.clone(),
                    });
                }
                let Some(id) = self.lookup(handle) else {
                    return Err(FrontendError::Undeclared {
                        pos: stmt.pos,
                        name: handle.clone(),
                    });
                };
                let uses = &mut self.locals[id].2;
                if uses.spawn.is_some() {
                    return Err(FrontendError::HandleReused {
                        pos: stmt.pos,
                        name: handle.clone(),
                    });
                }
                uses.spawn = Some((idx, stmt.pos));
            }
            StmtKind::Join { handle } => {
                if depth > 0 {
                    return Err(FrontendError::ConditionalSpawn { pos: stmt.pos });
                }
                let Some(id) = self.lookup(handle) else {
                    return Err(FrontendError::Undeclared {
                        pos: stmt.pos,
                        name: handle.clone(),
                    });
                };
                let uses = &mut self.locals[id].2;
                if uses.join.is_some() {
                    return Err(FrontendError::DoubleJoin {
                        pos: stmt.pos,
                        name: handle.clone(),
                    });
                }
                uses.join = Some((idx, stmt.pos));
            }
        }
        Ok(())
    }

    fn note_value_use(&mut self, id: usize, pos: Pos) {
        let uses = &mut self.locals[id].2;
        if uses.used_as_value.is_none() {
            uses.used_as_value = Some(pos);
        }
    }

    fn expr(&mut self, expr: &Expr) -> Result<(), FrontendError> {
        match expr {
            Expr::Int(_) | Expr::Nondet => Ok(()),
            Expr::Var { name, pos } => {
                if let Some(id) = self.lookup(name) {
                    self.note_value_use(id, *pos);
                    Ok(())
                } else if self.shared.contains_key(name.as_str()) {
                    Ok(())
                } else {
                    Err(FrontendError::Undeclared {
                        pos: *pos,
                        name: name.clone(),
                    })
                }
            }
            Expr::Unary { operand, .. } => self.expr(operand),
            Expr::Binary { lhs, rhs, .. } => {
                self.expr(lhs)?;
                self.expr(rhs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn err(src: &str) -> FrontendError {
        parse(src).unwrap_err()
    }

    #[test]
    fn accepts_well_formed_program() {
        let src = "
            shared int x;
            thread t { x = x + 1; }
            main {
                local int h;
                h = spawn t;
                join h;
                assert(x >= 0);
            }
        ";
        assert!(parse(src).is_ok());
    }

    #[test]
    fn rejects_duplicate_shared() {
        assert!(matches!(
            err("shared int x; shared int x; main { }"),
            FrontendError::Duplicate { .. }
        ));
    }

    #[test]
    fn rejects_undeclared_variable() {
        assert!(matches!(
            err("main { assert(y == 0); }"),
            FrontendError::Undeclared { .. }
        ));
    }

    #[test]
    fn rejects_local_out_of_scope() {
        let src = "main { if (1) { local int a = 1; } assert(a == 1); }";
        assert!(matches!(err(src), FrontendError::Undeclared { .. }));
    }

    #[test]
    fn rejects_shadowing() {
        assert!(matches!(
            err("shared int x; main { local int x; }"),
            FrontendError::Duplicate { .. }
        ));
        assert!(matches!(
            err("main { local int a; if (1) { local int a; } }"),
            FrontendError::Duplicate { .. }
        ));
    }

    #[test]
    fn rejects_unknown_spawn_target() {
        assert!(matches!(
            err("main { local int h; h = spawn nosuch; }"),
            FrontendError::UnknownThread { .. }
        ));
    }

    #[test]
    fn rejects_handle_misuse() {
        let spawned = "thread t { } main { local int h; h = spawn t; ";
        assert!(matches!(
            err(&format!("{spawned} h = 3; }}")),
            FrontendError::HandleAsValue { .. }
        ));
        assert!(matches!(
            err(&format!("{spawned} assert(h == 0); }}")),
            FrontendError::HandleAsValue { .. }
        ));
        assert!(matches!(
            err(&format!("{spawned} h = spawn t; }}")),
            FrontendError::HandleReused { .. }
        ));
        assert!(matches!(
            err(&format!("{spawned} join h; join h; }}")),
            FrontendError::DoubleJoin { .. }
        ));
    }

    #[test]
    fn rejects_join_of_non_handle() {
        assert!(matches!(
            err("main { local int a = 1; join a; }"),
            FrontendError::JoinOfNonHandle { .. }
        ));
    }

    #[test]
    fn rejects_join_before_spawn() {
        assert!(matches!(
            err("thread t { } main { local int h; join h; h = spawn t; }"),
            FrontendError::JoinBeforeSpawn { .. }
        ));
    }

    #[test]
    fn rejects_conditional_spawn_and_join() {
        assert!(matches!(
            err("thread t { } main { local int h; if (1) { h = spawn t; } }"),
            FrontendError::ConditionalSpawn { .. }
        ));
        assert!(matches!(
            err("thread t { } main { local int h; h = spawn t; while (1) { join h; } }"),
            FrontendError::ConditionalSpawn { .. }
        ));
    }

    #[test]
    fn rejects_reserved_prefix() {
        assert!(matches!(
            err("main { local int __tmp; }"),
            FrontendError::ReservedName { .. }
        ));
    }
}
