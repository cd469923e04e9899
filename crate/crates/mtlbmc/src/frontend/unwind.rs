//! Loop unwinding and the spawn-recursion check.
//!
//! `while (c) { B }` at depth `d` becomes `d` nested copies of
//! `if (c) { B; ... }` with the innermost level closed by `assume(!c)`
//! (or `assert(!c)` when unwinding assertions are requested, which turns an
//! insufficient depth into a reported violation instead of silently pruning
//! the deeper executions).

use std::collections::HashMap;

use super::ast::*;
use super::FrontendError;

/// Unwinding parameters.
#[derive(Clone, Debug)]
pub struct UnwindConfig {
    /// Number of loop body copies per `while`.
    pub depth: u32,
    /// Close loops with `assert(!cond)` instead of `assume(!cond)`.
    pub assertions: bool,
    /// Hard cap on the statement count of the unwound program.
    pub max_statements: usize,
}

impl Default for UnwindConfig {
    fn default() -> Self {
        UnwindConfig {
            depth: 4,
            assertions: false,
            max_statements: 100_000,
        }
    }
}

/// Unwinds all loops to the configured depth. Thread bodies stay separate
/// (they are instantiated per spawn later); everything else in the language
/// is already call-free. Spawn recursion — a thread whose (transitive) body
/// spawns itself — is rejected here since it denotes unbounded thread
/// creation.
pub fn inline_and_unwind(
    program: &Program,
    config: &UnwindConfig,
) -> Result<Program, FrontendError> {
    check_spawn_recursion(program)?;
    let unwound = Program {
        shared: program.shared.clone(),
        threads: program
            .threads
            .iter()
            .map(|t| ThreadDef {
                name: t.name.clone(),
                body: unwind_block(&t.body, config),
                pos: t.pos,
            })
            .collect(),
        main: unwind_block(&program.main, config),
    };
    let mut count = block_len(&unwound.main);
    for t in &unwound.threads {
        count += block_len(&t.body);
    }
    if count > config.max_statements {
        return Err(FrontendError::DepthOverflow {
            depth: config.depth,
            budget: config.max_statements,
        });
    }
    Ok(unwound)
}

fn check_spawn_recursion(program: &Program) -> Result<(), FrontendError> {
    let index: HashMap<&str, usize> = program
        .threads
        .iter()
        .enumerate()
        .map(|(i, t)| (t.name.as_str(), i))
        .collect();
    let mut targets: Vec<Vec<usize>> = Vec::with_capacity(program.threads.len());
    for t in &program.threads {
        let mut out = Vec::new();
        collect_spawns(&t.body, &index, &mut out);
        targets.push(out);
    }
    // Iterative three-color DFS over the spawn graph.
    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Grey,
        Black,
    }
    let mut color = vec![Color::White; program.threads.len()];
    for start in 0..program.threads.len() {
        if color[start] != Color::White {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = Color::Grey;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if *next < targets[node].len() {
                let child = targets[node][*next];
                *next += 1;
                match color[child] {
                    Color::White => {
                        color[child] = Color::Grey;
                        stack.push((child, 0));
                    }
                    Color::Grey => {
                        return Err(FrontendError::RecursionDetected {
                            name: program.threads[child].name.clone(),
                        });
                    }
                    Color::Black => {}
                }
            } else {
                color[node] = Color::Black;
                stack.pop();
            }
        }
    }
    Ok(())
}

fn collect_spawns(block: &Block, index: &HashMap<&str, usize>, out: &mut Vec<usize>) {
    for stmt in &block.stmts {
        match &stmt.kind {
            StmtKind::Spawn { thread, .. } => {
                if let Some(&i) = index.get(thread.as_str()) {
                    out.push(i);
                }
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                collect_spawns(then_branch, index, out);
                if let Some(e) = else_branch {
                    collect_spawns(e, index, out);
                }
            }
            StmtKind::While { body, .. } => collect_spawns(body, index, out),
            _ => {}
        }
    }
}

fn unwind_block(block: &Block, config: &UnwindConfig) -> Block {
    Block {
        stmts: block.stmts.iter().map(|s| unwind_stmt(s, config)).collect(),
    }
}

fn unwind_stmt(stmt: &Stmt, config: &UnwindConfig) -> Stmt {
    let kind = match &stmt.kind {
        StmtKind::While { cond, body } => {
            let body = unwind_block(body, config);
            let exit_cond = Expr::Unary {
                op: UnOp::Not,
                operand: Box::new(cond.clone()),
            };
            let mut expansion = Stmt {
                kind: if config.assertions {
                    StmtKind::Assert { cond: exit_cond }
                } else {
                    StmtKind::Assume { cond: exit_cond }
                },
                pos: stmt.pos,
            };
            for _ in 0..config.depth {
                let mut stmts = body.stmts.clone();
                stmts.push(expansion);
                expansion = Stmt {
                    kind: StmtKind::If {
                        cond: cond.clone(),
                        then_branch: Block { stmts },
                        else_branch: None,
                    },
                    pos: stmt.pos,
                };
            }
            return expansion;
        }
        StmtKind::If {
            cond,
            then_branch,
            else_branch,
        } => StmtKind::If {
            cond: cond.clone(),
            then_branch: unwind_block(then_branch, config),
            else_branch: else_branch.as_ref().map(|b| unwind_block(b, config)),
        },
        other => other.clone(),
    };
    Stmt {
        kind,
        pos: stmt.pos,
    }
}

fn block_len(block: &Block) -> usize {
    block
        .stmts
        .iter()
        .map(|s| match &s.kind {
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => 1 + block_len(then_branch) + else_branch.as_ref().map(block_len).unwrap_or(0),
            StmtKind::While { body, .. } => 1 + block_len(body),
            _ => 1,
        })
        .sum()
}
