//! Independent invariant re-verification.
//!
//! The engine never reports an invariant on the teacher's say-so alone: this
//! module re-checks the three conditions with its own fresh solver instance
//! and fresh Skolem constants, on a code path separate from the teacher's.

use crate::frontend::{pre_condition, AnnotatedLoop, FreshGen};
use crate::logic::Formula;
use crate::solver::{Solver, SolverConfig, SolverError};

/// Which condition failed, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Invariant,
    FailsInitiation,
    FailsExit,
    FailsConsecution,
}

/// Check `δ ⇒ θ`, `θ ∧ ¬κ ⇒ ε` and `θ ∧ κ ⇒ Pre(θ : body)` from scratch.
pub fn verify_invariant(
    loop_: &AnnotatedLoop,
    theta: &Formula,
    cfg: &SolverConfig,
) -> Result<Verdict, SolverError> {
    let mut solver = Solver::new(cfg.clone());
    let mut fresh = FreshGen::new();
    if !solver.is_valid(&loop_.pre.clone().implies(theta.clone()))? {
        return Ok(Verdict::FailsInitiation);
    }
    let exit = Formula::and([theta.clone(), loop_.guard.clone().not()])
        .implies(loop_.post.clone());
    if !solver.is_valid(&exit)? {
        return Ok(Verdict::FailsExit);
    }
    let pre_theta = pre_condition(theta, &loop_.body, &loop_.decls, &mut fresh);
    let consecution = Formula::and([theta.clone(), loop_.guard.clone()]).implies(pre_theta);
    if !solver.is_valid(&consecution)? {
        return Ok(Verdict::FailsConsecution);
    }
    Ok(Verdict::Invariant)
}
