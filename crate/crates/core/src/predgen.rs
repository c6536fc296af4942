//! Predicate generation by interpolation: the initial atomic predicates,
//! predicates from incorrect conjectures, and predicates from conflicting
//! counterexamples.
//!
//! All three procedures interpolate an inconsistent sequence and collect the
//! desuperscripted, normalized atoms of the result. Batches merge into the
//! predicate set append-only; the set never shrinks within a run.

use crate::abstraction::{alpha_star, gamma_star, PredicateSet};
use crate::frontend::{pre_condition, xi_sequence, AnnotatedLoop, FreshGen};
use crate::interpolate::{binary_interpolant, sequence_interpolant, InterpError};
use crate::logic::{atoms_of, gamma_of_valuation, Atom, Formula, Valuation};
use crate::solver::{Solver, SolverError};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BatchOrigin {
    Initial,
    Conjecture,
    Conflict,
}

/// A set of freshly generated atoms, tagged with where they came from.
#[derive(Debug, Clone)]
pub struct PredicateBatch {
    pub atoms: BTreeSet<Atom>,
    pub origin: BatchOrigin,
}

impl PredicateBatch {
    fn collect(formulas: impl IntoIterator<Item = Formula>, origin: BatchOrigin) -> Self {
        let mut atoms = BTreeSet::new();
        for f in formulas {
            for a in atoms_of(&f) {
                atoms.insert(a.desuperscript());
            }
        }
        PredicateBatch { atoms, origin }
    }

    /// Merge into a predicate set; returns how many atoms were new.
    pub fn merge_into(&self, p: &mut PredicateSet) -> usize {
        let mut added = 0;
        for a in &self.atoms {
            if p.insert(a.clone()) {
                added += 1;
            }
        }
        added
    }
}

#[derive(Debug, Clone, Error)]
pub enum PredgenError {
    #[error("ι_under does not imply ι_over: no loop invariant can exist")]
    NoInvariantPossible,
    #[error("conflict pair precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Initial atomic predicates: atoms of an interpolant of
/// `[ι_under, ¬ι_over]`. If `ι_under ⇒ ι_over` fails there is no invariant
/// at all, which is the only way the engine ever reports that outcome.
pub fn initial_predicates(
    under: &Formula,
    over: &Formula,
    solver: &mut Solver,
    dnf_cap: usize,
) -> Result<PredicateBatch, PredgenError> {
    if !solver.is_valid(&under.clone().implies(over.clone()))? {
        return Err(PredgenError::NoInvariantPossible);
    }
    let interpolant = binary_interpolant(under, &over.clone().not(), solver, dnf_cap)?;
    Ok(PredicateBatch::collect([interpolant], BatchOrigin::Initial))
}

/// Predicates from an incorrect conjecture `θ`: interpolate
/// `Ξ(θ ∧ κ, S₁…S_m, ι_over)`, and also `Ξ(ι_under ∧ κ, S₁…S_m, θ)` when
/// the under-approximation premise holds.
pub fn predicates_from_conjecture(
    theta: &Formula,
    loop_: &AnnotatedLoop,
    under: &Formula,
    over: &Formula,
    solver: &mut Solver,
    fresh: &mut FreshGen,
    dnf_cap: usize,
) -> Result<PredicateBatch, PredgenError> {
    #[cfg(debug_assertions)]
    {
        let pre_over = pre_condition(over, &loop_.body, &loop_.decls, fresh);
        let premise = Formula::and([theta.clone(), loop_.guard.clone()]).implies(pre_over);
        debug_assert!(
            solver.is_valid(&premise)?,
            "conjecture does not satisfy the inductive necessary condition"
        );
    }
    let phi = Formula::and([theta.clone(), loop_.guard.clone()]);
    let xi = xi_sequence(&phi, &loop_.body, over, &loop_.decls, fresh);
    let seq = sequence_interpolant(&xi, solver, dnf_cap)?;
    let mut formulas = seq.0;

    // Optional second sequence from the under-approximation side. A blowup
    // here degrades to the mandatory batch alone.
    let pre_theta = pre_condition(theta, &loop_.body, &loop_.decls, fresh);
    let under_premise = Formula::and([under.clone(), loop_.guard.clone()]).implies(pre_theta);
    if solver.is_valid(&under_premise)? {
        let phi2 = Formula::and([under.clone(), loop_.guard.clone()]);
        let xi2 = xi_sequence(&phi2, &loop_.body, theta, &loop_.decls, fresh);
        match sequence_interpolant(&xi2, solver, dnf_cap) {
            Ok(seq2) => formulas.extend(seq2.0),
            Err(InterpError::DnfBlowup(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(PredicateBatch::collect(formulas, BatchOrigin::Conjecture))
}

/// Predicates from conflicting counterexamples `ν ≠ ν'` with equal
/// abstraction: atoms of an interpolant of `[Γ(ν), Γ(ν') ∨ ¬ρ]` where
/// `ρ = γ*(α*(ν))`. The pair is inconsistent because `Γ(ν) ∧ Γ(ν')` is and
/// `Γ(ν) ⇒ ρ`.
pub fn predicates_from_conflict(
    nu: &Valuation,
    nu_prime: &Valuation,
    p: &PredicateSet,
    solver: &mut Solver,
    dnf_cap: usize,
) -> Result<PredicateBatch, PredgenError> {
    if nu == nu_prime {
        return Err(PredgenError::PreconditionViolated(
            "valuations must be distinct".into(),
        ));
    }
    let mu = alpha_star(nu, p)
        .map_err(|e| PredgenError::PreconditionViolated(format!("ν not total on P: {e}")))?;
    let mu_prime = alpha_star(nu_prime, p)
        .map_err(|e| PredgenError::PreconditionViolated(format!("ν' not total on P: {e}")))?;
    if mu != mu_prime {
        return Err(PredgenError::PreconditionViolated(
            "valuations have different abstractions".into(),
        ));
    }
    let gamma_nu = gamma_of_valuation(nu);
    let gamma_nu_prime = gamma_of_valuation(nu_prime);
    let rho = gamma_star(&mu, p);
    let b = Formula::or([gamma_nu_prime, rho.not()]);
    let interpolant = binary_interpolant(&gamma_nu, &b, solver, dnf_cap)?;
    Ok(PredicateBatch::collect([interpolant], BatchOrigin::Conflict))
}
