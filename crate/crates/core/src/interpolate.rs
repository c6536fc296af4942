//! Binary and inductive sequence interpolants for the supported fragment.
//!
//! Interpolants come from Farkas certificates of the simplex core: for an
//! inconsistent pair of literal conjunctions, the A-side restriction of the
//! certificate's weighted combination is a single linear constraint over the
//! shared variables (the certificate cancels every A-local variable against
//! the B part). Boolean structure is handled by DNF expansion on both sides,
//! negated equalities by splitting into the two strict branches.
//!
//! `sequence_interpolant` iterates binary interpolation over prefixes. For
//! the chain-structured `Ξ` sequences used by predicate generation, where
//! consecutive elements share exactly one variable block, the prefix/suffix
//! symbol guarantee coincides with the per-position condition on inductive
//! interpolants; the property suite asserts this on every corpus sequence.

use crate::logic::{free_vars, Formula, LinAtom, Rational, RelOp, Var};
use crate::solver::cube::{dnf, split_negated_equality, Cube, DnfError};
use crate::solver::simplex::{
    solve as theory_solve, verify_cert, CertSide, FarkasCert, TheoryConstraint, TheoryOutcome,
    TheoryRel,
};
use crate::solver::{theory_feasible, Solver, SolverError, Validity};
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;
use thiserror::Error;

/// Re-exported certificate type: nonnegative multipliers per oriented input
/// constraint whose weighted sum is a false constant constraint.
pub type FarkasCertificate = FarkasCert;

#[derive(Debug, Clone, Error)]
pub enum InterpError {
    #[error("interpolation input is satisfiable")]
    InputSatisfiable,
    #[error("DNF expansion exceeded cap {0}")]
    DnfBlowup(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("interpolant contract violated: {0}")]
    ContractViolation(String),
}

impl From<DnfError> for InterpError {
    fn from(e: DnfError) -> Self {
        match e {
            DnfError::Blowup(n) => InterpError::DnfBlowup(n),
        }
    }
}

/// An inductive interpolant `[λ₀, …, λ_m]` of an inconsistent sequence
/// `[θ₁, …, θ_m]`: `λ₀ = True`, `λ_m = False`, and every
/// `λ_{i−1} ∧ θ_i ⇒ λ_i` is valid.
#[derive(Debug, Clone)]
pub struct InterpolantSequence(pub Vec<Formula>);

/// Branch expansion of a cube: negated equalities replaced by one of their
/// strict sides. Returns the full constraint list per branch.
fn branches(cube: &Cube, cap: usize) -> Result<Vec<Vec<TheoryConstraint>>, InterpError> {
    let base = cube.theory_constraints();
    let neg = cube.negated_equalities();
    if neg.len() > 16 || (1usize << neg.len()) > cap.max(2) {
        return Err(InterpError::DnfBlowup(cap));
    }
    let mut out = vec![base];
    for atom in neg {
        let [lt, gt] = split_negated_equality(atom);
        let mut next = Vec::with_capacity(out.len() * 2);
        for b in &out {
            let mut l = b.clone();
            l.push(lt.clone());
            next.push(l);
            let mut g = b.clone();
            g.push(gt.clone());
            next.push(g);
        }
        out = next;
    }
    Ok(out)
}

fn cube_feasible(cube: &Cube, deadline: Option<Instant>) -> Result<bool, SolverError> {
    let cons = cube.theory_constraints();
    let neg = cube.negated_equalities();
    Ok(theory_feasible(&cons, &neg, deadline)?.is_some())
}

/// The A-side weighted combination of a certificate over `joint`, where the
/// first `na` constraints are the A side: a single constraint
/// `Σ c·v + d ⋖ 0` over the shared variables.
///
/// When every contributing A constraint is an equality the combination is
/// pointwise zero under A, so the stronger `Σ c·v + d = 0` is emitted; this
/// is where relational equality atoms like `x = y` come from.
fn a_side_combination(joint: &[TheoryConstraint], na: usize, cert: &FarkasCert) -> Formula {
    let mut poly: BTreeMap<Var, Rational> = BTreeMap::new();
    let mut constant = Rational::zero();
    let mut strict = false;
    let mut all_equalities = true;
    let mut used_any = false;
    for ((ci, side), mult) in &cert.entries {
        if *ci >= na || mult.is_zero() {
            continue;
        }
        used_any = true;
        let c = &joint[*ci];
        let dir = match side {
            CertSide::Upper => Rational::from_integer(1.into()),
            CertSide::Lower => Rational::from_integer((-1).into()),
        };
        if c.rel != TheoryRel::Eq {
            all_equalities = false;
        }
        if c.rel == TheoryRel::Lt && mult.is_positive() {
            strict = true;
        }
        for (v, a) in &c.coeffs {
            let e = poly.entry(v.clone()).or_insert_with(Rational::zero);
            *e += mult * &dir * a;
        }
        constant += mult * &dir * &(-c.bound.clone());
    }
    poly.retain(|_, c| !c.is_zero());
    let rel = if used_any && all_equalities {
        RelOp::Eq
    } else if strict {
        RelOp::Lt
    } else {
        RelOp::Le
    };
    let atom = LinAtom::from_parts(rel, constant, poly);
    match atom.trivial_truth() {
        Some(true) => Formula::True,
        Some(false) => Formula::False,
        None => atom.to_formula(),
    }
}

/// Interpolant of two inconsistent literal conjunctions.
///
/// Clashing Boolean literals short-circuit; otherwise each pair of
/// negated-equality branches yields a Farkas certificate whose A-side
/// combination is one conjunct. Returns `False`/`True` when one side is
/// itself unsatisfiable.
pub fn cube_interpolant(
    a: &Cube,
    b: &Cube,
    cap: usize,
    deadline: Option<Instant>,
) -> Result<Formula, InterpError> {
    // (i) A Boolean literal of A negated in B settles it.
    for (v, pol) in &a.bools {
        if b.bools.get(v) == Some(&!*pol) {
            let lit = Formula::BoolVar(v.clone());
            return Ok(if *pol { lit } else { lit.not() });
        }
    }
    // (iii) Degenerate sides.
    if !cube_feasible(a, deadline)? {
        return Ok(Formula::False);
    }
    if !cube_feasible(b, deadline)? {
        return Ok(Formula::True);
    }
    // (ii) Farkas certificates across all strict branches.
    let a_branches = branches(a, cap)?;
    let b_branches = branches(b, cap)?;
    let mut disjuncts: BTreeSet<Formula> = BTreeSet::new();
    for abr in &a_branches {
        let mut conjuncts: BTreeSet<Formula> = BTreeSet::new();
        for bbr in &b_branches {
            let mut joint = abr.clone();
            joint.extend(bbr.iter().cloned());
            match theory_solve(&joint, deadline)? {
                TheoryOutcome::Sat(_) => return Err(InterpError::InputSatisfiable),
                TheoryOutcome::Unsat(cert) => {
                    debug_assert!(verify_cert(&joint, &cert), "invalid Farkas certificate");
                    let part = a_side_combination(&joint, abr.len(), &cert);
                    debug_assert!(
                        free_vars(&part)
                            .is_subset(&a.vars().intersection(&b.vars()).cloned().collect()),
                        "interpolant symbols escape the shared set"
                    );
                    conjuncts.insert(part);
                }
            }
        }
        disjuncts.insert(Formula::and(conjuncts));
    }
    Ok(Formula::or(disjuncts))
}

/// Satisfiable-cube DNF of a formula, capped. Structural expansion first;
/// if its clause product blows up, fall back to minterm enumeration over the
/// formula's atoms (learner hypotheses have few atoms but much structure).
pub fn dnf_sat_cubes(
    phi: &Formula,
    cap: usize,
    deadline: Option<Instant>,
) -> Result<Vec<Cube>, InterpError> {
    let raw = match dnf(phi, cap.saturating_mul(16)) {
        Ok(raw) => raw,
        Err(DnfError::Blowup(_)) => crate::solver::cube::dnf_minterms(phi, cap)?,
    };
    let mut out = Vec::new();
    for c in raw {
        if cube_feasible(&c, deadline)? {
            out.push(c);
            if out.len() > cap {
                return Err(InterpError::DnfBlowup(cap));
            }
        }
    }
    Ok(out)
}

/// Binary interpolant of an inconsistent pair of formulas: `A ⇒ I` is valid,
/// `I ∧ B` is unsatisfiable, and the symbols of `I` occur on both sides.
pub fn binary_interpolant(
    a: &Formula,
    b: &Formula,
    solver: &mut Solver,
    cap: usize,
) -> Result<Formula, InterpError> {
    let deadline =
        Some(Instant::now() + std::time::Duration::from_millis(solver.cfg.query_timeout_ms));
    let a_cubes = dnf_sat_cubes(a, cap, deadline)?;
    if a_cubes.is_empty() {
        return Ok(Formula::False);
    }
    let b_cubes = dnf_sat_cubes(b, cap, deadline)?;
    if b_cubes.is_empty() {
        return Ok(Formula::True);
    }
    let mut disjuncts: BTreeSet<Formula> = BTreeSet::new();
    for ac in &a_cubes {
        let mut conjuncts: BTreeSet<Formula> = BTreeSet::new();
        for bc in &b_cubes {
            conjuncts.insert(cube_interpolant(ac, bc, cap, deadline)?);
        }
        disjuncts.insert(Formula::and(conjuncts));
    }
    Ok(Formula::or(disjuncts))
}

/// Inductive interpolant of an inconsistent sequence by iterated binary
/// interpolation. The three sequence invariants are solver-checked before
/// returning.
pub fn sequence_interpolant(
    theta: &[Formula],
    solver: &mut Solver,
    cap: usize,
) -> Result<InterpolantSequence, InterpError> {
    let m = theta.len();
    assert!(m >= 1, "empty sequence");
    if solver.is_sat(&Formula::and(theta.iter().cloned()))? {
        return Err(InterpError::InputSatisfiable);
    }
    let mut lambdas = Vec::with_capacity(m + 1);
    lambdas.push(Formula::True);
    for i in 1..m {
        let prefix = Formula::and([lambdas[i - 1].clone(), theta[i - 1].clone()]);
        let suffix = Formula::and(theta[i..].iter().cloned());
        let li = binary_interpolant(&prefix, &suffix, solver, cap)?;
        lambdas.push(li);
    }
    lambdas.push(Formula::False);

    // Contract verification: λ_{i−1} ∧ θ_i ⇒ λ_i and symbol containment.
    for i in 1..=m {
        let step = Formula::and([lambdas[i - 1].clone(), theta[i - 1].clone()])
            .implies(lambdas[i].clone());
        match solver.check_valid(&step)? {
            Validity::Valid => {}
            Validity::Counterexample(nu) => {
                return Err(InterpError::ContractViolation(format!(
                    "step {i} not inductive; witness {nu:?}"
                )))
            }
        }
    }
    for i in 1..m {
        let mut prefix_syms = BTreeSet::new();
        for t in &theta[..i] {
            prefix_syms.extend(free_vars(t));
        }
        let mut suffix_syms = BTreeSet::new();
        for t in &theta[i..] {
            suffix_syms.extend(free_vars(t));
        }
        let allowed: BTreeSet<Var> = prefix_syms.intersection(&suffix_syms).cloned().collect();
        let used = free_vars(&lambdas[i]);
        if !used.is_subset(&allowed) {
            return Err(InterpError::ContractViolation(format!(
                "λ_{i} mentions symbols outside the prefix/suffix intersection"
            )));
        }
    }
    Ok(InterpolantSequence(lambdas))
}
