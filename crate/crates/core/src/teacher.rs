//! The mechanical teacher: answers membership and equivalence queries from
//! under-/over-approximations of the loop invariant, records witness
//! valuations, keeps a self-consistency cache over random answers, and
//! detects conflicting abstract counterexamples.
//!
//! Membership resolution: `θ := γ*(μ)`; unsatisfiable `θ` answers no, a
//! `θ ⇒ ι_under` validity answers yes, a `θ ⇏ ι_over` witness answers no,
//! everything else is answered uniformly at random (cached). Equivalence
//! resolution concretizes the conjecture, accepts it when it is a verified
//! invariant, otherwise returns the abstraction of a witness to one of the
//! three disagreement checks — the third being the inductive necessary
//! condition on the over-approximation — and falls back to a random
//! abstract counterexample until the threshold `τ = ⌈1.3^|P|⌉` is spent.

use crate::abstraction::{alpha_star, gamma, gamma_star, AbstractVal, BoolFormula, PredicateSet};
use crate::frontend::{transition_seq, AnnotatedLoop, FreshGen};
use crate::logic::{evaluate, superscript, Formula, Sort, Valuation, Value};
use crate::solver::{SatResult, Solver, SolverError};
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

/// Which disagreement produced a counterexample entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CexSource {
    /// Witness of `¬(ι_under ⇒ θ)`.
    EquivUnder,
    /// Witness of `¬(θ ⇒ ι_over)`.
    EquivOver,
    /// Witness of `¬(θ ∧ κ ⇒ Pre(ι_over : body))`.
    EquivInduction,
    /// One-step image of `ι_under ∧ κ` escaping the conjecture.
    EquivImage,
}

/// Whether the witness shows the target satisfied (`Positive`) or falsified
/// (`Negative`) at its abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Positive,
    Negative,
}

#[derive(Debug, Clone)]
pub struct CexEntry {
    pub valuation: Valuation,
    pub direction: Direction,
    pub source: CexSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Derived,
    Random,
}

/// Evidence extracted after a conflict.
#[derive(Debug, Clone)]
pub enum ConflictEvidence {
    /// Distinct recorded valuations with equal abstraction and opposite
    /// directions.
    ConcretePair(Valuation, Valuation),
    /// Only random answers contradict; no concrete pair exists.
    RandomOnly,
}

#[derive(Debug, Clone, Error)]
pub enum TeacherError {
    #[error("conflicting classification of abstract valuation {mu}: cached {old:?}, now {new:?}")]
    Conflict {
        mu: AbstractVal,
        old: (bool, Provenance),
        new: (bool, Provenance),
    },
    #[error("too many random answers; conjecture withheld for predicate generation")]
    ExcessiveRandomAnswers(Formula),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Result of an invariant check, reporting the first failing condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantCheck {
    Holds,
    /// 1: `δ ⇒ ι`; 2: `ι ∧ ¬κ ⇒ ε`; 3: `ι ∧ κ ⇒ Pre(ι : body)`.
    Fails(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivResponse {
    Yes,
    Cex(AbstractVal),
}

/// `τ = ⌈1.3^n⌉`, computed exactly.
pub fn threshold(n: usize) -> u64 {
    let p13 = BigInt::from(13).pow(n as u32);
    let p10 = BigInt::from(10).pow(n as u32);
    let ceil = (&p13 + &p10 - BigInt::from(1)) / &p10;
    ceil.to_u64().unwrap_or(u64::MAX)
}

/// The invariant approximations `(ι_under, ι_over)` for a loop.
///
/// `ι_over = ε ∨ κ` always. The under-approximation `δ ∨ ε` is sound only
/// when every ε-state is an exit state: if `ε ∧ κ` is satisfiable, a state
/// of `ε` can re-enter the loop body and escape `ι_over`, and then no
/// invariant lies above `δ ∨ ε` at all (the teacher's derived answers would
/// contradict each other forever). In that case the strongest approximation
/// `δ` is used instead, which every invariant contains by definition.
pub fn approximations(
    loop_: &AnnotatedLoop,
    solver: &mut Solver,
) -> Result<(Formula, Formula), SolverError> {
    let over = Formula::or([loop_.post.clone(), loop_.guard.clone()]);
    let eps_reenters =
        solver.is_sat(&Formula::and([loop_.post.clone(), loop_.guard.clone()]))?;
    let under = if eps_reenters {
        loop_.pre.clone()
    } else {
        Formula::or([loop_.pre.clone(), loop_.post.clone()])
    };
    Ok((under, over))
}

pub struct Teacher {
    pub loop_: AnnotatedLoop,
    pub p: PredicateSet,
    pub under: Formula,
    pub over: Formula,
    /// `⟦S₁; …; S_m⟧` over `X⟨0⟩ ∪ X⟨1⟩`, computed once per session. All
    /// `… ⇒ Pre(ψ : body)` checks run through this linear-size encoding:
    /// the implication is valid iff `θ⟨0⟩ ∧ κ⟨0⟩ ∧ ⟦body⟧ ∧ ¬ψ⟨1⟩` is
    /// unsatisfiable (the weakest precondition would copy `ψ` into every
    /// branch of the body instead).
    body_trans: Formula,
    guard0: Formula,
    not_over1: Formula,
    pub cex: Vec<CexEntry>,
    cache: BTreeMap<AbstractVal, (bool, Provenance)>,
    /// Valuations the approximations provably cannot classify; memoized so
    /// candidate scans do not repeat solver work.
    underivable: std::collections::BTreeSet<AbstractVal>,
    pub random_answers: u64,
    pub tau: u64,
}

impl Teacher {
    /// A fresh session over the current predicate set, with approximations
    /// from [`approximations`].
    pub fn new(
        loop_: &AnnotatedLoop,
        p: PredicateSet,
        solver: &mut Solver,
    ) -> Result<Teacher, SolverError> {
        let (under, over) = approximations(loop_, solver)?;
        let mut fresh = FreshGen::new();
        let body_trans = transition_seq(&loop_.body, &loop_.decls, &mut fresh);
        let guard0 = superscript(&loop_.guard, 0);
        let not_over1 = superscript(&over, 1).not();
        let tau = threshold(p.len());
        Ok(Teacher {
            loop_: loop_.clone(),
            p,
            under,
            over,
            body_trans,
            guard0,
            not_over1,
            cex: Vec::new(),
            cache: BTreeMap::new(),
            underivable: std::collections::BTreeSet::new(),
            random_answers: 0,
            tau,
        })
    }

    /// Extend a solver model to a total valuation over the program
    /// variables (absent rationals default to 0, Booleans to false) so that
    /// every predicate is evaluable and recorded valuations are comparable.
    fn totalize(&self, model: &Valuation, block: u32) -> Valuation {
        let mut out = Valuation::new();
        for (name, sort) in &self.loop_.decls {
            let plain = crate::logic::Var::plain(name.clone());
            let pre_block = crate::logic::Var::indexed(name.clone(), block);
            let value = match model.0.get(&plain).or_else(|| model.0.get(&pre_block)) {
                Some(v) => v.clone(),
                None => match sort {
                    Sort::Rat => Value::Rat(crate::logic::Rational::from_integer(0.into())),
                    Sort::Bool => Value::Bool(false),
                },
            };
            out.set(plain, value);
        }
        out
    }

    /// Record a classification, raising a conflict when the cache holds the
    /// opposite value for the same abstract valuation.
    fn record(
        &mut self,
        mu: &AbstractVal,
        value: bool,
        provenance: Provenance,
    ) -> Result<(), TeacherError> {
        if let Some((old, old_prov)) = self.cache.get(mu) {
            if *old != value {
                return Err(TeacherError::Conflict {
                    mu: mu.clone(),
                    old: (*old, *old_prov),
                    new: (value, provenance),
                });
            }
            return Ok(());
        }
        self.cache.insert(mu.clone(), (value, provenance));
        Ok(())
    }

    /// The classification of `μ` decidable from the approximations alone.
    ///
    /// Beyond the two approximation checks, the inductive necessary
    /// condition on the over-approximation also resolves queries: a state of
    /// `γ*(μ)` that can step outside `ι_over` cannot belong to any invariant
    /// below `ι_over`, so the whole minterm is classified no. Without this,
    /// a random yes on such a minterm is guaranteed to collide with a later
    /// derived classification and waste the session.
    /// The cheap classification rules: an inconsistent minterm is no; the
    /// target concretization lives in QF[P], so a consistent minterm that
    /// merely intersects ι_under is wholly contained in every in-band
    /// invariant (yes), and one not below ι_over is excluded (no).
    fn derive_cheap(
        &mut self,
        mu: &AbstractVal,
        solver: &mut Solver,
    ) -> Result<Option<bool>, TeacherError> {
        let theta = gamma_star(mu, &self.p);
        if !solver.is_sat(&theta)? {
            return Ok(Some(false));
        }
        if solver.is_sat(&Formula::and([theta.clone(), self.under.clone()]))? {
            return Ok(Some(true));
        }
        if !solver.is_valid(&theta.implies(self.over.clone()))? {
            return Ok(Some(false));
        }
        Ok(None)
    }

    /// Full classification: the cheap rules plus the two one-step rules
    /// through the body transition. A minterm with a state that can step
    /// outside ι_over is excluded from every in-band invariant (the §4-style
    /// necessary condition); one containing a state reachable from
    /// ι_under ∧ κ is contained in every in-band inductive invariant.
    fn derive(
        &mut self,
        mu: &AbstractVal,
        solver: &mut Solver,
    ) -> Result<Option<bool>, TeacherError> {
        if self.underivable.contains(mu) {
            return Ok(None);
        }
        if let Some(v) = self.derive_cheap(mu, solver)? {
            return Ok(Some(v));
        }
        let theta = gamma_star(mu, &self.p);
        let escapes = Formula::and([
            superscript(&theta, 0),
            self.guard0.clone(),
            self.body_trans.clone(),
            self.not_over1.clone(),
        ]);
        if solver.is_sat(&escapes)? {
            return Ok(Some(false));
        }
        let reached = Formula::and([
            superscript(&self.under, 0),
            self.guard0.clone(),
            self.body_trans.clone(),
            superscript(&theta, 1),
        ]);
        if solver.is_sat(&reached)? {
            return Ok(Some(true));
        }
        self.underivable.insert(mu.clone());
        Ok(None)
    }

    /// Membership query resolution.
    pub fn resolve_membership(
        &mut self,
        mu: &AbstractVal,
        solver: &mut Solver,
        rng: &mut ChaCha8Rng,
    ) -> Result<bool, TeacherError> {
        if let Some(value) = self.derive(mu, solver)? {
            self.record(mu, value, Provenance::Derived)?;
            return Ok(value);
        }
        if let Some((cached, _)) = self.cache.get(mu) {
            return Ok(*cached);
        }
        let answer: bool = rng.random();
        self.record(mu, answer, Provenance::Random)?;
        Ok(answer)
    }

    /// The three invariant conditions, reporting the first that fails.
    pub fn check_invariant(
        &mut self,
        theta: &Formula,
        solver: &mut Solver,
    ) -> Result<InvariantCheck, TeacherError> {
        let initiation = self.loop_.pre.clone().implies(theta.clone());
        if !solver.is_valid(&initiation)? {
            return Ok(InvariantCheck::Fails(1));
        }
        let exit = Formula::and([theta.clone(), self.loop_.guard.clone().not()])
            .implies(self.loop_.post.clone());
        if !solver.is_valid(&exit)? {
            return Ok(InvariantCheck::Fails(2));
        }
        let step_violation = Formula::and([
            superscript(theta, 0),
            self.guard0.clone(),
            self.body_trans.clone(),
            superscript(theta, 1).not(),
        ]);
        if solver.is_sat(&step_violation)? {
            return Ok(InvariantCheck::Fails(3));
        }
        Ok(InvariantCheck::Holds)
    }

    fn witness(
        &mut self,
        query: &Formula,
        solver: &mut Solver,
    ) -> Result<Option<Valuation>, TeacherError> {
        self.witness_block(query, 0, solver)
    }

    fn witness_block(
        &mut self,
        query: &Formula,
        block: u32,
        solver: &mut Solver,
    ) -> Result<Option<Valuation>, TeacherError> {
        let nu = match solver.check_sat(query)? {
            SatResult::Sat(nu) => nu,
            SatResult::Unsat { .. } => return Ok(None),
        };
        Ok(Some(self.refine_witness(query, nu, block, solver)?))
    }

    /// Round the witness toward integral values where the query allows it.
    /// Raw simplex models carry infinitesimal-concretization artifacts
    /// (values like 27/40) that would otherwise seed predicates pinning
    /// arbitrary rational constants. One pass over the program variables in
    /// declaration order: each is pinned to its rounded value when the query
    /// stays satisfiable, to its exact current value otherwise.
    fn refine_witness(
        &mut self,
        query: &Formula,
        model: Valuation,
        block: u32,
        solver: &mut Solver,
    ) -> Result<Valuation, TeacherError> {
        use num_traits::One;
        let mut raw = model;
        let mut pins: Vec<Formula> = Vec::new();
        let names: Vec<String> = self.loop_.decls.iter().map(|(n, _)| n.clone()).collect();
        for name in names {
            let plain = crate::logic::Var::plain(name.clone());
            let indexed = plain.with_index(block);
            let sym = if raw.0.contains_key(&indexed) { indexed } else { plain };
            let val = match raw.0.get(&sym) {
                Some(Value::Rat(r)) => r.clone(),
                Some(Value::Bool(b)) => {
                    let lit = Formula::BoolVar(sym.clone());
                    pins.push(if *b { lit } else { lit.not() });
                    continue;
                }
                None => continue,
            };
            if val.is_integer() {
                pins.push(Formula::eq(
                    crate::logic::Term::Var(sym),
                    crate::logic::Term::Const(val),
                ));
                continue;
            }
            let half = crate::logic::Rational::one()
                / (crate::logic::Rational::one() + crate::logic::Rational::one());
            let rounded = (&val + half).floor();
            let rounded_pin = Formula::eq(
                crate::logic::Term::Var(sym.clone()),
                crate::logic::Term::Const(rounded),
            );
            let candidate = Formula::and(
                std::iter::once(query.clone())
                    .chain(pins.iter().cloned())
                    .chain(std::iter::once(rounded_pin.clone())),
            );
            match solver.check_sat(&candidate)? {
                SatResult::Sat(nu) => {
                    raw = nu;
                    pins.push(rounded_pin);
                }
                SatResult::Unsat { .. } => {
                    pins.push(Formula::eq(
                        crate::logic::Term::Var(sym),
                        crate::logic::Term::Const(val),
                    ));
                }
            }
        }
        Ok(self.totalize(&raw, block))
    }

    /// Equivalence query resolution with predicate-generation hooks.
    pub fn resolve_equivalence(
        &mut self,
        beta: &BoolFormula,
        solver: &mut Solver,
        rng: &mut ChaCha8Rng,
    ) -> Result<EquivResponse, TeacherError> {
        let theta = gamma(beta, &self.p);
        // (a) The conjecture concretizes to an invariant: done.
        if self.check_invariant(&theta, solver)? == InvariantCheck::Holds {
            return Ok(EquivResponse::Yes);
        }
        // (b) ν ⊨ ι_under ∧ ¬θ: the target must hold at α*(ν).
        let q = Formula::and([self.under.clone(), theta.clone().not()]);
        if let Some(nu) = self.witness(&q, solver)? {
            let mu = alpha_star(&nu, &self.p).expect("totalized valuation covers P");
            debug_assert!(!beta.eval(&mu), "under-approximation witness must falsify β");
            self.cex.push(CexEntry {
                valuation: nu,
                direction: Direction::Positive,
                source: CexSource::EquivUnder,
            });
            self.record(&mu, true, Provenance::Derived)?;
            return Ok(EquivResponse::Cex(mu));
        }
        // (c) ν ⊨ θ ∧ ¬ι_over: the target must fail at α*(ν).
        let q = Formula::and([theta.clone(), self.over.clone().not()]);
        if let Some(nu) = self.witness(&q, solver)? {
            let mu = alpha_star(&nu, &self.p).expect("totalized valuation covers P");
            debug_assert!(beta.eval(&mu), "over-approximation witness must satisfy β");
            self.cex.push(CexEntry {
                valuation: nu,
                direction: Direction::Negative,
                source: CexSource::EquivOver,
            });
            self.record(&mu, false, Provenance::Derived)?;
            return Ok(EquivResponse::Cex(mu));
        }
        // (d) ν ⊨ θ ∧ κ ∧ ¬Pre(ι_over : body): necessary condition on any
        // invariant below the over-approximation. Encoded with the body
        // transition; the witness is the pre-state block of the model.
        let q = Formula::and([
            superscript(&theta, 0),
            self.guard0.clone(),
            self.body_trans.clone(),
            self.not_over1.clone(),
        ]);
        if let Some(nu) = self.witness(&q, solver)? {
            let mu = alpha_star(&nu, &self.p).expect("totalized valuation covers P");
            debug_assert!(beta.eval(&mu), "induction witness must satisfy β");
            self.cex.push(CexEntry {
                valuation: nu,
                direction: Direction::Negative,
                source: CexSource::EquivInduction,
            });
            self.record(&mu, false, Provenance::Derived)?;
            return Ok(EquivResponse::Cex(mu));
        }
        // (b2) ν' reachable in one step from ι_under ∧ κ with ν' ⊭ θ: every
        // in-band inductive invariant contains ν', so α*(ν') is a positive
        // counterexample (the dual image clause of (d)).
        let q = Formula::and([
            superscript(&self.under, 0),
            self.guard0.clone(),
            self.body_trans.clone(),
            superscript(&theta, 1).not(),
        ]);
        if let Some(nu) = self.witness_block(&q, 1, solver)? {
            let mu = alpha_star(&nu, &self.p).expect("totalized valuation covers P");
            debug_assert!(!beta.eval(&mu), "image witness must falsify β");
            self.cex.push(CexEntry {
                valuation: nu,
                direction: Direction::Positive,
                source: CexSource::EquivImage,
            });
            self.record(&mu, true, Provenance::Derived)?;
            return Ok(EquivResponse::Cex(mu));
        }
        // (e) Everything the implication checks decide agrees with β.
        // Scan candidate minterms with the cheap rules (plus a bounded
        // number of one-step checks); only a genuinely unknown candidate
        // costs a unit of the random budget.
        if self.random_answers >= self.tau {
            return Err(TeacherError::ExcessiveRandomAnswers(theta));
        }
        let candidates = self.random_candidates(beta, rng);
        let mut unknown: Vec<AbstractVal> = Vec::new();
        for mu in candidates {
            let implied = !beta.eval(&mu);
            match self.cache.get(&mu) {
                Some((_, Provenance::Derived)) => return Ok(EquivResponse::Cex(mu)),
                Some((_, Provenance::Random)) => {
                    unknown.push(mu);
                    continue;
                }
                None => {}
            }
            match self.derive_cheap(&mu, solver)? {
                Some(v) if v != implied => {
                    // Not usable against β; keep the free knowledge.
                    self.record(&mu, v, Provenance::Derived)?;
                }
                Some(v) => {
                    self.record(&mu, v, Provenance::Derived)?;
                    return Ok(EquivResponse::Cex(mu));
                }
                None => unknown.push(mu),
            }
        }
        // Up to a few full derivations on the sampled picks, then a coin.
        let mut budget = 4;
        while !unknown.is_empty() {
            let pick = rng.random_range(0..unknown.len());
            let mu = unknown.swap_remove(pick);
            let implied = !beta.eval(&mu);
            if budget > 0 && !self.cache.contains_key(&mu) {
                budget -= 1;
                match self.derive(&mu, solver)? {
                    Some(v) if v != implied => {
                        self.record(&mu, v, Provenance::Derived)?;
                        continue;
                    }
                    Some(v) => {
                        self.record(&mu, v, Provenance::Derived)?;
                        return Ok(EquivResponse::Cex(mu));
                    }
                    None => {}
                }
            }
            self.random_answers += 1;
            self.record(&mu, implied, Provenance::Random)?;
            return Ok(EquivResponse::Cex(mu));
        }
        Err(TeacherError::ExcessiveRandomAnswers(theta))
    }

    /// Abstract valuations usable as a random counterexample to `β`: those
    /// not cached with the value `β` already assigns (a counterexample
    /// implies `target(μ) = ¬β(μ)`).
    fn random_candidates(&self, beta: &BoolFormula, rng: &mut ChaCha8Rng) -> Vec<AbstractVal> {
        let n = self.p.len();
        let consistent = |mu: &AbstractVal, cache: &BTreeMap<AbstractVal, (bool, Provenance)>| {
            match cache.get(mu) {
                None => true,
                Some((v, _)) => *v == !beta.eval(mu),
            }
        };
        if n > 16 {
            // Beyond enumeration scale: a bounded random sample.
            let mut seen = std::collections::BTreeSet::new();
            let mut out = Vec::new();
            for _ in 0..512 {
                let mu = AbstractVal((0..n).map(|_| rng.random()).collect());
                if consistent(&mu, &self.cache) && seen.insert(mu.clone()) {
                    out.push(mu);
                }
            }
            return out;
        }
        (0..(1usize << n))
            .map(|ix| AbstractVal::from_index(n, ix))
            .filter(|mu| consistent(mu, &self.cache))
            .collect()
    }

    /// Scan the recorded counterexamples for two distinct valuations with
    /// equal abstraction and opposite directions.
    pub fn find_conflict_pair(&self) -> ConflictEvidence {
        for i in 0..self.cex.len() {
            for j in (i + 1)..self.cex.len() {
                let a = &self.cex[i];
                let b = &self.cex[j];
                if a.valuation == b.valuation || a.direction == b.direction {
                    continue;
                }
                let ma = alpha_star(&a.valuation, &self.p);
                let mb = alpha_star(&b.valuation, &self.p);
                if let (Ok(ma), Ok(mb)) = (ma, mb) {
                    if ma == mb {
                        return ConflictEvidence::ConcretePair(
                            a.valuation.clone(),
                            b.valuation.clone(),
                        );
                    }
                }
            }
        }
        ConflictEvidence::RandomOnly
    }

    /// Sanity invariant from the construction: yes-answers are only given
    /// for verified invariants.
    pub fn verify_yes(&mut self, beta: &BoolFormula, solver: &mut Solver) -> bool {
        let theta = gamma(beta, &self.p);
        matches!(self.check_invariant(&theta, solver), Ok(InvariantCheck::Holds))
    }
}

/// Evaluate `ν ⊨ φ` where the valuation is total on program variables.
pub fn models(nu: &Valuation, phi: &Formula) -> bool {
    evaluate(phi, nu).unwrap_or(false)
}
