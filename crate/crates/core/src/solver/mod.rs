//! Satisfiability and validity for quantifier-free formulas over linear
//! rational arithmetic plus Boolean variables.
//!
//! The builtin backend runs a CNF-free DPLL-style search over the Boolean
//! skeleton of the formula; whenever the skeleton is decided true under a
//! partial atom assignment, the conjunction of assigned arithmetic literals
//! is checked by the exact-rational simplex core (negated equalities split
//! into their two strict branches). This is complete for the fragment.
//!
//! One solver instance serves one engine run; instances are independent.

pub mod cube;
pub mod simplex;
pub mod smtlib;

use crate::logic::{evaluate, Atom, Formula, LinAtom, Value, Valuation, Var};
use num_traits::Zero;
use std::collections::BTreeMap;
use std::rc::Rc;
use std::time::{Duration, Instant};
use thiserror::Error;

use cube::{lin_atom_constraint, split_negated_equality};
use simplex::TheoryConstraint;

#[derive(Debug, Clone, Error)]
pub enum SolverError {
    #[error("solver timed out")]
    Timeout,
    #[error("external solver failure: {0}")]
    External(String),
}

/// Which decision procedure backs `check_sat`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Backend {
    #[default]
    Builtin,
    /// Command template for an SMT-LIB2 process, e.g. `z3 -in`.
    External(String),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub backend: Backend,
    /// Per-query time limit in milliseconds. Must be positive.
    pub query_timeout_ms: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { backend: Backend::Builtin, query_timeout_ms: 30_000 }
    }
}

/// Result of a satisfiability query.
#[derive(Debug, Clone)]
pub enum SatResult {
    Sat(Valuation),
    Unsat { core: Option<Vec<usize>> },
}

#[derive(Debug, Clone)]
pub enum Validity {
    Valid,
    Counterexample(Valuation),
}

#[derive(Debug, Default)]
pub struct Solver {
    pub cfg: SolverConfig,
    pub queries: u64,
}

impl Solver {
    pub fn new(cfg: SolverConfig) -> Self {
        assert!(cfg.query_timeout_ms > 0);
        Solver { cfg, queries: 0 }
    }

    pub fn builtin() -> Self {
        Solver::new(SolverConfig::default())
    }

    fn deadline(&self) -> Instant {
        Instant::now() + Duration::from_millis(self.cfg.query_timeout_ms)
    }

    /// Does `phi` have a model? Models assign every free variable of `phi`.
    pub fn check_sat(&mut self, phi: &Formula) -> Result<SatResult, SolverError> {
        self.queries += 1;
        match &self.cfg.backend {
            Backend::Builtin => {
                let deadline = self.deadline();
                let res = check_sat_builtin(phi, deadline);
                if cfg!(debug_assertions) {
                    if let Ok(SatResult::Sat(model)) = &res {
                        debug_assert_eq!(
                            evaluate(phi, model),
                            Ok(true),
                            "model fails to satisfy the query: {phi} under {model:?}"
                        );
                    }
                }
                res
            }
            Backend::External(cmd) => {
                let cmd = cmd.clone();
                smtlib::check_sat_external(&cmd, phi, self.deadline())
            }
        }
    }

    /// Is `phi` valid? Wraps `check_sat(¬phi)`.
    pub fn check_valid(&mut self, phi: &Formula) -> Result<Validity, SolverError> {
        match self.check_sat(&phi.clone().not())? {
            SatResult::Unsat { .. } => Ok(Validity::Valid),
            SatResult::Sat(model) => Ok(Validity::Counterexample(model)),
        }
    }

    pub fn is_valid(&mut self, phi: &Formula) -> Result<bool, SolverError> {
        Ok(matches!(self.check_valid(phi)?, Validity::Valid))
    }

    pub fn is_sat(&mut self, phi: &Formula) -> Result<bool, SolverError> {
        Ok(matches!(self.check_sat(phi)?, SatResult::Sat(_)))
    }
}

/// Feasibility of a set of theory constraints plus optional negated
/// equalities, splitting the latter into strict branches with infeasible
/// prefixes pruned. Returns the first satisfying rational assignment found.
pub fn theory_feasible(
    constraints: &[TheoryConstraint],
    negated_equalities: &[&LinAtom],
    deadline: Option<Instant>,
) -> Result<Option<BTreeMap<Var, crate::logic::Rational>>, SolverError> {
    match simplex::solve_feasible(constraints, deadline)? {
        None => return Ok(None),
        Some(m) => {
            if negated_equalities.is_empty() {
                return Ok(Some(m));
            }
            // The relaxation model may already pick every disequality side.
            let all_avoided = negated_equalities.iter().all(|atom| {
                let mut v = crate::logic::Rational::from_integer(atom.constant.clone());
                for (var, c) in &atom.coeffs {
                    match m.get(var) {
                        Some(x) => v += crate::logic::Rational::from_integer(c.clone()) * x,
                        None => return false,
                    }
                }
                !num_traits::Zero::is_zero(&v)
            });
            if all_avoided {
                return Ok(Some(m));
            }
        }
    }
    let (first, rest) = negated_equalities.split_first().unwrap();
    for branch in split_negated_equality(first) {
        let mut cs = constraints.to_vec();
        cs.push(branch);
        if let Some(m) = theory_feasible(&cs, rest, deadline)? {
            return Ok(Some(m));
        }
    }
    Ok(None)
}

/// Compiled Boolean skeleton: leaves index into an atom table. Shared via
/// `Rc` so that assigning an atom rebuilds only the affected spine.
#[derive(Clone)]
enum Sk {
    True,
    False,
    Lit(usize, bool),
    And(Vec<Rc<Sk>>),
    Or(Vec<Rc<Sk>>),
}

struct AtomTable {
    atoms: Vec<Atom>,
    ids: BTreeMap<Atom, usize>,
}

impl AtomTable {
    fn intern(&mut self, a: Atom) -> usize {
        if let Some(id) = self.ids.get(&a) {
            return *id;
        }
        let id = self.atoms.len();
        self.atoms.push(a.clone());
        self.ids.insert(a, id);
        id
    }
}

fn compile(phi: &Formula, table: &mut AtomTable, positive: bool) -> Rc<Sk> {
    match phi {
        Formula::True => Rc::new(if positive { Sk::True } else { Sk::False }),
        Formula::False => Rc::new(if positive { Sk::False } else { Sk::True }),
        Formula::BoolVar(v) => Rc::new(Sk::Lit(table.intern(Atom::Bool(v.clone())), positive)),
        Formula::Not(g) => compile(g, table, !positive),
        Formula::And(gs) | Formula::Or(gs) => {
            let conj = matches!(phi, Formula::And(_)) == positive;
            let mut parts = Vec::with_capacity(gs.len());
            for g in gs {
                let p = compile(g, table, positive);
                match (&*p, conj) {
                    (Sk::True, true) | (Sk::False, false) => continue,
                    (Sk::False, true) => return Rc::new(Sk::False),
                    (Sk::True, false) => return Rc::new(Sk::True),
                    _ => parts.push(p),
                }
            }
            Rc::new(match (parts.len(), conj) {
                (0, true) => Sk::True,
                (0, false) => Sk::False,
                (1, _) => return parts.pop().unwrap(),
                (_, true) => Sk::And(parts),
                (_, false) => Sk::Or(parts),
            })
        }
        Formula::Cmp(op, a, b) => {
            let atom = LinAtom::new(*op, a, b);
            Rc::new(match atom.trivial_truth() {
                Some(t) => {
                    if t == positive {
                        Sk::True
                    } else {
                        Sk::False
                    }
                }
                None => Sk::Lit(table.intern(Atom::Lin(atom)), positive),
            })
        }
    }
}

/// Substitute one atom and constant-fold. Untouched subtrees are shared.
fn assume(sk: &Rc<Sk>, id: usize, value: bool) -> Rc<Sk> {
    match &**sk {
        Sk::True | Sk::False => sk.clone(),
        Sk::Lit(i, pos) => {
            if *i == id {
                Rc::new(if value == *pos { Sk::True } else { Sk::False })
            } else {
                sk.clone()
            }
        }
        Sk::And(parts) => {
            let mut out = Vec::with_capacity(parts.len());
            let mut changed = false;
            for p in parts {
                let q = assume(p, id, value);
                match &*q {
                    Sk::False => return q,
                    Sk::True => {
                        changed = true;
                    }
                    _ => {
                        changed |= !Rc::ptr_eq(&q, p);
                        out.push(q);
                    }
                }
            }
            if !changed {
                sk.clone()
            } else if out.is_empty() {
                Rc::new(Sk::True)
            } else if out.len() == 1 {
                out.pop().unwrap()
            } else {
                Rc::new(Sk::And(out))
            }
        }
        Sk::Or(parts) => {
            let mut out = Vec::with_capacity(parts.len());
            let mut changed = false;
            for p in parts {
                let q = assume(p, id, value);
                match &*q {
                    Sk::True => return q,
                    Sk::False => {
                        changed = true;
                    }
                    _ => {
                        changed |= !Rc::ptr_eq(&q, p);
                        out.push(q);
                    }
                }
            }
            if !changed {
                sk.clone()
            } else if out.is_empty() {
                Rc::new(Sk::False)
            } else if out.len() == 1 {
                out.pop().unwrap()
            } else {
                Rc::new(Sk::Or(out))
            }
        }
    }
}

/// Leftmost literal of a non-constant skeleton: follows the source
/// structure, so branch conditions are decided before the frames they gate.
fn pick_lit(sk: &Sk) -> Option<usize> {
    match sk {
        Sk::True | Sk::False => None,
        Sk::Lit(id, _) => Some(*id),
        Sk::And(parts) | Sk::Or(parts) => parts.iter().find_map(|p| pick_lit(p)),
    }
}

/// Check the theory part of a complete-enough assignment; on success build a
/// full model over `free` (defaults: rationals 0, Booleans false).
fn assignment_model(
    atoms: &[Atom],
    assign: &[Option<bool>],
    free: &std::collections::BTreeSet<Var>,
    deadline: Instant,
) -> Result<Option<Valuation>, SolverError> {
    let mut constraints: Vec<TheoryConstraint> = Vec::new();
    let mut neg_eqs: Vec<LinAtom> = Vec::new();
    let mut bools: BTreeMap<Var, bool> = BTreeMap::new();
    for (id, val) in assign.iter().enumerate() {
        let val = match val {
            Some(v) => *v,
            None => continue,
        };
        match &atoms[id] {
            Atom::Bool(v) => {
                bools.insert(v.clone(), val);
            }
            Atom::Lin(a) => {
                if val {
                    constraints.push(lin_atom_constraint(a));
                } else {
                    match a.negate_inequality() {
                        Some(n) => constraints.push(lin_atom_constraint(&n)),
                        None => neg_eqs.push(a.clone()),
                    }
                }
            }
        }
    }
    let neg_refs: Vec<&LinAtom> = neg_eqs.iter().collect();
    let rats = match theory_feasible(&constraints, &neg_refs, Some(deadline))? {
        Some(m) => m,
        None => return Ok(None),
    };
    let mut model = Valuation::new();
    for (v, r) in rats {
        model.set(v, Value::Rat(r));
    }
    for (v, b) in bools {
        model.set(v, Value::Bool(b));
    }
    // Every free variable of the query gets a value.
    for v in free {
        if model.0.contains_key(v) {
            continue;
        }
        let is_bool = atoms.iter().any(|a| matches!(a, Atom::Bool(b) if b == v));
        if is_bool {
            model.set(v.clone(), Value::Bool(false));
        } else {
            model.set(v.clone(), Value::Rat(crate::logic::Rational::zero()));
        }
    }
    Ok(Some(model))
}

fn check_sat_builtin(phi: &Formula, deadline: Instant) -> Result<SatResult, SolverError> {
    let mut table = AtomTable { atoms: Vec::new(), ids: BTreeMap::new() };
    let sk = compile(phi, &mut table, true);
    let free = crate::logic::free_vars(phi);
    let n = table.atoms.len();
    let mut assign: Vec<Option<bool>> = vec![None; n];

    fn search(
        sk: &Rc<Sk>,
        atoms: &[Atom],
        assign: &mut Vec<Option<bool>>,
        free: &std::collections::BTreeSet<Var>,
        deadline: Instant,
        ticks: &mut u32,
    ) -> Result<Option<Valuation>, SolverError> {
        *ticks += 1;
        if *ticks % 256 == 0 && Instant::now() > deadline {
            return Err(SolverError::Timeout);
        }
        match &**sk {
            Sk::False => Ok(None),
            Sk::True => assignment_model(atoms, assign, free, deadline),
            _ => {
                let id = pick_lit(sk).expect("non-constant skeleton has a literal");
                for val in [true, false] {
                    assign[id] = Some(val);
                    let next = assume(sk, id, val);
                    if let Some(m) = search(&next, atoms, assign, free, deadline, ticks)? {
                        assign[id] = None;
                        return Ok(Some(m));
                    }
                    assign[id] = None;
                }
                Ok(None)
            }
        }
    }

    let mut ticks = 0;
    match search(&sk, &table.atoms, &mut assign, &free, deadline, &mut ticks)? {
        Some(model) => Ok(SatResult::Sat(model)),
        None => Ok(SatResult::Unsat { core: None }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Term;

    fn intro_under() -> Formula {
        // δ ∨ ε = (n≥0 ∧ x=n ∧ y=n) ∨ (x+y=0)
        Formula::or([
            Formula::and([
                Formula::le(Term::int(0), Term::var("n")),
                Formula::eq(Term::var("x"), Term::var("n")),
                Formula::eq(Term::var("y"), Term::var("n")),
            ]),
            Formula::eq(Term::var("x").add(Term::var("y")), Term::int(0)),
        ])
    }

    fn intro_over() -> Formula {
        // ε ∨ κ = (x+y=0) ∨ (x>0)
        Formula::or([
            Formula::eq(Term::var("x").add(Term::var("y")), Term::int(0)),
            Formula::lt(Term::int(0), Term::var("x")),
        ])
    }

    #[test]
    fn paper_inconsistent_formula_is_unsat() {
        // (n≥0 ∧ x=n ∧ y=n) ∧ ¬(x>0 ∨ x+y=0)
        let delta = Formula::and([
            Formula::le(Term::int(0), Term::var("n")),
            Formula::eq(Term::var("x"), Term::var("n")),
            Formula::eq(Term::var("y"), Term::var("n")),
        ]);
        let phi = Formula::and([delta, intro_over().not()]);
        let mut s = Solver::builtin();
        assert!(matches!(s.check_sat(&phi).unwrap(), SatResult::Unsat { .. }));
    }

    #[test]
    fn negated_implication_has_model() {
        // ¬(T ⇒ (x+y=0 ∨ x>0)) is satisfiable.
        let phi = Formula::True.implies(intro_over()).not();
        let mut s = Solver::builtin();
        match s.check_sat(&phi).unwrap() {
            SatResult::Sat(m) => {
                assert!(!evaluate(&intro_over(), &m).unwrap());
            }
            SatResult::Unsat { .. } => panic!("expected sat"),
        }
    }

    #[test]
    fn simple_conflict_unsat() {
        let phi = Formula::and([
            Formula::lt(Term::int(0), Term::var("x")),
            Formula::eq(Term::var("x"), Term::int(0)),
        ]);
        let mut s = Solver::builtin();
        assert!(matches!(s.check_sat(&phi).unwrap(), SatResult::Unsat { .. }));
    }

    #[test]
    fn validity_of_self_implication() {
        let phi = intro_under();
        let mut s = Solver::builtin();
        assert!(s.is_valid(&phi.clone().implies(phi)).unwrap());
    }

    #[test]
    fn counterexample_for_invalid_implication() {
        // (δ∨ε) ⇒ False has a counterexample.
        let mut s = Solver::builtin();
        match s.check_valid(&intro_under().implies(Formula::False)).unwrap() {
            Validity::Counterexample(m) => {
                assert!(evaluate(&intro_under(), &m).unwrap());
            }
            Validity::Valid => panic!("expected counterexample"),
        }
    }

    #[test]
    fn negated_equalities_split() {
        // x ≠ 0 ∧ x ≤ 0 is satisfiable (x < 0); x ≠ 0 ∧ x = 0 is not.
        let x = Term::var("x");
        let mut s = Solver::builtin();
        let phi = Formula::and([
            Formula::eq(x.clone(), Term::int(0)).not(),
            Formula::le(x.clone(), Term::int(0)),
        ]);
        assert!(s.is_sat(&phi).unwrap());
        let psi = Formula::and([
            Formula::eq(x.clone(), Term::int(0)).not(),
            Formula::eq(x, Term::int(0)),
        ]);
        assert!(!s.is_sat(&psi).unwrap());
    }

    #[test]
    fn pure_boolean_reasoning() {
        let b = || Formula::bool_var("b");
        let c = || Formula::bool_var("c");
        let mut s = Solver::builtin();
        let phi = Formula::and([
            Formula::or([b(), c()]),
            b().not(),
        ]);
        match s.check_sat(&phi).unwrap() {
            SatResult::Sat(m) => {
                assert_eq!(m.get(&Var::plain("b")).unwrap(), &Value::Bool(false));
                assert_eq!(m.get(&Var::plain("c")).unwrap(), &Value::Bool(true));
            }
            _ => panic!("expected sat"),
        }
        assert!(!s.is_sat(&Formula::and([b(), b().not()])).unwrap());
    }
}
