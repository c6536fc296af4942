//! Literals, cubes and DNF expansion.
//!
//! A cube is a conjunction of literals: Boolean variables with a polarity
//! plus linear-atom literals. Negated inequalities renormalize into positive
//! atoms (`¬(f ≤ 0) ↦ −f < 0`); only negated equalities remain as negative
//! literals and are branch-split by the theory layer.

use crate::logic::{Formula, LinAtom, Rational, RelOp, Var};

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use super::simplex::{TheoryConstraint, TheoryRel};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinLit {
    pub atom: LinAtom,
    /// `false` only for equality atoms (a negated-equality literal).
    pub positive: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cube {
    pub bools: BTreeMap<Var, bool>,
    pub lins: BTreeSet<LinLit>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DnfError {
    #[error("DNF expansion exceeded the configured cube cap ({0})")]
    Blowup(usize),
}

impl Cube {
    /// Add a literal; `None` means the cube became syntactically false.
    fn add_bool(&mut self, v: Var, val: bool) -> Option<()> {
        match self.bools.insert(v.clone(), val) {
            Some(old) if old != val => None,
            _ => Some(()),
        }
    }

    fn add_lin(&mut self, lit: LinLit) -> Option<()> {
        // Complementary pair detection: an atom together with its
        // renormalized negation, or an equality in both polarities.
        let complement = match (lit.atom.rel, lit.positive) {
            (RelOp::Eq, pos) => LinLit { atom: lit.atom.clone(), positive: !pos },
            _ => match lit.atom.negate_inequality() {
                Some(n) => LinLit { atom: n, positive: true },
                None => unreachable!("non-Eq atoms always negate"),
            },
        };
        if self.lins.contains(&complement) {
            return None;
        }
        self.lins.insert(lit);
        Some(())
    }

    fn merge(&self, other: &Cube) -> Option<Cube> {
        let mut out = self.clone();
        for (v, b) in &other.bools {
            out.add_bool(v.clone(), *b)?;
        }
        for l in &other.lins {
            out.add_lin(l.clone())?;
        }
        Some(out)
    }

    pub fn is_empty(&self) -> bool {
        self.bools.is_empty() && self.lins.is_empty()
    }

    /// The conjunction this cube denotes.
    pub fn to_formula(&self) -> Formula {
        let bools = self.bools.iter().map(|(v, b)| {
            let f = Formula::BoolVar(v.clone());
            if *b {
                f
            } else {
                f.not()
            }
        });
        let lins = self.lins.iter().map(|l| {
            let f = l.atom.to_formula();
            if l.positive {
                f
            } else {
                f.not()
            }
        });
        Formula::and(bools.chain(lins))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = self.bools.keys().cloned().collect();
        for l in &self.lins {
            out.extend(l.atom.vars().cloned());
        }
        out
    }

    /// Positive linear literals as theory constraints (negated equalities
    /// must be split away first).
    pub fn theory_constraints(&self) -> Vec<TheoryConstraint> {
        self.lins
            .iter()
            .filter(|l| l.positive)
            .map(|l| lin_atom_constraint(&l.atom))
            .collect()
    }

    /// The negated-equality literals of the cube.
    pub fn negated_equalities(&self) -> Vec<&LinAtom> {
        self.lins
            .iter()
            .filter(|l| !l.positive)
            .map(|l| &l.atom)
            .collect()
    }
}

/// `constant + Σ c·v rel 0` as a bounded form `Σ c·v rel −constant`.
pub fn lin_atom_constraint(atom: &LinAtom) -> TheoryConstraint {
    TheoryConstraint {
        coeffs: atom
            .coeffs
            .iter()
            .map(|(v, c)| (v.clone(), Rational::from_integer(c.clone())))
            .collect(),
        rel: match atom.rel {
            RelOp::Lt => TheoryRel::Lt,
            RelOp::Le => TheoryRel::Le,
            RelOp::Eq => TheoryRel::Eq,
        },
        bound: Rational::from_integer(-atom.constant.clone()),
    }
}

/// The two strict branches of a negated equality `f ≠ 0`.
pub fn split_negated_equality(atom: &LinAtom) -> [TheoryConstraint; 2] {
    let lt = TheoryConstraint {
        coeffs: atom
            .coeffs
            .iter()
            .map(|(v, c)| (v.clone(), Rational::from_integer(c.clone())))
            .collect(),
        rel: TheoryRel::Lt,
        bound: Rational::from_integer(-atom.constant.clone()),
    };
    let gt = TheoryConstraint {
        coeffs: atom
            .coeffs
            .iter()
            .map(|(v, c)| (v.clone(), -Rational::from_integer(c.clone())))
            .collect(),
        rel: TheoryRel::Lt,
        bound: Rational::from_integer(atom.constant.clone()),
    };
    [lt, gt]
}

/// An arithmetic literal in negation normal form.
enum Lit {
    Lin(LinLit),
    Const(bool),
}

fn literal(op: RelOp, a: &crate::logic::Term, b: &crate::logic::Term, positive: bool) -> Lit {
    let atom = LinAtom::new(op, a, b);
    if let Some(t) = atom.trivial_truth() {
        return Lit::Const(t == positive);
    }
    if positive {
        Lit::Lin(LinLit { atom, positive: true })
    } else {
        match atom.negate_inequality() {
            Some(n) => Lit::Lin(LinLit { atom: n, positive: true }),
            None => Lit::Lin(LinLit { atom, positive: false }),
        }
    }
}

/// Expand to a list of syntactically consistent cubes, with a hard cap on
/// the number of cubes produced. The caller filters for theory
/// satisfiability.
pub fn dnf(phi: &Formula, cap: usize) -> Result<Vec<Cube>, DnfError> {
    fn go(phi: &Formula, positive: bool, cap: usize) -> Result<Vec<Cube>, DnfError> {
        match phi {
            Formula::True => Ok(if positive { vec![Cube::default()] } else { vec![] }),
            Formula::False => Ok(if positive { vec![] } else { vec![Cube::default()] }),
            Formula::BoolVar(v) => {
                let mut c = Cube::default();
                let _ = c.add_bool(v.clone(), positive);
                Ok(vec![c])
            }
            Formula::Not(g) => go(g, !positive, cap),
            Formula::And(gs) if positive => product(gs, true, cap),
            Formula::Or(gs) if !positive => product(gs, false, cap),
            Formula::And(gs) => union(gs, false, cap),
            Formula::Or(gs) => union(gs, true, cap),
            Formula::Cmp(op, a, b) => Ok(match literal(*op, a, b, positive) {
                Lit::Const(true) => vec![Cube::default()],
                Lit::Const(false) => vec![],
                Lit::Lin(l) => {
                    let mut c = Cube::default();
                    let _ = c.add_lin(l);
                    vec![c]
                }
            }),
        }
    }

    fn union(gs: &[Formula], positive: bool, cap: usize) -> Result<Vec<Cube>, DnfError> {
        let mut out = Vec::new();
        for g in gs {
            out.extend(go(g, positive, cap)?);
            if out.len() > cap {
                return Err(DnfError::Blowup(cap));
            }
        }
        Ok(out)
    }

    fn product(gs: &[Formula], positive: bool, cap: usize) -> Result<Vec<Cube>, DnfError> {
        let mut acc = vec![Cube::default()];
        for g in gs {
            let parts = go(g, positive, cap)?;
            let mut next = Vec::new();
            for a in &acc {
                for p in &parts {
                    if let Some(m) = a.merge(p) {
                        next.push(m);
                    }
                    if next.len() > cap {
                        return Err(DnfError::Blowup(cap));
                    }
                }
            }
            acc = next;
            if acc.is_empty() {
                break;
            }
        }
        Ok(acc)
    }

    go(phi, true, cap)
}

/// Truth of `phi` under a total assignment to its normalized atoms.
fn eval_skeleton(phi: &Formula, assign: &BTreeMap<crate::logic::Atom, bool>) -> bool {
    use crate::logic::Atom;
    match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::BoolVar(v) => assign[&Atom::Bool(v.clone())],
        Formula::Not(g) => !eval_skeleton(g, assign),
        Formula::And(gs) => gs.iter().all(|g| eval_skeleton(g, assign)),
        Formula::Or(gs) => gs.iter().any(|g| eval_skeleton(g, assign)),
        Formula::Cmp(op, a, b) => {
            let atom = LinAtom::new(*op, a, b);
            match atom.trivial_truth() {
                Some(t) => t,
                None => assign[&Atom::Lin(atom)],
            }
        }
    }
}

/// Minterm-level DNF: enumerate assignments to the formula's atoms and keep
/// the satisfying ones as full cubes. Exponential in the number of distinct
/// atoms, but immune to the clause-product blowup of structural expansion;
/// used as a fallback for formulas with few atoms and much sharing, like
/// concretized learner hypotheses.
pub fn dnf_minterms(phi: &Formula, cap: usize) -> Result<Vec<Cube>, DnfError> {
    use crate::logic::{atoms_of, Atom};
    let atoms: Vec<Atom> = atoms_of(phi).into_iter().collect();
    if atoms.len() > 16 {
        return Err(DnfError::Blowup(cap));
    }
    let mut out = Vec::new();
    for ix in 0..(1usize << atoms.len()) {
        let assign: BTreeMap<Atom, bool> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), (ix >> i) & 1 == 1))
            .collect();
        if !eval_skeleton(phi, &assign) {
            continue;
        }
        let mut cube = Cube::default();
        let mut ok = true;
        for (a, val) in &assign {
            let added = match a {
                Atom::Bool(v) => cube.add_bool(v.clone(), *val),
                Atom::Lin(l) => {
                    let lit = if *val {
                        LinLit { atom: l.clone(), positive: true }
                    } else {
                        match l.negate_inequality() {
                            Some(n) => LinLit { atom: n, positive: true },
                            None => LinLit { atom: l.clone(), positive: false },
                        }
                    };
                    cube.add_lin(lit)
                }
            };
            if added.is_none() {
                ok = false;
                break;
            }
        }
        if ok {
            out.push(cube);
            if out.len() > cap {
                return Err(DnfError::Blowup(cap));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Term;

    #[test]
    fn dnf_of_disjunction_of_cubes() {
        let x = Term::var("x");
        let phi = Formula::or([
            Formula::and([Formula::bool_var("b"), Formula::lt(x.clone(), Term::int(0))]),
            Formula::bool_var("c").not(),
        ]);
        let cubes = dnf(&phi, 64).unwrap();
        assert_eq!(cubes.len(), 2);
        assert_eq!(cubes[0].bools[&Var::plain("b")], true);
        assert_eq!(cubes[1].bools[&Var::plain("c")], false);
    }

    #[test]
    fn negation_pushes_inward() {
        // ¬(b ∧ x ≤ 0) → ¬b ∨ −x < 0
        let phi = Formula::and([
            Formula::bool_var("b"),
            Formula::le(Term::var("x"), Term::int(0)),
        ])
        .not();
        let cubes = dnf(&phi, 64).unwrap();
        assert_eq!(cubes.len(), 2);
        assert_eq!(cubes[0].bools[&Var::plain("b")], false);
        let lit = cubes[1].lins.iter().next().unwrap();
        assert!(lit.positive);
        assert_eq!(lit.atom.rel, RelOp::Lt);
    }

    #[test]
    fn contradictory_cubes_dropped() {
        let phi = Formula::and([Formula::bool_var("b"), Formula::bool_var("b").not()]);
        assert!(dnf(&phi, 64).unwrap().is_empty());
        // x ≤ 0 ∧ ¬(x ≤ 0)
        let x = Term::var("x");
        let psi = Formula::and([
            Formula::le(x.clone(), Term::int(0)),
            Formula::le(x, Term::int(0)).not(),
        ]);
        assert!(dnf(&psi, 64).unwrap().is_empty());
    }

    #[test]
    fn cap_enforced() {
        // (a||b) && (c||d) && (e||f) has 8 cubes.
        let pair = |x: &str, y: &str| Formula::or([Formula::bool_var(x), Formula::bool_var(y)]);
        let phi = Formula::and([pair("a", "b"), pair("c", "d"), pair("e", "f")]);
        assert_eq!(dnf(&phi, 8).unwrap().len(), 8);
        assert!(matches!(dnf(&phi, 7), Err(DnfError::Blowup(7))));
    }

    #[test]
    fn negated_equality_kept_as_literal() {
        let phi = Formula::eq(Term::var("x"), Term::var("y")).not();
        let cubes = dnf(&phi, 8).unwrap();
        assert_eq!(cubes.len(), 1);
        let lit = cubes[0].lins.iter().next().unwrap();
        assert!(!lit.positive);
        assert_eq!(lit.atom.rel, RelOp::Eq);
    }
}
