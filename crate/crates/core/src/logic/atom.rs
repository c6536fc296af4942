//! Normalized atomic predicates.
//!
//! An atom is either a Boolean variable or a linear constraint
//! `c₀ + Σ cᵢ·xᵢ ⋈ 0` with `⋈ ∈ {<, ≤, =}`, integer coefficients with gcd 1
//! and, for equalities, the lexicographically least variable's coefficient
//! positive. Normalization deduplicates syntactic variants (`2y ≥ 0` and
//! `y ≥ 0` become the same atom), which keeps predicate sets small.

use super::{linear_form, Formula, Rational, RelOp, Term, Var};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// A normalized linear constraint `constant + Σ coeffs[v]·v  rel  0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinAtom {
    pub rel: RelOp,
    pub constant: BigInt,
    pub coeffs: BTreeMap<Var, BigInt>,
}

impl LinAtom {
    /// Normalize `lhs rel rhs` into atom form. Scaling is by a positive
    /// rational only, except for equalities where the sign is canonicalized.
    pub fn new(rel: RelOp, lhs: &Term, rhs: &Term) -> LinAtom {
        let (coeffs, constant) = linear_form(&lhs.clone().sub(rhs.clone()));
        LinAtom::from_parts(rel, constant, coeffs)
    }

    /// Normalize `constant + Σ coeffs·v  rel  0` given rational parts.
    pub fn from_parts(
        rel: RelOp,
        constant: Rational,
        coeffs: BTreeMap<Var, Rational>,
    ) -> LinAtom {
        let mut coeffs = coeffs;
        let mut constant = constant;
        coeffs.retain(|_, c| !c.is_zero());
        // Clear denominators.
        let mut denom_lcm = BigInt::one();
        for c in coeffs.values().chain(std::iter::once(&constant)) {
            denom_lcm = denom_lcm.lcm(c.denom());
        }
        let scale = Rational::from_integer(denom_lcm);
        for c in coeffs.values_mut() {
            *c *= &scale;
        }
        constant *= &scale;
        let mut icoeffs: BTreeMap<Var, BigInt> = coeffs
            .into_iter()
            .map(|(v, c)| (v, c.to_integer()))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        let mut iconst = constant.to_integer();

        // Reduce by the gcd of all coefficients (constant included).
        let mut g = BigInt::zero();
        for c in icoeffs.values() {
            g = g.gcd(c);
        }
        g = g.gcd(&iconst);
        if g > BigInt::one() {
            for c in icoeffs.values_mut() {
                *c /= &g;
            }
            iconst /= &g;
        }

        // Ground atom: collapse the constant to its sign.
        if icoeffs.is_empty() {
            iconst = match iconst.sign() {
                num_bigint::Sign::Minus => BigInt::from(-1),
                num_bigint::Sign::NoSign => BigInt::zero(),
                num_bigint::Sign::Plus => BigInt::one(),
            };
        }

        // Equalities admit both signs; pick the one where the least
        // variable's coefficient is positive.
        if rel == RelOp::Eq {
            let flip = match icoeffs.iter().next() {
                Some((_, c)) => c.is_negative(),
                None => iconst.is_negative(),
            };
            if flip {
                for c in icoeffs.values_mut() {
                    *c = -c.clone();
                }
                iconst = -iconst;
            }
        }

        LinAtom { rel, constant: iconst, coeffs: icoeffs }
    }

    /// A constraint with no variables is trivially true or false.
    pub fn trivial_truth(&self) -> Option<bool> {
        if !self.coeffs.is_empty() {
            return None;
        }
        Some(match self.rel {
            RelOp::Lt => self.constant.is_negative(),
            RelOp::Le => !self.constant.is_positive(),
            RelOp::Eq => self.constant.is_zero(),
        })
    }

    /// The negation of a strict/weak inequality, renormalized:
    /// `¬(f < 0) ↦ −f ≤ 0` and `¬(f ≤ 0) ↦ −f < 0`. Equalities have no
    /// atom-level negation; callers keep a negated-equality literal.
    pub fn negate_inequality(&self) -> Option<LinAtom> {
        let rel = match self.rel {
            RelOp::Lt => RelOp::Le,
            RelOp::Le => RelOp::Lt,
            RelOp::Eq => return None,
        };
        Some(LinAtom {
            rel,
            constant: -self.constant.clone(),
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c.clone())).collect(),
        })
    }

    /// Variables of the atom, in order.
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    /// Strip variable indices (used on single-block interpolant atoms).
    pub fn desuperscript(&self) -> LinAtom {
        LinAtom {
            rel: self.rel,
            constant: self.constant.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|(v, c)| (v.without_index(), c.clone()))
                .collect(),
        }
    }

    /// Rebuild a formula. Positive-coefficient parts stay on the left, the
    /// rest move right, so `x − y = 0` prints as `x = y`. Coefficients `k`
    /// are expanded as repeated addition since the term language has no
    /// multiplication.
    pub fn to_formula(&self) -> Formula {
        fn push(side: &mut Option<Term>, t: Term) {
            *side = Some(match side.take() {
                None => t,
                Some(acc) => acc.add(t),
            });
        }
        let mut lhs: Option<Term> = None;
        let mut rhs: Option<Term> = None;
        if self.constant.is_positive() {
            push(&mut lhs, Term::Const(Rational::from_integer(self.constant.clone())));
        } else if self.constant.is_negative() {
            push(&mut rhs, Term::Const(Rational::from_integer(-self.constant.clone())));
        }
        for (v, c) in &self.coeffs {
            let (side, k) = if c.is_positive() {
                (&mut lhs, c.clone())
            } else {
                (&mut rhs, -c.clone())
            };
            let t = if k == BigInt::one() {
                Term::Var(v.clone())
            } else {
                Term::scaled(Rational::from_integer(k), Term::Var(v.clone()))
            };
            push(side, t);
        }
        let lhs = lhs.unwrap_or_else(|| Term::int(0));
        let rhs = rhs.unwrap_or_else(|| Term::int(0));
        Formula::Cmp(self.rel, lhs, rhs)
    }
}

/// An atomic predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Bool(Var),
    Lin(LinAtom),
}

impl Atom {
    pub fn to_formula(&self) -> Formula {
        match self {
            Atom::Bool(v) => Formula::BoolVar(v.clone()),
            Atom::Lin(l) => l.to_formula(),
        }
    }

    pub fn vars(&self) -> Vec<Var> {
        match self {
            Atom::Bool(v) => vec![v.clone()],
            Atom::Lin(l) => l.vars().cloned().collect(),
        }
    }

    pub fn desuperscript(&self) -> Atom {
        match self {
            Atom::Bool(v) => Atom::Bool(v.without_index()),
            Atom::Lin(l) => Atom::Lin(l.desuperscript()),
        }
    }
}

impl std::fmt::Display for Atom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// The set of normalized atoms occurring in a formula. Boolean structure is
/// discarded; a negated equality contributes the underlying equality atom;
/// ground (variable-free) comparisons contribute nothing.
pub fn atoms_of(phi: &Formula) -> std::collections::BTreeSet<Atom> {
    fn go(phi: &Formula, out: &mut std::collections::BTreeSet<Atom>) {
        match phi {
            Formula::True | Formula::False => {}
            Formula::BoolVar(v) => {
                out.insert(Atom::Bool(v.clone()));
            }
            Formula::Not(g) => go(g, out),
            Formula::And(gs) | Formula::Or(gs) => {
                for g in gs {
                    go(g, out);
                }
            }
            Formula::Cmp(op, a, b) => {
                let lin = LinAtom::new(*op, a, b);
                if lin.trivial_truth().is_none() {
                    out.insert(Atom::Lin(lin));
                }
            }
        }
    }
    let mut out = std::collections::BTreeSet::new();
    go(phi, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::rat;

    fn x() -> Term {
        Term::var("x")
    }
    fn y() -> Term {
        Term::var("y")
    }

    #[test]
    fn extraction_discards_structure() {
        // ¬(x=y) ∨ (x<1) → {x−y=0, x−1<0}
        let phi = Formula::or([
            Formula::eq(x(), y()).not(),
            Formula::lt(x(), Term::int(1)),
        ]);
        let atoms = atoms_of(&phi);
        assert_eq!(atoms.len(), 2);
        assert!(atoms.contains(&Atom::Lin(LinAtom::new(RelOp::Eq, &x(), &y()))));
        assert!(atoms.contains(&Atom::Lin(LinAtom::new(RelOp::Lt, &x(), &Term::int(1)))));
    }

    #[test]
    fn gcd_reduction_and_direction() {
        // 2y ≥ 0 is fed as 0 ≤ 2y, i.e. 0 − 2y ≤ 0, and normalizes to −y ≤ 0.
        let two_y = y().add(y());
        let atom = LinAtom::new(RelOp::Le, &Term::int(0), &two_y);
        assert_eq!(atom.rel, RelOp::Le);
        assert_eq!(atom.constant, BigInt::from(0));
        assert_eq!(atom.coeffs.len(), 1);
        assert_eq!(atom.coeffs[&Var::plain("y")], BigInt::from(-1));
        // Idempotent: renormalizing the rebuilt formula yields the same atom.
        match atom.to_formula() {
            Formula::Cmp(op, a, b) => assert_eq!(LinAtom::new(op, &a, &b), atom),
            _ => panic!("expected comparison"),
        }
    }

    #[test]
    fn trivial_atoms_dropped() {
        assert!(atoms_of(&Formula::True).is_empty());
        let ground = Formula::lt(Term::int(0), Term::int(1));
        assert!(atoms_of(&ground).is_empty());
    }

    #[test]
    fn equality_sign_canonical() {
        // y − x = 0 and x − y = 0 are the same atom.
        let a = LinAtom::new(RelOp::Eq, &y(), &x());
        let b = LinAtom::new(RelOp::Eq, &x(), &y());
        assert_eq!(a, b);
        assert!(a.coeffs[&Var::plain("x")].is_positive());
    }

    #[test]
    fn rational_constants_cleared() {
        // x ≤ 1/2 scales to 2x − 1 ≤ 0.
        let half = Term::Const(rat(1) / rat(2));
        let atom = LinAtom::new(RelOp::Le, &x(), &half);
        assert_eq!(atom.coeffs[&Var::plain("x")], BigInt::from(2));
        assert_eq!(atom.constant, BigInt::from(-1));
    }

    #[test]
    fn negate_inequalities() {
        let a = LinAtom::new(RelOp::Le, &x(), &y()); // x − y ≤ 0
        let n = a.negate_inequality().unwrap(); // y − x < 0
        assert_eq!(n.rel, RelOp::Lt);
        assert_eq!(n.coeffs[&Var::plain("x")], BigInt::from(-1));
        assert_eq!(n.coeffs[&Var::plain("y")], BigInt::from(1));
        let e = LinAtom::new(RelOp::Eq, &x(), &y());
        assert!(e.negate_inequality().is_none());
    }
}
