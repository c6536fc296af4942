//! Formula and term ASTs over exact rationals and Booleans, valuations,
//! substitution and variable indexing ("superscripting").
//!
//! The arithmetic domain is the rationals: program "natural numbers" are
//! modeled as unconstrained rational variables, with no integrality
//! constraints. All constants are exact `BigRational`s; no floating point
//! appears anywhere.

mod atom;
mod print;

pub use atom::{Atom, LinAtom, atoms_of};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type Rational = BigRational;

/// Build an exact rational from an integer.
pub fn rat(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Variable sort, fixed per variable for a whole problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Rat,
    Bool,
}

/// A (possibly superscripted) variable. `index: Some(k)` encodes `x⟨k⟩`;
/// `None` is the plain program variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub index: Option<u32>,
}

impl Var {
    pub fn plain(name: impl Into<String>) -> Self {
        Var { name: name.into(), index: None }
    }

    pub fn indexed(name: impl Into<String>, k: u32) -> Self {
        Var { name: name.into(), index: Some(k) }
    }

    pub fn with_index(&self, k: u32) -> Self {
        Var { name: self.name.clone(), index: Some(k) }
    }

    pub fn without_index(&self) -> Self {
        Var { name: self.name.clone(), index: None }
    }
}

/// Rational-sorted term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Rational),
    Var(Var),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// Scalar multiple `c·t`. Produced when atoms are rebuilt as formulas
    /// (coefficients grow beyond what repeated addition can express); the
    /// surface grammar accepts `int * primary`.
    Mul(Rational, Box<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(Var::plain(name))
    }

    pub fn int(n: i64) -> Term {
        Term::Const(rat(n))
    }

    pub fn add(self, other: Term) -> Term {
        Term::Add(Box::new(self), Box::new(other))
    }

    pub fn sub(self, other: Term) -> Term {
        Term::Sub(Box::new(self), Box::new(other))
    }

    pub fn scaled(c: Rational, t: Term) -> Term {
        Term::Mul(c, Box::new(t))
    }
}

/// Comparison relation of an arithmetic atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
}

/// Quantifier-free formula over rational and Boolean variables.
///
/// `And`/`Or` are n-ary and flattened by the `and`/`or` constructors so that
/// printing and hashing are stable. `Eq` on Bool-sorted operands is not
/// representable; Boolean equivalences are expressed with `And`/`Or`/`Not`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    BoolVar(Var),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Cmp(RelOp, Term, Term),
}

impl Formula {
    /// N-ary conjunction, flattened; `True` units dropped, `False` absorbs.
    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// N-ary disjunction, flattened; `False` units dropped, `True` absorbs.
    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn not(self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(f) => *f,
            f => Formula::Not(Box::new(f)),
        }
    }

    pub fn implies(self, other: Formula) -> Formula {
        Formula::or([self.not(), other])
    }

    pub fn lt(a: Term, b: Term) -> Formula {
        Formula::Cmp(RelOp::Lt, a, b)
    }

    pub fn le(a: Term, b: Term) -> Formula {
        Formula::Cmp(RelOp::Le, a, b)
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Cmp(RelOp::Eq, a, b)
    }

    pub fn bool_var(name: impl Into<String>) -> Formula {
        Formula::BoolVar(Var::plain(name))
    }
}

/// A value of the mixed domain `ℚ ∪ 𝔹`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Rat(Rational),
    Bool(bool),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Rat(rat(n))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Value::Rat(_) => Sort::Rat,
            Value::Bool(_) => Sort::Bool,
        }
    }
}

/// A total map from in-scope variables to exact values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Valuation(pub BTreeMap<Var, Value>);

impl Valuation {
    pub fn new() -> Self {
        Valuation(BTreeMap::new())
    }

    pub fn set(&mut self, v: Var, value: Value) {
        self.0.insert(v, value);
    }

    pub fn get(&self, v: &Var) -> Result<&Value, EvalError> {
        self.0.get(v).ok_or_else(|| EvalError::Unbound(v.clone()))
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(Var, Value)> for Valuation {
    fn from_iter<T: IntoIterator<Item = (Var, Value)>>(iter: T) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(Var),
    #[error("variable {0} used at sort {1:?} but bound to {2:?}")]
    SortMismatch(Var, Sort, Sort),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("substitution maps {0} across sorts")]
    CrossSort(Var),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("variable {0} does not carry index {1}")]
    Mixed(Var, u32),
}

/// A simultaneous, sort-preserving substitution. Rational variables map to
/// terms, Boolean variables to formulas.
#[derive(Debug, Clone, Default)]
pub struct Subst {
    pub rat: BTreeMap<Var, Term>,
    pub bool_: BTreeMap<Var, Formula>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    pub fn rat_one(v: Var, t: Term) -> Self {
        let mut s = Subst::new();
        s.rat.insert(v, t);
        s
    }

    pub fn bool_one(v: Var, f: Formula) -> Self {
        let mut s = Subst::new();
        s.bool_.insert(v, f);
        s
    }

    pub fn is_empty(&self) -> bool {
        self.rat.is_empty() && self.bool_.is_empty()
    }
}

/// Apply a substitution to a term. A term variable bound on the Boolean side
/// is a sort error.
pub fn substitute_term(t: &Term, sigma: &Subst) -> Result<Term, TypeError> {
    Ok(match t {
        Term::Const(_) => t.clone(),
        Term::Var(v) => {
            if sigma.bool_.contains_key(v) {
                return Err(TypeError::CrossSort(v.clone()));
            }
            match sigma.rat.get(v) {
                Some(repl) => repl.clone(),
                None => t.clone(),
            }
        }
        Term::Add(a, b) => Term::Add(
            Box::new(substitute_term(a, sigma)?),
            Box::new(substitute_term(b, sigma)?),
        ),
        Term::Sub(a, b) => Term::Sub(
            Box::new(substitute_term(a, sigma)?),
            Box::new(substitute_term(b, sigma)?),
        ),
        Term::Mul(c, t) => Term::Mul(c.clone(), Box::new(substitute_term(t, sigma)?)),
    })
}

/// Simultaneous substitution. Quantifier-free, so capture is impossible.
pub fn substitute(f: &Formula, sigma: &Subst) -> Result<Formula, TypeError> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::BoolVar(v) => {
            if sigma.rat.contains_key(v) {
                return Err(TypeError::CrossSort(v.clone()));
            }
            match sigma.bool_.get(v) {
                Some(repl) => repl.clone(),
                None => f.clone(),
            }
        }
        Formula::Not(g) => substitute(g, sigma)?.not(),
        Formula::And(gs) => Formula::and(
            gs.iter()
                .map(|g| substitute(g, sigma))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Formula::Or(gs) => Formula::or(
            gs.iter()
                .map(|g| substitute(g, sigma))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        Formula::Cmp(op, a, b) => {
            Formula::Cmp(*op, substitute_term(a, sigma)?, substitute_term(b, sigma)?)
        }
    })
}

/// Evaluate a term under a valuation.
pub fn evaluate_term(t: &Term, nu: &Valuation) -> Result<Rational, EvalError> {
    Ok(match t {
        Term::Const(c) => c.clone(),
        Term::Var(v) => match nu.get(v)? {
            Value::Rat(r) => r.clone(),
            Value::Bool(_) => return Err(EvalError::SortMismatch(v.clone(), Sort::Rat, Sort::Bool)),
        },
        Term::Add(a, b) => evaluate_term(a, nu)? + evaluate_term(b, nu)?,
        Term::Sub(a, b) => evaluate_term(a, nu)? - evaluate_term(b, nu)?,
        Term::Mul(c, t) => c * evaluate_term(t, nu)?,
    })
}

/// Evaluate a formula under a valuation: `ν ⊨ φ`.
pub fn evaluate(f: &Formula, nu: &Valuation) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::BoolVar(v) => match nu.get(v)? {
            Value::Bool(b) => *b,
            Value::Rat(_) => return Err(EvalError::SortMismatch(v.clone(), Sort::Bool, Sort::Rat)),
        },
        Formula::Not(g) => !evaluate(g, nu)?,
        Formula::And(gs) => {
            let mut acc = true;
            for g in gs {
                // evaluate all conjuncts so unbound variables surface
                acc &= evaluate(g, nu)?;
            }
            acc
        }
        Formula::Or(gs) => {
            let mut acc = false;
            for g in gs {
                acc |= evaluate(g, nu)?;
            }
            acc
        }
        Formula::Cmp(op, a, b) => {
            let x = evaluate_term(a, nu)?;
            let y = evaluate_term(b, nu)?;
            match op {
                RelOp::Lt => x < y,
                RelOp::Le => x <= y,
                RelOp::Eq => x == y,
            }
        }
    })
}

/// `Γ(ν)`: the conjunction pinning every variable of `ν` to its value.
/// Boolean variables contribute a literal or negated literal.
pub fn gamma_of_valuation(nu: &Valuation) -> Formula {
    Formula::and(nu.0.iter().map(|(v, value)| match value {
        Value::Rat(r) => Formula::eq(Term::Var(v.clone()), Term::Const(r.clone())),
        Value::Bool(true) => Formula::BoolVar(v.clone()),
        Value::Bool(false) => Formula::BoolVar(v.clone()).not(),
    }))
}

fn map_term_vars(t: &Term, f: &impl Fn(&Var) -> Var) -> Term {
    match t {
        Term::Const(_) => t.clone(),
        Term::Var(v) => Term::Var(f(v)),
        Term::Add(a, b) => Term::Add(Box::new(map_term_vars(a, f)), Box::new(map_term_vars(b, f))),
        Term::Sub(a, b) => Term::Sub(Box::new(map_term_vars(a, f)), Box::new(map_term_vars(b, f))),
        Term::Mul(c, t) => Term::Mul(c.clone(), Box::new(map_term_vars(t, f))),
    }
}

fn map_formula_vars(phi: &Formula, f: &impl Fn(&Var) -> Var) -> Formula {
    match phi {
        Formula::True | Formula::False => phi.clone(),
        Formula::BoolVar(v) => Formula::BoolVar(f(v)),
        Formula::Not(g) => Formula::Not(Box::new(map_formula_vars(g, f))),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| map_formula_vars(g, f)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| map_formula_vars(g, f)).collect()),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, map_term_vars(a, f), map_term_vars(b, f)),
    }
}

/// `φ⟨k⟩` for `φ` over plain variables: every unindexed variable receives
/// index `k`. Already-indexed variables are left alone.
pub fn superscript(phi: &Formula, k: u32) -> Formula {
    map_formula_vars(phi, &|v| {
        if v.index.is_none() {
            v.with_index(k)
        } else {
            v.clone()
        }
    })
}

pub fn superscript_term(t: &Term, k: u32) -> Term {
    map_term_vars(t, &|v| {
        if v.index.is_none() {
            v.with_index(k)
        } else {
            v.clone()
        }
    })
}

/// Shift all variable indices by `k`: `x⟨i⟩ ↦ x⟨i+k⟩`. Unindexed variables
/// (fresh constants) are untouched. This realizes `θ⟨k⟩` for transition
/// formulas over `X⟨0⟩ ∪ X⟨1⟩`.
pub fn shift_indices(phi: &Formula, k: u32) -> Formula {
    map_formula_vars(phi, &|v| match v.index {
        Some(i) => Var { name: v.name.clone(), index: Some(i + k) },
        None => v.clone(),
    })
}

/// Strip index `k` from every variable: `λ[X⟨k⟩ ↦ X]`. Errors if the formula
/// mentions a variable whose index is not `k`.
pub fn desuperscript(phi: &Formula, k: u32) -> Result<Formula, IndexError> {
    for v in free_vars(phi) {
        if v.index != Some(k) {
            return Err(IndexError::Mixed(v, k));
        }
    }
    Ok(map_formula_vars(phi, &|v| v.without_index()))
}

pub fn term_vars_into(t: &Term, out: &mut BTreeSet<Var>) {
    match t {
        Term::Const(_) => {}
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            term_vars_into(a, out);
            term_vars_into(b, out);
        }
        Term::Mul(_, t) => term_vars_into(t, out),
    }
}

fn free_vars_into(phi: &Formula, out: &mut BTreeSet<Var>) {
    match phi {
        Formula::True | Formula::False => {}
        Formula::BoolVar(v) => {
            out.insert(v.clone());
        }
        Formula::Not(g) => free_vars_into(g, out),
        Formula::And(gs) | Formula::Or(gs) => {
            for g in gs {
                free_vars_into(g, out);
            }
        }
        Formula::Cmp(_, a, b) => {
            term_vars_into(a, out);
            term_vars_into(b, out);
        }
    }
}

/// The non-logical symbols (variables) occurring in a formula.
pub fn free_vars(phi: &Formula) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    free_vars_into(phi, &mut out);
    out
}

/// Linear-form view of a term: coefficient map plus constant.
pub fn linear_form(t: &Term) -> (BTreeMap<Var, Rational>, Rational) {
    fn go(t: &Term, scale: &Rational, coeffs: &mut BTreeMap<Var, Rational>, consta: &mut Rational) {
        match t {
            Term::Const(c) => *consta += scale * c,
            Term::Var(v) => {
                let entry = coeffs.entry(v.clone()).or_insert_with(Rational::zero);
                *entry += scale;
            }
            Term::Add(a, b) => {
                go(a, scale, coeffs, consta);
                go(b, scale, coeffs, consta);
            }
            Term::Sub(a, b) => {
                go(a, scale, coeffs, consta);
                let neg = -scale.clone();
                go(b, &neg, coeffs, consta);
            }
            Term::Mul(c, t) => {
                let scaled = scale * c;
                go(t, &scaled, coeffs, consta);
            }
        }
    }
    let mut coeffs = BTreeMap::new();
    let mut consta = Rational::zero();
    go(t, &Rational::from_integer(BigInt::from(1)), &mut coeffs, &mut consta);
    coeffs.retain(|_, c| !c.is_zero());
    (coeffs, consta)
}
