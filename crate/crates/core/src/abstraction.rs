//! Predicate abstraction: the four maps relating quantifier-free formulae
//! over a predicate set `P` with Boolean formulae over the indicator
//! variables `B_P`, plus concrete/abstract valuation transport.
//!
//! `alpha` enumerates all canonical monomials with a solver check each and
//! is used by property tests and diagnostics only; the inference procedures
//! never call it.

use crate::logic::{evaluate, Atom, EvalError, Formula, Valuation};
use crate::solver::{Solver, SolverError};
use thiserror::Error;

/// Ordered set of distinct normalized atoms. The position of an atom is the
/// identity of its Boolean indicator variable, so insertion order is fixed
/// for a whole run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredicateSet {
    atoms: Vec<Atom>,
}

impl PredicateSet {
    pub fn new() -> Self {
        PredicateSet::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut p = PredicateSet::new();
        for a in atoms {
            p.insert(a);
        }
        p
    }

    /// Append-only insert; duplicates (after normalization) are ignored.
    /// Returns true if the atom was new.
    pub fn insert(&mut self, atom: Atom) -> bool {
        if self.atoms.contains(&atom) {
            return false;
        }
        self.atoms.push(atom);
        true
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }
}

impl std::fmt::Display for PredicateSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

/// Total abstract valuation `μ: B_P → 𝔹`, as a bit vector in `P` order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractVal(pub Vec<bool>);

impl AbstractVal {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    /// Serialization used in stats and traces: one character per predicate.
    pub fn bits(&self) -> String {
        self.0.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }

    pub fn from_index(n: usize, index: usize) -> AbstractVal {
        AbstractVal((0..n).map(|i| (index >> i) & 1 == 1).collect())
    }
}

impl std::fmt::Display for AbstractVal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.bits())
    }
}

/// Boolean formula over the indicator variables of the current `P`,
/// identified by predicate index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoolFormula {
    True,
    False,
    Var(usize),
    Not(Box<BoolFormula>),
    And(Vec<BoolFormula>),
    Or(Vec<BoolFormula>),
}

impl BoolFormula {
    pub fn and(items: impl IntoIterator<Item = BoolFormula>) -> BoolFormula {
        let mut out = Vec::new();
        for f in items {
            match f {
                BoolFormula::True => {}
                BoolFormula::False => return BoolFormula::False,
                BoolFormula::And(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => BoolFormula::True,
            1 => out.pop().unwrap(),
            _ => BoolFormula::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = BoolFormula>) -> BoolFormula {
        let mut out = Vec::new();
        for f in items {
            match f {
                BoolFormula::False => {}
                BoolFormula::True => return BoolFormula::True,
                BoolFormula::Or(gs) => out.extend(gs),
                g => out.push(g),
            }
        }
        match out.len() {
            0 => BoolFormula::False,
            1 => out.pop().unwrap(),
            _ => BoolFormula::Or(out),
        }
    }

    pub fn not(self) -> BoolFormula {
        match self {
            BoolFormula::True => BoolFormula::False,
            BoolFormula::False => BoolFormula::True,
            BoolFormula::Not(f) => *f,
            f => BoolFormula::Not(Box::new(f)),
        }
    }

    pub fn eval(&self, mu: &AbstractVal) -> bool {
        match self {
            BoolFormula::True => true,
            BoolFormula::False => false,
            BoolFormula::Var(i) => mu.get(*i),
            BoolFormula::Not(f) => !f.eval(mu),
            BoolFormula::And(fs) => fs.iter().all(|f| f.eval(mu)),
            BoolFormula::Or(fs) => fs.iter().any(|f| f.eval(mu)),
        }
    }

    /// Boolean-level equivalence by truth-table enumeration over `n`
    /// variables (test oracle; `n` is small).
    pub fn equivalent(&self, other: &BoolFormula, n: usize) -> bool {
        (0..(1usize << n)).all(|ix| {
            let mu = AbstractVal::from_index(n, ix);
            self.eval(&mu) == other.eval(&mu)
        })
    }
}

impl std::fmt::Display for BoolFormula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoolFormula::True => write!(f, "true"),
            BoolFormula::False => write!(f, "false"),
            BoolFormula::Var(i) => write!(f, "b{i}"),
            BoolFormula::Not(g) => write!(f, "!{g}"),
            BoolFormula::And(gs) => {
                write!(f, "(")?;
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
            BoolFormula::Or(gs) => {
                write!(f, "(")?;
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "{g}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum AbstractionError {
    #[error("alpha guard: {0} predicates exceed the enumeration limit")]
    PredicateLimitExceeded(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// `γ(β) = β[B_P ↦ P]`.
pub fn gamma(beta: &BoolFormula, p: &PredicateSet) -> Formula {
    match beta {
        BoolFormula::True => Formula::True,
        BoolFormula::False => Formula::False,
        BoolFormula::Var(i) => p.atom(*i).to_formula(),
        BoolFormula::Not(g) => gamma(g, p).not(),
        BoolFormula::And(gs) => Formula::and(gs.iter().map(|g| gamma(g, p))),
        BoolFormula::Or(gs) => Formula::or(gs.iter().map(|g| gamma(g, p))),
    }
}

/// `γ*(μ)`: the minterm pinning every predicate to its abstract value.
pub fn gamma_star(mu: &AbstractVal, p: &PredicateSet) -> Formula {
    assert_eq!(mu.len(), p.len(), "abstract valuation not total on P");
    Formula::and(p.atoms().iter().enumerate().map(|(i, a)| {
        let f = a.to_formula();
        if mu.get(i) {
            f
        } else {
            f.not()
        }
    }))
}

/// `α*(ν)`: pointwise atom evaluation.
pub fn alpha_star(nu: &Valuation, p: &PredicateSet) -> Result<AbstractVal, EvalError> {
    let mut bits = Vec::with_capacity(p.len());
    for a in p.atoms() {
        bits.push(evaluate(&a.to_formula(), nu)?);
    }
    Ok(AbstractVal(bits))
}

/// The canonical monomial of `μ` as a Boolean formula.
pub fn minterm(mu: &AbstractVal) -> BoolFormula {
    BoolFormula::and(mu.0.iter().enumerate().map(|(i, b)| {
        let v = BoolFormula::Var(i);
        if *b {
            v
        } else {
            v.not()
        }
    }))
}

/// `α(θ)`: the disjunction of all canonical monomials `β` with
/// `θ ∧ γ(β)` satisfiable. Exponential in `|P|`; guarded and test-only.
pub fn alpha(
    theta: &Formula,
    p: &PredicateSet,
    solver: &mut Solver,
) -> Result<BoolFormula, AbstractionError> {
    if p.len() > 16 {
        return Err(AbstractionError::PredicateLimitExceeded(p.len()));
    }
    let mut monomials = Vec::new();
    for ix in 0..(1usize << p.len()) {
        let mu = AbstractVal::from_index(p.len(), ix);
        let candidate = Formula::and([theta.clone(), gamma_star(&mu, p)]);
        if solver.is_sat(&candidate)? {
            monomials.push(minterm(&mu));
        }
    }
    Ok(BoolFormula::or(monomials))
}
