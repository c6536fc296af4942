//! Feasibility of conjunctions of linear constraints over the rationals.
//!
//! General simplex with per-variable bounds (Dutertre/de Moura style),
//! exact `BigRational` arithmetic and Bland's rule for termination. Strict
//! inequalities are handled with δ-rationals `a + b·ε` for an infinitesimal
//! `ε > 0`. Infeasibility produces a Farkas certificate: nonnegative
//! multipliers over the input constraints whose weighted sum is a false
//! constant constraint. The A-side restriction of such a certificate is what
//! the interpolation module turns into interpolants.

use crate::logic::{Rational, Var};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::time::Instant;

use super::SolverError;

/// `real + delta·ε`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DeltaRat {
    pub real: Rational,
    pub delta: Rational,
}

impl DeltaRat {
    pub fn from_rational(r: Rational) -> Self {
        DeltaRat { real: r, delta: Rational::zero() }
    }

    pub fn zero() -> Self {
        DeltaRat { real: Rational::zero(), delta: Rational::zero() }
    }

    pub fn one() -> Self {
        DeltaRat { real: Rational::one(), delta: Rational::zero() }
    }

    fn add(&self, other: &DeltaRat) -> DeltaRat {
        DeltaRat { real: &self.real + &other.real, delta: &self.delta + &other.delta }
    }

    fn sub(&self, other: &DeltaRat) -> DeltaRat {
        DeltaRat { real: &self.real - &other.real, delta: &self.delta - &other.delta }
    }

    fn scale(&self, k: &Rational) -> DeltaRat {
        DeltaRat { real: &self.real * k, delta: &self.delta * k }
    }
}

/// How a constraint bounds its linear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryRel {
    Le,
    Lt,
    Eq,
}

/// `Σ coeffs[v]·v  rel  bound`.
#[derive(Debug, Clone)]
pub struct TheoryConstraint {
    pub coeffs: BTreeMap<Var, Rational>,
    pub rel: TheoryRel,
    pub bound: Rational,
}

/// Orientation of a constraint inside a certificate: `Upper` is the natural
/// `form ≤ bound` reading (the only one for `Le`/`Lt`), `Lower` is the
/// `form ≥ bound` direction of an equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CertSide {
    Upper,
    Lower,
}

/// Nonnegative multipliers over oriented input constraints. The weighted sum
/// of the oriented forms `form − bound ≤ 0` (resp. `bound − form ≤ 0`) is a
/// positive constant, or zero with a strict constraint at positive weight.
#[derive(Debug, Clone, Default)]
pub struct FarkasCert {
    pub entries: BTreeMap<(usize, CertSide), Rational>,
}

impl FarkasCert {
    fn push(&mut self, cons: usize, side: CertSide, mult: Rational) {
        if mult.is_zero() {
            return;
        }
        let e = self.entries.entry((cons, side)).or_insert_with(Rational::zero);
        *e += mult;
    }
}

#[derive(Debug, Clone)]
pub enum TheoryOutcome {
    Sat(BTreeMap<Var, Rational>),
    Unsat(FarkasCert),
}

#[derive(Debug, Clone)]
struct Bound {
    value: DeltaRat,
    /// (constraint index, orientation, multiplier scale). Using this bound
    /// with weight `m` uses the original constraint with weight `m·scale`.
    cons: usize,
    side: CertSide,
    scale: Rational,
}

struct Tableau {
    /// rows[b] = linear expression of basic variable `b` over nonbasic ids.
    rows: BTreeMap<usize, BTreeMap<usize, Rational>>,
    beta: Vec<DeltaRat>,
    lower: Vec<Option<Bound>>,
    upper: Vec<Option<Bound>>,
    is_basic: Vec<bool>,
}

impl Tableau {
    fn new(n: usize) -> Self {
        Tableau {
            rows: BTreeMap::new(),
            beta: vec![DeltaRat::one(); n],
            lower: vec![None; n],
            upper: vec![None; n],
            is_basic: vec![false; n],
        }
    }

    fn value_ok(&self, x: usize) -> bool {
        if let Some(l) = &self.lower[x] {
            if self.beta[x] < l.value {
                return false;
            }
        }
        if let Some(u) = &self.upper[x] {
            if self.beta[x] > u.value {
                return false;
            }
        }
        true
    }

    /// Set a nonbasic variable to `v`, updating dependent basic values.
    fn update(&mut self, x: usize, v: DeltaRat) {
        let theta = v.sub(&self.beta[x]);
        for (b, row) in &self.rows {
            if let Some(a) = row.get(&x) {
                self.beta[*b] = self.beta[*b].add(&theta.scale(a));
            }
        }
        self.beta[x] = v;
    }

    /// Pivot basic `xi` with nonbasic `xj` and set `xi` to `v`.
    fn pivot_and_update(&mut self, xi: usize, v: DeltaRat, xj: usize) {
        let row_i = self.rows.get(&xi).expect("xi is basic").clone();
        let aij = row_i.get(&xj).expect("xj in row of xi").clone();
        let theta = v.sub(&self.beta[xi]).scale(&(Rational::one() / &aij));
        self.beta[xi] = v;
        self.beta[xj] = self.beta[xj].add(&theta);
        let rows: Vec<usize> = self.rows.keys().copied().collect();
        for b in &rows {
            if *b == xi {
                continue;
            }
            if let Some(a) = self.rows[b].get(&xj) {
                let a = a.clone();
                self.beta[*b] = self.beta[*b].add(&theta.scale(&a));
            }
        }
        // Row for xj: xj = (xi − Σ_{k≠j} a_k·x_k) / a_ij
        let mut new_row: BTreeMap<usize, Rational> = BTreeMap::new();
        new_row.insert(xi, Rational::one() / &aij);
        for (k, a) in &row_i {
            if *k == xj {
                continue;
            }
            new_row.insert(*k, -(a / &aij));
        }
        self.rows.remove(&xi);
        self.is_basic[xi] = false;
        self.is_basic[xj] = true;
        // Substitute xj in all other rows.
        for b in rows {
            if b == xi {
                continue;
            }
            let row = self.rows.get_mut(&b).unwrap();
            if let Some(a) = row.remove(&xj) {
                for (k, c) in &new_row {
                    let e = row.entry(*k).or_insert_with(Rational::zero);
                    *e += &a * c;
                    if e.is_zero() {
                        row.remove(k);
                    }
                }
            }
        }
        self.rows.insert(xj, new_row);
    }
}

/// Decide feasibility of `constraints`; on success produce a rational model
/// for every variable that occurs, on failure a Farkas certificate.
pub fn solve(
    constraints: &[TheoryConstraint],
    deadline: Option<Instant>,
) -> Result<TheoryOutcome, SolverError> {
    // Variable ids: program variables first (sorted), then one slack per
    // multi-variable constraint.
    let mut var_ids: BTreeMap<Var, usize> = BTreeMap::new();
    for c in constraints {
        for v in c.coeffs.keys() {
            let next = var_ids.len();
            var_ids.entry(v.clone()).or_insert(next);
        }
    }
    // Re-number in sorted order for determinism.
    let mut sorted: Vec<Var> = var_ids.keys().cloned().collect();
    sorted.sort();
    let var_ids: BTreeMap<Var, usize> =
        sorted.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
    let nprog = var_ids.len();
    let nslack = constraints
        .iter()
        .filter(|c| c.coeffs.iter().filter(|(_, a)| !a.is_zero()).count() > 1)
        .count();
    let mut t = Tableau::new(nprog + nslack);

    // Pending bound assertions: (var id, is_lower, value, tag fields).
    struct Assert {
        x: usize,
        is_lower: bool,
        value: DeltaRat,
        cons: usize,
        side: CertSide,
        scale: Rational,
    }
    let mut asserts: Vec<Assert> = Vec::new();
    let mut next_slack = nprog;

    for (ci, c) in constraints.iter().enumerate() {
        let coeffs: Vec<(&Var, &Rational)> =
            c.coeffs.iter().filter(|(_, a)| !a.is_zero()).collect();
        let strict_delta = if c.rel == TheoryRel::Lt {
            -Rational::one()
        } else {
            Rational::zero()
        };
        match coeffs.len() {
            0 => {
                // Ground: 0 rel bound.
                let holds = match c.rel {
                    TheoryRel::Le => !c.bound.is_negative(),
                    TheoryRel::Lt => c.bound.is_positive(),
                    TheoryRel::Eq => c.bound.is_zero(),
                };
                if !holds {
                    let mut cert = FarkasCert::default();
                    // Falsity may sit on either side of an equality.
                    let side = if c.rel == TheoryRel::Eq && c.bound.is_negative() {
                        CertSide::Lower
                    } else {
                        CertSide::Upper
                    };
                    cert.push(ci, side, Rational::one());
                    return Ok(TheoryOutcome::Unsat(cert));
                }
            }
            1 => {
                let (v, a) = coeffs[0];
                let x = var_ids[v];
                let b = DeltaRat { real: &c.bound / a, delta: &strict_delta / a };
                let scale = (Rational::one() / a).abs();
                if a.is_positive() {
                    // form ≤/=/< bound  ⇒  x ⋈ bound/a in the same direction
                    if c.rel == TheoryRel::Eq {
                        asserts.push(Assert { x, is_lower: false, value: b.clone(), cons: ci, side: CertSide::Upper, scale: scale.clone() });
                        asserts.push(Assert { x, is_lower: true, value: b, cons: ci, side: CertSide::Lower, scale });
                    } else {
                        asserts.push(Assert { x, is_lower: false, value: b, cons: ci, side: CertSide::Upper, scale });
                    }
                } else {
                    // Negative coefficient mirrors the direction.
                    if c.rel == TheoryRel::Eq {
                        asserts.push(Assert { x, is_lower: true, value: b.clone(), cons: ci, side: CertSide::Upper, scale: scale.clone() });
                        asserts.push(Assert { x, is_lower: false, value: b, cons: ci, side: CertSide::Lower, scale });
                    } else {
                        asserts.push(Assert { x, is_lower: true, value: b, cons: ci, side: CertSide::Upper, scale });
                    }
                }
            }
            _ => {
                let s = next_slack;
                next_slack += 1;
                let row: BTreeMap<usize, Rational> = coeffs
                    .iter()
                    .map(|(v, a)| (var_ids[*v], (*a).clone()))
                    .collect();
                // β(slack) = row value at current β.
                let mut val = DeltaRat::zero();
                for (x, a) in &row {
                    val = val.add(&t.beta[*x].scale(a));
                }
                t.beta[s] = val;
                t.rows.insert(s, row);
                t.is_basic[s] = true;
                let b = DeltaRat { real: c.bound.clone(), delta: strict_delta };
                if c.rel == TheoryRel::Eq {
                    asserts.push(Assert { x: s, is_lower: false, value: b.clone(), cons: ci, side: CertSide::Upper, scale: Rational::one() });
                    asserts.push(Assert { x: s, is_lower: true, value: b, cons: ci, side: CertSide::Lower, scale: Rational::one() });
                } else {
                    asserts.push(Assert { x: s, is_lower: false, value: b, cons: ci, side: CertSide::Upper, scale: Rational::one() });
                }
            }
        }
    }

    // Apply bound assertions, tightening and detecting direct conflicts.
    for a in asserts {
        let bound = Bound { value: a.value.clone(), cons: a.cons, side: a.side, scale: a.scale };
        let slot = if a.is_lower { &mut t.lower[a.x] } else { &mut t.upper[a.x] };
        let tighter = match slot {
            None => true,
            Some(old) => {
                if a.is_lower {
                    bound.value > old.value
                } else {
                    bound.value < old.value
                }
            }
        };
        if tighter {
            *slot = Some(bound);
        }
        // Direct lower/upper conflict.
        if let (Some(l), Some(u)) = (&t.lower[a.x], &t.upper[a.x]) {
            if l.value > u.value {
                let mut cert = FarkasCert::default();
                cert.push(l.cons, l.side, l.scale.clone());
                cert.push(u.cons, u.side, u.scale.clone());
                return Ok(TheoryOutcome::Unsat(cert));
            }
        }
        // Move nonbasic variables inside their bounds immediately.
        if !t.is_basic[a.x] && !t.value_ok(a.x) {
            t.update(a.x, a.value);
        }
    }

    // Main check loop (Bland's rule: always the smallest id).
    let mut iterations: u64 = 0;
    loop {
        iterations += 1;
        if iterations % 64 == 0 {
            if let Some(d) = deadline {
                if Instant::now() > d {
                    return Err(SolverError::Timeout);
                }
            }
        }
        // Smallest basic variable violating a bound.
        let violating = t
            .rows
            .keys()
            .copied()
            .find(|b| !t.value_ok(*b));
        let xi = match violating {
            None => break,
            Some(b) => b,
        };
        let row = t.rows[&xi].clone();
        let below = t.lower[xi]
            .as_ref()
            .map(|l| t.beta[xi] < l.value)
            .unwrap_or(false);
        if below {
            let target = t.lower[xi].as_ref().unwrap().value.clone();
            // Increase xi: need a nonbasic with slack in the right direction.
            let pivot = row.iter().find(|(j, a)| {
                let j = **j;
                if a.is_positive() {
                    t.upper[j].as_ref().map(|u| t.beta[j] < u.value).unwrap_or(true)
                } else {
                    t.lower[j].as_ref().map(|l| t.beta[j] > l.value).unwrap_or(true)
                }
            });
            match pivot {
                Some((j, _)) => {
                    let j = *j;
                    t.pivot_and_update(xi, target, j);
                }
                None => {
                    // Every nonbasic is stuck at its blocking bound.
                    let mut cert = FarkasCert::default();
                    let li = t.lower[xi].as_ref().unwrap();
                    cert.push(li.cons, li.side, li.scale.clone());
                    for (j, a) in &row {
                        if a.is_positive() {
                            let u = t.upper[*j].as_ref().expect("blocked at upper");
                            cert.push(u.cons, u.side, a * &u.scale);
                        } else {
                            let l = t.lower[*j].as_ref().expect("blocked at lower");
                            cert.push(l.cons, l.side, -a * &l.scale);
                        }
                    }
                    return Ok(TheoryOutcome::Unsat(cert));
                }
            }
        } else {
            let target = t.upper[xi].as_ref().unwrap().value.clone();
            // Decrease xi.
            let pivot = row.iter().find(|(j, a)| {
                let j = **j;
                if a.is_negative() {
                    t.upper[j].as_ref().map(|u| t.beta[j] < u.value).unwrap_or(true)
                } else {
                    t.lower[j].as_ref().map(|l| t.beta[j] > l.value).unwrap_or(true)
                }
            });
            match pivot {
                Some((j, _)) => {
                    let j = *j;
                    t.pivot_and_update(xi, target, j);
                }
                None => {
                    let mut cert = FarkasCert::default();
                    let ui = t.upper[xi].as_ref().unwrap();
                    cert.push(ui.cons, ui.side, ui.scale.clone());
                    for (j, a) in &row {
                        if a.is_negative() {
                            let u = t.upper[*j].as_ref().expect("blocked at upper");
                            cert.push(u.cons, u.side, -a * &u.scale);
                        } else {
                            let l = t.lower[*j].as_ref().expect("blocked at lower");
                            cert.push(l.cons, l.side, a * &l.scale);
                        }
                    }
                    return Ok(TheoryOutcome::Unsat(cert));
                }
            }
        }
    }

    // Feasible: concretize ε. Pick ε small enough for every bound check.
    let mut eps = Rational::one();
    let mut shrink = |val: &DeltaRat, bound: &DeltaRat, is_lower: bool| {
        // Need val ≥ bound (lower) or val ≤ bound (upper) after substitution.
        let (a, b) = if is_lower {
            (&val.real - &bound.real, &val.delta - &bound.delta)
        } else {
            (&bound.real - &val.real, &bound.delta - &val.delta)
        };
        // Constraint: a + b·ε ≥ 0 for the chosen ε.
        if a.is_positive() && b.is_negative() {
            let limit = &a / &(-b);
            if limit < eps {
                eps = limit;
            }
        }
    };
    for x in 0..t.beta.len() {
        if let Some(l) = &t.lower[x] {
            shrink(&t.beta[x], &l.value, true);
        }
        if let Some(u) = &t.upper[x] {
            shrink(&t.beta[x], &u.value, false);
        }
    }
    let eps = eps / (Rational::one() + Rational::one());
    let model = sorted
        .into_iter()
        .map(|v| {
            let x = var_ids[&v];
            let val = &t.beta[x].real + &t.beta[x].delta * &eps;
            (v, val)
        })
        .collect();
    Ok(TheoryOutcome::Sat(model))
}

/// Feasibility without certificates: equalities are eliminated by Gaussian
/// substitution first (transition formulas consist mostly of frame
/// equalities), then the reduced system runs through the simplex. The model
/// is reconstructed through the substitution stack.
pub fn solve_feasible(
    constraints: &[TheoryConstraint],
    deadline: Option<Instant>,
) -> Result<Option<BTreeMap<Var, Rational>>, SolverError> {
    let mut cons: Vec<TheoryConstraint> = constraints.to_vec();
    // Substitution stack: v = (bound − Σ coeffs·w) / divisor.
    struct Sub {
        var: Var,
        coeffs: BTreeMap<Var, Rational>,
        bound: Rational,
        divisor: Rational,
    }
    let mut subs: Vec<Sub> = Vec::new();
    let mut all_vars: BTreeMap<Var, ()> = BTreeMap::new();
    for c in &cons {
        for v in c.coeffs.keys() {
            all_vars.insert(v.clone(), ());
        }
    }
    loop {
        // First equality with at least one variable.
        let idx = cons.iter().position(|c| {
            c.rel == TheoryRel::Eq && c.coeffs.values().any(|a| !a.is_zero())
        });
        let idx = match idx {
            None => break,
            Some(i) => i,
        };
        let eq = cons.swap_remove(idx);
        let (var, divisor) = {
            let (v, a) = eq
                .coeffs
                .iter()
                .find(|(_, a)| !a.is_zero())
                .expect("checked nonzero");
            (v.clone(), a.clone())
        };
        let mut rest: BTreeMap<Var, Rational> = eq.coeffs.clone();
        rest.remove(&var);
        // Substitute var into the remaining constraints.
        for c in cons.iter_mut() {
            let a = match c.coeffs.remove(&var) {
                None => continue,
                Some(a) => a,
            };
            let scale = &a / &divisor;
            c.bound -= &scale * &eq.bound;
            for (w, b) in &rest {
                let e = c.coeffs.entry(w.clone()).or_insert_with(Rational::zero);
                *e -= &scale * b;
                if e.is_zero() {
                    let w = w.clone();
                    c.coeffs.remove(&w);
                }
            }
        }
        subs.push(Sub { var, coeffs: rest, bound: eq.bound, divisor });
        // Ground infeasibility introduced by substitution?
        for c in &cons {
            if c.coeffs.values().all(|a| a.is_zero()) {
                let holds = match c.rel {
                    TheoryRel::Le => !c.bound.is_negative(),
                    TheoryRel::Lt => c.bound.is_positive(),
                    TheoryRel::Eq => c.bound.is_zero(),
                };
                if !holds {
                    return Ok(None);
                }
            }
        }
        cons.retain(|c| c.coeffs.values().any(|a| !a.is_zero()));
    }
    let mut model = match solve(&cons, deadline)? {
        TheoryOutcome::Unsat(_) => return Ok(None),
        TheoryOutcome::Sat(m) => m,
    };
    // Unconstrained variables referenced by substitutions default to the
    // simplex seed value.
    for sub in subs.iter().rev() {
        let mut val = sub.bound.clone();
        for (w, b) in &sub.coeffs {
            let wv = model.entry(w.clone()).or_insert_with(Rational::one);
            val -= b * &*wv;
        }
        model.insert(sub.var.clone(), val / &sub.divisor);
    }
    for v in all_vars.keys() {
        model.entry(v.clone()).or_insert_with(Rational::one);
    }
    Ok(Some(model))
}

/// Check a certificate against the constraints it refutes: the weighted,
/// oriented sum must be a variable-free, false constraint. Used by tests and
/// debug assertions.
pub fn verify_cert(constraints: &[TheoryConstraint], cert: &FarkasCert) -> bool {
    let mut poly: BTreeMap<Var, Rational> = BTreeMap::new();
    let mut constant = Rational::zero();
    let mut has_strict = false;
    if cert.entries.is_empty() {
        return false;
    }
    for ((ci, side), mult) in &cert.entries {
        if mult.is_negative() {
            return false;
        }
        let c = match constraints.get(*ci) {
            Some(c) => c,
            None => return false,
        };
        if *side == CertSide::Lower && c.rel != TheoryRel::Eq {
            return false;
        }
        if c.rel == TheoryRel::Lt && mult.is_positive() {
            has_strict = true;
        }
        let dir = match side {
            CertSide::Upper => Rational::one(),
            CertSide::Lower => -Rational::one(),
        };
        // Oriented form: dir·(form − bound) ≤ 0.
        for (v, a) in &c.coeffs {
            let e = poly.entry(v.clone()).or_insert_with(Rational::zero);
            *e += mult * &dir * a;
        }
        constant += mult * &dir * &(-c.bound.clone());
    }
    if poly.values().any(|a| !a.is_zero()) {
        return false;
    }
    constant.is_positive() || (constant.is_zero() && has_strict)
}
