//! Shared brute-force oracles and generators for the integration suites.
//!
//! The reference interpreter and the grid enumerations here deliberately
//! avoid the solver/transition machinery they are used to check.

#![allow(dead_code)]

use loopinv::frontend::Statement;
use loopinv::logic::{
    evaluate, evaluate_term, rat, Formula, RelOp, Sort, Term, Valuation, Value, Var,
};
use rand::rngs::StdRng;
use rand::Rng;

/// All valuations assigning each variable a value from `grid`.
pub fn grid_valuations(vars: &[(String, Sort)], grid: &[i64]) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for (name, sort) in vars {
        let mut next = Vec::new();
        for nu in &out {
            match sort {
                Sort::Rat => {
                    for v in grid {
                        let mut m = nu.clone();
                        m.set(Var::plain(name.clone()), Value::int(*v));
                        next.push(m);
                    }
                }
                Sort::Bool => {
                    for b in [false, true] {
                        let mut m = nu.clone();
                        m.set(Var::plain(name.clone()), Value::Bool(b));
                        next.push(m);
                    }
                }
            }
        }
        out = next;
    }
    out
}

/// Reference step semantics: every post-state of one statement, with
/// nondeterministic choices drawn from `grid` (plus both Booleans for
/// Boolean havocs). An `assume` with a false condition has no successor.
pub fn exec_stmt(s: &Statement, nu: &Valuation, grid: &[i64], sorts: &[(String, Sort)]) -> Vec<Valuation> {
    match s {
        Statement::Nop => vec![nu.clone()],
        Statement::AssignRat(v, e) => {
            let val = evaluate_term(e, nu).expect("closed term");
            let mut m = nu.clone();
            m.set(v.clone(), Value::Rat(val));
            vec![m]
        }
        Statement::AssignBool(v, p) => {
            let val = evaluate(p, nu).expect("closed formula");
            let mut m = nu.clone();
            m.set(v.clone(), Value::Bool(val));
            vec![m]
        }
        Statement::Havoc(v) => {
            let sort = sorts
                .iter()
                .find(|(n, _)| *n == v.name)
                .map(|(_, s)| *s)
                .unwrap_or(Sort::Rat);
            match sort {
                Sort::Rat => grid
                    .iter()
                    .map(|d| {
                        let mut m = nu.clone();
                        m.set(v.clone(), Value::int(*d));
                        m
                    })
                    .collect(),
                Sort::Bool => [false, true]
                    .into_iter()
                    .map(|b| {
                        let mut m = nu.clone();
                        m.set(v.clone(), Value::Bool(b));
                        m
                    })
                    .collect(),
            }
        }
        Statement::If(p, then_b, else_b) => {
            if evaluate(p, nu).expect("closed condition") {
                exec_seq(then_b, nu, grid, sorts)
            } else {
                exec_seq(else_b, nu, grid, sorts)
            }
        }
        Statement::Assume(p) => {
            if evaluate(p, nu).expect("closed condition") {
                vec![nu.clone()]
            } else {
                vec![]
            }
        }
    }
}

/// Every post-state of a statement sequence.
pub fn exec_seq(
    stmts: &[Statement],
    nu: &Valuation,
    grid: &[i64],
    sorts: &[(String, Sort)],
) -> Vec<Valuation> {
    let mut states = vec![nu.clone()];
    for s in stmts {
        let mut next = Vec::new();
        for st in &states {
            next.extend(exec_stmt(s, st, grid, sorts));
        }
        states = next;
    }
    states
}

// ---------------------------------------------------------------------------
// Random generators (explicitly seeded; no global RNG state)
// ---------------------------------------------------------------------------

pub fn rat_vars(n: usize) -> Vec<(String, Sort)> {
    ["x", "y", "z"]
        .iter()
        .take(n)
        .map(|s| (s.to_string(), Sort::Rat))
        .collect()
}

pub fn random_term(rng: &mut StdRng, vars: &[(String, Sort)], depth: usize) -> Term {
    if depth == 0 || rng.random_range(0..3) == 0 {
        if rng.random_bool(0.5) {
            Term::int(rng.random_range(0..=2))
        } else {
            let i = rng.random_range(0..vars.len());
            Term::var(vars[i].0.clone())
        }
    } else {
        let a = random_term(rng, vars, depth - 1);
        let b = random_term(rng, vars, depth - 1);
        if rng.random_bool(0.5) {
            a.add(b)
        } else {
            a.sub(b)
        }
    }
}

pub fn random_atom_formula(rng: &mut StdRng, vars: &[(String, Sort)]) -> Formula {
    let a = random_term(rng, vars, 1);
    let b = random_term(rng, vars, 1);
    let op = match rng.random_range(0..3) {
        0 => RelOp::Lt,
        1 => RelOp::Le,
        _ => RelOp::Eq,
    };
    Formula::Cmp(op, a, b)
}

pub fn random_formula(rng: &mut StdRng, vars: &[(String, Sort)], depth: usize) -> Formula {
    if depth == 0 {
        return random_atom_formula(rng, vars);
    }
    match rng.random_range(0..4) {
        0 => random_formula(rng, vars, depth - 1).not(),
        1 => Formula::and([
            random_formula(rng, vars, depth - 1),
            random_formula(rng, vars, depth - 1),
        ]),
        2 => Formula::or([
            random_formula(rng, vars, depth - 1),
            random_formula(rng, vars, depth - 1),
        ]),
        _ => random_atom_formula(rng, vars),
    }
}

/// A random straight-line statement (ifs allowed as compound blocks).
pub fn random_stmt(rng: &mut StdRng, vars: &[(String, Sort)], allow_if: bool) -> Statement {
    let pick = rng.random_range(0..if allow_if { 5 } else { 4 });
    let var_of = |rng: &mut StdRng| {
        let i = rng.random_range(0..vars.len());
        Var::plain(vars[i].0.clone())
    };
    match pick {
        0 => Statement::Nop,
        1 => {
            let v = var_of(rng);
            let e = random_term(rng, vars, 1);
            Statement::AssignRat(v, e)
        }
        2 => Statement::Havoc(var_of(rng)),
        3 => Statement::Assume(random_atom_formula(rng, vars)),
        _ => {
            let cond = random_atom_formula(rng, vars);
            let then_b = vec![random_stmt(rng, vars, false)];
            let else_b = if rng.random_bool(0.5) {
                vec![random_stmt(rng, vars, false)]
            } else {
                vec![]
            };
            Statement::If(cond, then_b, else_b)
        }
    }
}

pub fn random_body(rng: &mut StdRng, vars: &[(String, Sort)], max_len: usize) -> Vec<Statement> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| random_stmt(rng, vars, true)).collect()
}

/// Evaluate omitting errors: used where the formula is known closed.
pub fn holds(phi: &Formula, nu: &Valuation) -> bool {
    evaluate(phi, nu).expect("closed formula")
}

pub fn int_value(nu: &Valuation, name: &str) -> loopinv::logic::Rational {
    match nu.get(&Var::plain(name)).unwrap() {
        Value::Rat(r) => r.clone(),
        Value::Bool(_) => panic!("boolean variable"),
    }
}

pub fn corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("corpus")
}

pub fn load_corpus_loop(name: &str) -> loopinv::frontend::AnnotatedLoop {
    let path = corpus_dir().join(format!("{name}.loop"));
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    loopinv::frontend::parse(&text).expect("corpus file parses")
}

pub fn the_grid() -> Vec<i64> {
    vec![0, 1, 2]
}

pub fn _unused_rat_helper() {
    let _ = rat(1);
}
