//! Brute-force semantics oracles for transition formulas, preconditions and
//! the Ξ sequence, plus parse/print round trips on the corpus.

mod common;

use common::*;
use loopinv::frontend::{parse, pre_condition, transition, xi_sequence, FreshGen};
use loopinv::logic::{
    evaluate, free_vars, superscript, Formula, Sort, Valuation, Value, Var,
};
use loopinv::solver::Solver;
use loopinv::teacher::approximations;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// `ν ⊨ φ` where `φ` may mention fresh `%`-symbols: those are enumerated
/// over the grid (Booleans over both values), existentially for `exists`,
/// universally otherwise. This realizes the intended quantifier semantics of
/// the fresh-constant encodings on the finite grid.
fn eval_with_fresh(phi: &Formula, nu: &Valuation, grid: &[i64], exists: bool) -> bool {
    let fresh: Vec<Var> = free_vars(phi)
        .into_iter()
        .filter(|v| v.name.starts_with('%') && nu.0.get(v).is_none())
        .collect();
    if fresh.is_empty() {
        return evaluate(phi, nu).expect("covered formula");
    }
    // Fresh symbols carry their origin's sort in the name hint; rats and
    // bools are both tried (bool fresh symbols only arise for bool havocs,
    // and evaluating a rat value at a bool position errors — skip those).
    let mut assignments = vec![nu.clone()];
    for v in &fresh {
        let mut next = Vec::new();
        for m in &assignments {
            for g in grid {
                let mut m2 = m.clone();
                m2.set(v.clone(), Value::int(*g));
                next.push(m2);
            }
            for b in [false, true] {
                let mut m2 = m.clone();
                m2.set(v.clone(), Value::Bool(b));
                next.push(m2);
            }
        }
        assignments = next;
    }
    let mut any = false;
    let mut all = true;
    for m in assignments {
        match evaluate(phi, &m) {
            Ok(true) => any = true,
            Ok(false) => all = false,
            Err(_) => {} // sort mismatch for this fresh guess; not a real case
        }
    }
    if exists {
        any
    } else {
        // Universal reading must also discount guesses that errored; redo
        // strictly: valid iff no successful guess evaluated false.
        all
    }
}

#[test]
fn transition_formula_matches_executions() {
    // ν ⊨ ⟦S⟧ iff ν|⟨0⟩ →S ν|⟨1⟩ per the reference interpreter, on ≥150
    // random statements with all grid pre/post pairs.
    let grid = the_grid();
    let mut rng = StdRng::seed_from_u64(11);
    let mut checked = 0u64;
    for _ in 0..150 {
        let nvars = 1 + (checked as usize % 2);
        let vars = rat_vars(nvars + 1);
        let stmt = random_stmt(&mut rng, &vars, true);
        let mut fresh = FreshGen::new();
        let t = transition(&stmt, &vars, &mut fresh);
        for pre in grid_valuations(&vars, &grid) {
            let posts = exec_stmt(&stmt, &pre, &grid, &vars);
            for post in grid_valuations(&vars, &grid) {
                let mut joint = Valuation::new();
                for (n, _) in &vars {
                    joint.set(Var::indexed(n.clone(), 0), pre.get(&Var::plain(n.clone())).unwrap().clone());
                    joint.set(Var::indexed(n.clone(), 1), post.get(&Var::plain(n.clone())).unwrap().clone());
                }
                let formula_says = eval_with_fresh(&t, &joint, &grid, true);
                let interp_says = posts.contains(&post);
                // The formula existentially ranges intermediates over ℚ; on
                // the grid the two sides agree in both directions for the
                // statement forms generated here (intermediates are grid
                // values whenever endpoints are).
                assert_eq!(
                    formula_says, interp_says,
                    "stmt {stmt:?}, pre {pre:?}, post {post:?}"
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn pre_condition_matches_universal_executions() {
    // ν ⊨ Pre(θ : S) iff every grid execution of S from ν ends in θ;
    // Skolem constants in Pre are read universally over the grid.
    let grid = the_grid();
    let mut rng = StdRng::seed_from_u64(23);
    let mut programs = 0;
    while programs < 160 {
        let vars = rat_vars(2 + (programs as usize % 2));
        let body = random_body(&mut rng, &vars, 3);
        let theta = random_formula(&mut rng, &vars, 1);
        let mut fresh = FreshGen::new();
        let pre = pre_condition(&theta, &body, &vars, &mut fresh);
        for nu in grid_valuations(&vars, &grid) {
            let formula_says = eval_with_fresh(&pre, &nu, &grid, false);
            let interp_says = exec_seq(&body, &nu, &grid, &vars)
                .into_iter()
                .all(|out| holds(&theta, &out));
            assert_eq!(formula_says, interp_says, "body {body:?}, θ {theta}, ν {nu:?}");
        }
        programs += 1;
    }
}

#[test]
fn pre_of_havoc_on_absent_variable() {
    // Pre(y>0 : x := nondet) leaves the formula semantically unchanged.
    let vars = rat_vars(2);
    let theta = Formula::lt(loopinv::logic::Term::int(0), loopinv::logic::Term::var("y"));
    let body = vec![loopinv::frontend::Statement::Havoc(Var::plain("x"))];
    let mut fresh = FreshGen::new();
    let pre = pre_condition(&theta, &body, &vars, &mut fresh);
    for nu in grid_valuations(&vars, &the_grid()) {
        assert_eq!(
            eval_with_fresh(&pre, &nu, &the_grid(), false),
            exec_seq(&body, &nu, &the_grid(), &vars).into_iter().all(|m| holds(&theta, &m))
        );
    }
}

#[test]
fn execution_prefix_lemma_on_random_bodies() {
    // φ⟨0⟩ ∧ ⟦S₁⟧⟨0⟩ ∧ … ∧ ⟦S_i⟧⟨i−1⟩ is satisfied exactly by the grid
    // tuples that form an execution prefix starting in φ.
    let grid = the_grid();
    let mut rng = StdRng::seed_from_u64(37);
    for round in 0..40 {
        let vars = rat_vars(1 + (round % 2));
        let body = random_body(&mut rng, &vars, 2);
        let phi = random_formula(&mut rng, &vars, 1);
        let mut fresh = FreshGen::new();
        let xi = xi_sequence(&phi, &body, &Formula::True, &vars, &mut fresh);
        let m = body.len();
        // Enumerate tuples of valuations over blocks 0..=m.
        let block_vals = grid_valuations(&vars, &grid);
        let mut tuples = vec![Vec::new()];
        for _ in 0..=m {
            let mut next = Vec::new();
            for t in &tuples {
                for b in &block_vals {
                    let mut t2: Vec<Valuation> = t.clone();
                    t2.push(b.clone());
                    next.push(t2);
                }
            }
            tuples = next;
        }
        for tuple in tuples {
            let mut joint = Valuation::new();
            for (k, v) in tuple.iter().enumerate() {
                for (n, _) in &vars {
                    joint.set(
                        Var::indexed(n.clone(), k as u32),
                        v.get(&Var::plain(n.clone())).unwrap().clone(),
                    );
                }
            }
            let conj = Formula::and(xi[..=m].iter().cloned());
            let formula_says = eval_with_fresh(&conj, &joint, &grid, true);
            // Interpreter side: valuations chain via single-step execution.
            let mut interp_says = holds(&phi, &tuple[0]);
            for (i, s) in body.iter().enumerate() {
                if !interp_says {
                    break;
                }
                interp_says = exec_stmt(s, &tuple[i], &grid, &vars).contains(&tuple[i + 1]);
            }
            assert_eq!(formula_says, interp_says, "body {body:?}, φ {phi}");
        }
    }
}

#[test]
fn xi_sequences_of_corpus_are_inconsistent() {
    // Whenever φ ⇒ Pre(ψ : body) holds, the Ξ conjunction is unsatisfiable;
    // instantiated with φ = δ ∧ κ and ψ = ε ∨ κ on every corpus loop.
    for name in ["intro", "tar", "parser", "ide-wait-ireason"] {
        let l = load_corpus_loop(name);
        let mut solver = Solver::builtin();
        let (_, over) = approximations(&l, &mut solver).unwrap();
        let phi = Formula::and([l.pre.clone(), l.guard.clone()]);
        let mut fresh = FreshGen::new();
        // Premise check via the transition encoding.
        let body_t = loopinv::frontend::transition_seq(&l.body, &l.decls, &mut fresh);
        let premise_violation = Formula::and([
            superscript(&phi, 0),
            loopinv::logic::superscript(&l.guard, 0),
            body_t,
            superscript(&over, 1).not(),
        ]);
        let premise_holds = !solver.is_sat(&premise_violation).unwrap();
        assert!(premise_holds, "{name}: δ ∧ κ ⇒ Pre(ι_over : body) must hold");
        let xi = xi_sequence(&phi, &l.body, &over, &l.decls, &mut fresh);
        let conj = Formula::and(xi.iter().cloned());
        assert!(!solver.is_sat(&conj).unwrap(), "{name}: Ξ must be inconsistent");
        // Consecutive elements share exactly one block.
        for i in 0..xi.len() - 1 {
            let a = free_vars(&xi[i]);
            let b = free_vars(&xi[i + 1]);
            for v in a.intersection(&b) {
                assert_eq!(v.index, Some(i as u32), "{name}: sharing at {i}");
            }
        }
    }
}

#[test]
fn corpus_parses_and_round_trips() {
    for (name, stmts) in [("intro", 3), ("tar", 2), ("parser", 9), ("ide-wait-ireason", 4)] {
        let l = load_corpus_loop(name);
        assert_eq!(l.body.len(), stmts, "{name}: top-level statement count");
        let printed = l.to_string();
        let reparsed = parse(&printed).unwrap_or_else(|e| panic!("{name}: reparse: {e}"));
        assert_eq!(l, reparsed, "{name}: print/parse round trip");
    }
}

#[test]
fn literal_intro_text_has_two_statements() {
    // The §-style intro text without the naturals assume still parses with
    // m = 2; the bundled corpus variant adds the assume (m = 3).
    let text = "\
rat n, x, y;
pre { n >= 0 && x = n && y = n }
while (x > 0) {
  x := x - 1;
  y := y - 1;
}
post { x + y = 0 }
";
    let l = parse(text).unwrap();
    assert_eq!(l.body.len(), 2);
    assert_eq!(l.var_sort("x"), Some(Sort::Rat));
}
