//! Transition formulas `⟦S⟧`, preconditions `Pre(θ : S)` and the `Ξ`
//! interpolation sequence.
//!
//! Sequential composition inside a compound statement introduces an
//! existential over the intermediate state; it is realized by renaming the
//! intermediate block to globally fresh symbols, which is equisatisfiable
//! and valid for every use here (satisfiability and interpolation queries).
//! The positively-occurring universal quantifier of `Pre(θ : x := nondet)`
//! is likewise eliminated by a fresh Skolem constant.

use super::ast::Statement;
use crate::logic::{
    shift_indices, substitute, superscript, superscript_term, Formula, Sort, Subst, Term, Var,
};

/// Fresh-symbol source. One per inference problem, passed explicitly; fresh
/// names use a `%` prefix the surface grammar cannot produce.
#[derive(Debug, Default)]
pub struct FreshGen {
    counter: u64,
}

impl FreshGen {
    pub fn new() -> Self {
        FreshGen::default()
    }

    pub fn fresh(&mut self, hint: &str) -> Var {
        let v = Var::plain(format!("%{}_{}", self.counter, hint));
        self.counter += 1;
        v
    }
}

/// Boolean equivalence, spelled with core connectives.
fn iff(a: Formula, b: Formula) -> Formula {
    Formula::or([
        Formula::and([a.clone(), b.clone()]),
        Formula::and([a.not(), b.not()]),
    ])
}

fn frame_var(name: &str, sort: Sort) -> Formula {
    let pre = Var::indexed(name, 0);
    let post = Var::indexed(name, 1);
    match sort {
        Sort::Rat => Formula::eq(Term::Var(post), Term::Var(pre)),
        Sort::Bool => iff(Formula::BoolVar(post), Formula::BoolVar(pre)),
    }
}

fn frame_except(vars: &[(String, Sort)], skip: Option<&str>) -> Formula {
    Formula::and(
        vars.iter()
            .filter(|(n, _)| Some(n.as_str()) != skip)
            .map(|(n, s)| frame_var(n, *s)),
    )
}

fn rename_vars(phi: &Formula, map: &std::collections::BTreeMap<Var, Var>) -> Formula {
    fn map_term(t: &Term, map: &std::collections::BTreeMap<Var, Var>) -> Term {
        match t {
            Term::Const(_) => t.clone(),
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::Add(a, b) => Term::Add(Box::new(map_term(a, map)), Box::new(map_term(b, map))),
            Term::Sub(a, b) => Term::Sub(Box::new(map_term(a, map)), Box::new(map_term(b, map))),
            Term::Mul(c, inner) => Term::Mul(c.clone(), Box::new(map_term(inner, map))),
        }
    }
    match phi {
        Formula::True | Formula::False => phi.clone(),
        Formula::BoolVar(v) => Formula::BoolVar(map.get(v).cloned().unwrap_or_else(|| v.clone())),
        Formula::Not(g) => Formula::Not(Box::new(rename_vars(g, map))),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_vars(g, map)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_vars(g, map)).collect()),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, map_term(a, map), map_term(b, map)),
    }
}

/// `⟦S⟧`: transition formula over `X⟨0⟩ ∪ X⟨1⟩` (plus fresh intermediate
/// symbols for compound statements).
pub fn transition(s: &Statement, vars: &[(String, Sort)], fresh: &mut FreshGen) -> Formula {
    match s {
        Statement::Nop => frame_except(vars, None),
        Statement::AssignRat(v, e) => Formula::and([
            Formula::eq(Term::Var(v.with_index(1)), superscript_term(e, 0)),
            frame_except(vars, Some(&v.name)),
        ]),
        Statement::AssignBool(v, p) => Formula::and([
            iff(Formula::BoolVar(v.with_index(1)), superscript(p, 0)),
            frame_except(vars, Some(&v.name)),
        ]),
        Statement::Havoc(v) => frame_except(vars, Some(&v.name)),
        Statement::If(p, then_b, else_b) => Formula::or([
            Formula::and([superscript(p, 0), transition_seq(then_b, vars, fresh)]),
            Formula::and([superscript(p, 0).not(), transition_seq(else_b, vars, fresh)]),
        ]),
        Statement::Assume(p) => Formula::and([superscript(p, 0), frame_except(vars, None)]),
    }
}

/// `⟦S₀; S₁; …⟧` with the intermediate blocks renamed to fresh symbols.
pub fn transition_seq(stmts: &[Statement], vars: &[(String, Sort)], fresh: &mut FreshGen) -> Formula {
    match stmts {
        [] => frame_except(vars, None),
        [s] => transition(s, vars, fresh),
        [s, rest @ ..] => {
            let first = transition(s, vars, fresh);
            let restf = transition_seq(rest, vars, fresh);
            // Middle block: ∃X. first[X⟨1⟩ ↦ X] ∧ rest[X⟨0⟩ ↦ X], with the
            // existential realized by fresh constants.
            let mut map1 = std::collections::BTreeMap::new();
            let mut map0 = std::collections::BTreeMap::new();
            for (n, _) in vars {
                let mid = fresh.fresh(n);
                map1.insert(Var::indexed(n, 1), mid.clone());
                map0.insert(Var::indexed(n, 0), mid);
            }
            Formula::and([rename_vars(&first, &map1), rename_vars(&restf, &map0)])
        }
    }
}

/// `Pre(θ : S₁; …; S_m)`: the precondition of `θ` with respect to the
/// statement sequence, quantifier-free via Skolem constants.
pub fn pre_condition(
    theta: &Formula,
    stmts: &[Statement],
    vars: &[(String, Sort)],
    fresh: &mut FreshGen,
) -> Formula {
    match stmts {
        [] => theta.clone(),
        [s, rest @ ..] => {
            let after = pre_condition(theta, rest, vars, fresh);
            pre_stmt(&after, s, vars, fresh)
        }
    }
}

fn pre_stmt(
    theta: &Formula,
    s: &Statement,
    vars: &[(String, Sort)],
    fresh: &mut FreshGen,
) -> Formula {
    match s {
        Statement::Nop => theta.clone(),
        Statement::AssignRat(v, e) => {
            substitute(theta, &Subst::rat_one(v.clone(), e.clone())).expect("sort-checked AST")
        }
        Statement::AssignBool(v, p) => {
            substitute(theta, &Subst::bool_one(v.clone(), p.clone())).expect("sort-checked AST")
        }
        Statement::Havoc(v) => {
            // ∀x.θ with the universal eliminated by a Skolem constant: legal
            // because all universal quantifiers occur positively in Pre.
            let sk = fresh.fresh(&v.name);
            let sort = vars
                .iter()
                .find(|(n, _)| *n == v.name)
                .map(|(_, s)| *s)
                .unwrap_or(Sort::Rat);
            let sigma = match sort {
                Sort::Rat => Subst::rat_one(v.clone(), Term::Var(sk)),
                Sort::Bool => Subst::bool_one(v.clone(), Formula::BoolVar(sk)),
            };
            substitute(theta, &sigma).expect("sort-checked AST")
        }
        Statement::If(p, then_b, else_b) => Formula::and([
            p.clone().implies(pre_condition(theta, then_b, vars, fresh)),
            p.clone().not().implies(pre_condition(theta, else_b, vars, fresh)),
        ]),
        Statement::Assume(p) => p.clone().implies(theta.clone()),
    }
}

/// `Ξ(φ, S₁, …, S_m, ψ) = [φ⟨0⟩, ⟦S₁⟧⟨0⟩, …, ⟦S_m⟧⟨m−1⟩, ¬ψ⟨m⟩]`.
///
/// Consecutive elements share exactly the block `X⟨i⟩`; fresh symbols inside
/// each `⟦S_i⟧` are unshared by construction.
pub fn xi_sequence(
    phi: &Formula,
    body: &[Statement],
    psi: &Formula,
    vars: &[(String, Sort)],
    fresh: &mut FreshGen,
) -> Vec<Formula> {
    let m = body.len() as u32;
    let mut out = Vec::with_capacity(body.len() + 2);
    out.push(superscript(phi, 0));
    for (i, s) in body.iter().enumerate() {
        let t = transition(s, vars, fresh);
        out.push(shift_indices(&t, i as u32));
    }
    out.push(superscript(psi, m).not());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::free_vars;

    fn xy() -> Vec<(String, Sort)> {
        vec![("x".into(), Sort::Rat), ("y".into(), Sort::Rat)]
    }

    #[test]
    fn nop_transition_frames_everything() {
        let mut fresh = FreshGen::new();
        let t = transition(&Statement::Nop, &xy(), &mut fresh);
        let want = Formula::and([
            Formula::eq(Term::Var(Var::indexed("x", 1)), Term::Var(Var::indexed("x", 0))),
            Formula::eq(Term::Var(Var::indexed("y", 1)), Term::Var(Var::indexed("y", 0))),
        ]);
        assert_eq!(t, want);
    }

    #[test]
    fn assignment_transition() {
        // x := x − 1 over {x, y} → x⟨1⟩ = x⟨0⟩ − 1 ∧ y⟨1⟩ = y⟨0⟩
        let mut fresh = FreshGen::new();
        let s = Statement::AssignRat(Var::plain("x"), Term::var("x").sub(Term::int(1)));
        let t = transition(&s, &xy(), &mut fresh);
        let want = Formula::and([
            Formula::eq(
                Term::Var(Var::indexed("x", 1)),
                Term::Var(Var::indexed("x", 0)).sub(Term::int(1)),
            ),
            Formula::eq(Term::Var(Var::indexed("y", 1)), Term::Var(Var::indexed("y", 0))),
        ]);
        assert_eq!(t, want);
    }

    #[test]
    fn havoc_transition_leaves_target_unconstrained() {
        let mut fresh = FreshGen::new();
        let t = transition(&Statement::Havoc(Var::plain("x")), &xy(), &mut fresh);
        let want = Formula::eq(Term::Var(Var::indexed("y", 1)), Term::Var(Var::indexed("y", 0)));
        assert_eq!(t, want);
    }

    #[test]
    fn pre_of_assignment_substitutes() {
        // Pre(x+y=0 : x := x−1) → (x−1) + y = 0
        let mut fresh = FreshGen::new();
        let theta = Formula::eq(Term::var("x").add(Term::var("y")), Term::int(0));
        let s = Statement::AssignRat(Var::plain("x"), Term::var("x").sub(Term::int(1)));
        let got = pre_condition(&theta, std::slice::from_ref(&s), &xy(), &mut fresh);
        let want = Formula::eq(
            Term::var("x").sub(Term::int(1)).add(Term::var("y")),
            Term::int(0),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn pre_of_nop_is_identity() {
        let mut fresh = FreshGen::new();
        let theta = Formula::lt(Term::int(0), Term::var("y"));
        let got = pre_condition(&theta, &[Statement::Nop], &xy(), &mut fresh);
        assert_eq!(got, theta);
    }

    #[test]
    fn pre_of_havoc_on_absent_var_is_identity() {
        // Pre(y>0 : x := nondet) substitutes a fresh constant for x; x is not
        // free, so the formula is unchanged.
        let mut fresh = FreshGen::new();
        let theta = Formula::lt(Term::int(0), Term::var("y"));
        let got = pre_condition(&theta, &[Statement::Havoc(Var::plain("x"))], &xy(), &mut fresh);
        assert_eq!(got, theta);
    }

    #[test]
    fn xi_shape_and_sharing() {
        // φ=T, body=[nop], ψ=T over {x} → [T, x⟨1⟩=x⟨0⟩, ¬T]
        let vars = vec![("x".to_string(), Sort::Rat)];
        let mut fresh = FreshGen::new();
        let xi = xi_sequence(&Formula::True, &[Statement::Nop], &Formula::True, &vars, &mut fresh);
        assert_eq!(xi.len(), 3);
        assert_eq!(xi[0], Formula::True);
        assert_eq!(
            xi[1],
            Formula::eq(Term::Var(Var::indexed("x", 1)), Term::Var(Var::indexed("x", 0)))
        );
        assert_eq!(xi[2], Formula::False);
    }

    #[test]
    fn xi_intro_body() {
        // Intro body with φ = T ∧ (x>0), ψ = (x+y=0) ∨ (x>0).
        let mut fresh = FreshGen::new();
        let body = vec![
            Statement::AssignRat(Var::plain("x"), Term::var("x").sub(Term::int(1))),
            Statement::AssignRat(Var::plain("y"), Term::var("y").sub(Term::int(1))),
        ];
        let phi = Formula::and([Formula::True, Formula::lt(Term::int(0), Term::var("x"))]);
        let psi = Formula::or([
            Formula::eq(Term::var("x").add(Term::var("y")), Term::int(0)),
            Formula::lt(Term::int(0), Term::var("x")),
        ]);
        let xi = xi_sequence(&phi, &body, &psi, &xy(), &mut fresh);
        assert_eq!(xi.len(), 4);
        // Middle elements relate consecutive blocks.
        let v1 = free_vars(&xi[1]);
        assert!(v1.contains(&Var::indexed("x", 0)) && v1.contains(&Var::indexed("x", 1)));
        let v2 = free_vars(&xi[2]);
        assert!(v2.contains(&Var::indexed("y", 1)) && v2.contains(&Var::indexed("y", 2)));
        // Consecutive elements share exactly the block X⟨i⟩.
        for i in 0..3 {
            let a = free_vars(&xi[i]);
            let b = free_vars(&xi[i + 1]);
            let shared: Vec<_> = a.intersection(&b).collect();
            assert!(
                shared.iter().all(|v| v.index == Some(i as u32)),
                "sharing violated at {i}: {shared:?}"
            );
        }
    }

    #[test]
    fn seq_inside_if_uses_fresh_block() {
        let mut fresh = FreshGen::new();
        let s = Statement::If(
            Formula::lt(Term::int(0), Term::var("x")),
            vec![
                Statement::AssignRat(Var::plain("x"), Term::var("x").sub(Term::int(1))),
                Statement::AssignRat(Var::plain("y"), Term::var("y").add(Term::int(1))),
            ],
            vec![],
        );
        let t = transition(&s, &xy(), &mut fresh);
        let vars = free_vars(&t);
        // Fresh middle-block symbols appear, flagged by the % prefix.
        assert!(vars.iter().any(|v| v.name.starts_with('%')));
    }
}
