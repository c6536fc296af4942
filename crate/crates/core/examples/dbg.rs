use loopinv::frontend::{parse, transition_seq, FreshGen};
use loopinv::logic::{superscript, Formula};
use loopinv::solver::Solver;
use loopinv::teacher::approximations;
use std::time::Instant;

fn main() {
    let text = std::fs::read_to_string("corpus/parser.loop").unwrap();
    let l = parse(&text).unwrap();
    let mut s = Solver::builtin();
    let (under, over) = approximations(&l, &mut s).unwrap();
    let mut fresh = FreshGen::new();
    let t0 = Instant::now();
    let bt = transition_seq(&l.body, &l.decls, &mut fresh);
    println!("transition built {:?}, vars {}", t0.elapsed(), loopinv::logic::free_vars(&bt).len());
    // Representative teacher checks
    let t0 = Instant::now();
    let escape = Formula::and([
        superscript(&under, 0),
        superscript(&l.guard, 0),
        bt.clone(),
        superscript(&over, 1).not(),
    ]);
    let r = s.is_sat(&escape).unwrap();
    println!("escape sat={r} in {:?}", t0.elapsed());
    let t0 = Instant::now();
    let reached = Formula::and([
        superscript(&under, 0),
        superscript(&l.guard, 0),
        bt.clone(),
        superscript(&over, 1),
    ]);
    let r = s.is_sat(&reached).unwrap();
    println!("reach sat={r} in {:?}", t0.elapsed());
    let t0 = Instant::now();
    let r = s.is_sat(&Formula::and([under.clone(), over.clone().not()])).unwrap();
    println!("under-not-over sat={r} in {:?}", t0.elapsed());
}
