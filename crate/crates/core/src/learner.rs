//! Exact learning of Boolean formulae over `B_P` by the CDNF algorithm,
//! expressed as a stepwise state machine: the learner emits membership and
//! equivalence queries, the caller feeds answers back. This keeps the
//! teacher pluggable (mechanical, exact truth-table, replay) and makes
//! restarts trivial.
//!
//! Per basis point `a_t` the learner keeps a support set `S_t` of walked
//! positive counterexamples; its hypothesis is
//! `H_t = ⋁_{u ∈ S_t} term_{a_t}(u)` with
//! `term_a(u) = ⋀_{j : u_j ≠ a_j} lit_j(u_j)`, and the overall conjecture is
//! `⋀_t H_t`. An equivalence counterexample satisfying every `H_t` opens a
//! new basis; otherwise it walks toward each violated basis, flipping one
//! bit at a time and keeping a flip exactly when a membership query answers
//! yes (ascending bit order, scan restarting after each kept flip).

use crate::abstraction::{AbstractVal, BoolFormula};
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Mem(AbstractVal),
    Equiv(BoolFormula),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answer {
    MemYes,
    MemNo,
    EquivYes,
    EquivCex(AbstractVal),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LearnerError {
    #[error("answer does not match the pending query kind")]
    ProtocolError,
    #[error("equivalence counterexample {0} repeated with unchanged hypothesis")]
    LivelockDetected(AbstractVal),
}

#[derive(Debug, Clone)]
struct Basis {
    a: AbstractVal,
    support: Vec<AbstractVal>,
    hyp: BoolFormula,
}

fn term_for(a: &AbstractVal, u: &AbstractVal) -> BoolFormula {
    BoolFormula::and(u.0.iter().enumerate().filter_map(|(j, uj)| {
        if *uj != a.get(j) {
            let v = BoolFormula::Var(j);
            Some(if *uj { v } else { v.not() })
        } else {
            None
        }
    }))
}

impl Basis {
    fn new(a: AbstractVal) -> Self {
        Basis { a, support: Vec::new(), hyp: BoolFormula::False }
    }

    fn rebuild(&mut self) {
        self.hyp = BoolFormula::or(self.support.iter().map(|u| term_for(&self.a, u)));
    }

    fn push(&mut self, u: AbstractVal) {
        self.support.push(u);
        self.rebuild();
    }
}

#[derive(Debug, Clone)]
enum Mode {
    AwaitEquiv,
    Walking(Walk),
}

#[derive(Debug, Clone)]
struct Walk {
    /// Bases violated by the counterexample, still to process.
    targets: Vec<usize>,
    /// The original counterexample (walks restart from it per target).
    origin: AbstractVal,
    /// Current walked point for targets[0].
    point: AbstractVal,
    /// Next bit position to try flipping.
    scan: usize,
    /// Bit whose flip is awaiting a membership answer.
    pending_bit: Option<usize>,
}

/// CDNF learner over `n` Boolean variables.
#[derive(Debug, Clone)]
pub struct Learner {
    n: usize,
    bases: Vec<Basis>,
    mode: Mode,
    pending: Query,
    steps: u64,
    /// (counterexample, hypothesis fingerprint) pairs already processed.
    /// A repeat means the session cannot make progress.
    seen_cex: BTreeSet<(AbstractVal, u64)>,
}

#[derive(Debug, Clone)]
pub enum Step {
    Ask(Query),
    Done(BoolFormula),
}

/// Start a session; the first query is `EQ(True)` (the empty conjunction).
pub fn learner_start(n: usize) -> (Learner, Query) {
    let q = Query::Equiv(BoolFormula::True);
    (
        Learner {
            n,
            bases: Vec::new(),
            mode: Mode::AwaitEquiv,
            pending: q.clone(),
            steps: 0,
            seen_cex: BTreeSet::new(),
        },
        q,
    )
}

impl Learner {
    pub fn hypothesis(&self) -> BoolFormula {
        BoolFormula::and(self.bases.iter().map(|b| b.hyp.clone()))
    }

    /// Fingerprint of the full learner state, not the collapsed hypothesis:
    /// distinct states can denote the same formula (a new empty basis
    /// collapses the conjunction to False), and only a repeated state means
    /// no progress is possible.
    fn hyp_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for b in &self.bases {
            b.a.hash(&mut h);
            b.support.hash(&mut h);
        }
        h.finish()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Support sets only ever grow within a session; exposed for invariants
    /// checked by tests.
    pub fn support_sizes(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.support.len()).collect()
    }

    fn ask(&mut self, q: Query) -> Step {
        self.pending = q.clone();
        Step::Ask(q)
    }

    fn ask_equiv(&mut self) -> Step {
        self.mode = Mode::AwaitEquiv;
        let h = self.hypothesis();
        self.ask(Query::Equiv(h))
    }

    /// Continue the walk for the current target, issuing membership queries
    /// until no flip toward the basis survives; then record the walked point
    /// and move on.
    fn advance_walk(&mut self, mut walk: Walk) -> Step {
        loop {
            let t = walk.targets[0];
            let a = self.bases[t].a.clone();
            // Find the next position where the point still differs from a.
            let mut j = walk.scan;
            while j < self.n && walk.point.get(j) == a.get(j) {
                j += 1;
            }
            if j < self.n {
                walk.scan = j;
                walk.pending_bit = Some(j);
                let mut flipped = walk.point.clone();
                flipped.0[j] = !flipped.0[j];
                self.mode = Mode::Walking(walk);
                return self.ask(Query::Mem(flipped));
            }
            // No flip toward a_t survives: the walked point joins S_t.
            let point = walk.point.clone();
            self.bases[t].push(point);
            walk.targets.remove(0);
            if walk.targets.is_empty() {
                return self.ask_equiv();
            }
            walk.point = walk.origin.clone();
            walk.scan = 0;
            walk.pending_bit = None;
        }
    }

    /// Feed the answer for the pending query.
    pub fn step(&mut self, answer: Answer) -> Result<Step, LearnerError> {
        self.steps += 1;
        match (&self.pending.clone(), answer) {
            (Query::Equiv(_), Answer::EquivYes) => Ok(Step::Done(self.hypothesis())),
            (Query::Equiv(_), Answer::EquivCex(v)) => {
                debug_assert_eq!(v.len(), self.n, "counterexample not total on B_P");
                let fp = self.hyp_fingerprint();
                if !self.seen_cex.insert((v.clone(), fp)) {
                    return Err(LearnerError::LivelockDetected(v));
                }
                let violated: Vec<usize> = self
                    .bases
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| !b.hyp.eval(&v))
                    .map(|(t, _)| t)
                    .collect();
                if violated.is_empty() {
                    // v satisfies every H_t: it is a negative counterexample
                    // and becomes a new basis point.
                    self.bases.push(Basis::new(v));
                    Ok(self.ask_equiv())
                } else {
                    let walk = Walk {
                        targets: violated,
                        origin: v.clone(),
                        point: v,
                        scan: 0,
                        pending_bit: None,
                    };
                    Ok(self.advance_walk(walk))
                }
            }
            (Query::Mem(_), Answer::MemYes) => {
                let mut walk = match &self.mode {
                    Mode::Walking(w) => w.clone(),
                    Mode::AwaitEquiv => return Err(LearnerError::ProtocolError),
                };
                let j = walk.pending_bit.take().ok_or(LearnerError::ProtocolError)?;
                walk.point.0[j] = !walk.point.0[j];
                // First-improvement: restart the scan after a kept flip.
                walk.scan = 0;
                Ok(self.advance_walk(walk))
            }
            (Query::Mem(_), Answer::MemNo) => {
                let mut walk = match &self.mode {
                    Mode::Walking(w) => w.clone(),
                    Mode::AwaitEquiv => return Err(LearnerError::ProtocolError),
                };
                let j = walk.pending_bit.take().ok_or(LearnerError::ProtocolError)?;
                walk.scan = j + 1;
                Ok(self.advance_walk(walk))
            }
            _ => Err(LearnerError::ProtocolError),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Drive the learner against an exact truth-table teacher; returns the
    /// learned formula and the (MEM, EQ) counts.
    fn run_exact(n: usize, target: &dyn Fn(&AbstractVal) -> bool) -> (BoolFormula, u64, u64) {
        let (mut l, mut q) = learner_start(n);
        let mut mem = 0u64;
        let mut eq = 0u64;
        loop {
            assert!(mem + eq < 10_000, "runaway learner");
            let ans = match &q {
                Query::Mem(mu) => {
                    mem += 1;
                    if target(mu) {
                        Answer::MemYes
                    } else {
                        Answer::MemNo
                    }
                }
                Query::Equiv(beta) => {
                    eq += 1;
                    let cex = (0..(1usize << n))
                        .map(|ix| AbstractVal::from_index(n, ix))
                        .find(|mu| beta.eval(mu) != target(mu));
                    match cex {
                        None => Answer::EquivYes,
                        Some(mu) => Answer::EquivCex(mu),
                    }
                }
            };
            match l.step(ans).unwrap() {
                Step::Ask(next) => q = next,
                Step::Done(beta) => return (beta, mem, eq),
            }
        }
    }

    #[test]
    fn trivial_true_target() {
        // n=0, target ≡ True: one equivalence query suffices.
        let (beta, mem, eq) = run_exact(0, &|_| true);
        assert!(beta.equivalent(&BoolFormula::True, 0));
        assert_eq!((mem, eq), (0, 1));
    }

    #[test]
    fn false_target_two_queries() {
        // target ≡ False over one variable: EQ(True) → cex, new basis,
        // EQ(False) → yes. 2 EQ, 0 MEM.
        let (beta, mem, eq) = run_exact(1, &|_| false);
        assert!(beta.equivalent(&BoolFormula::False, 1));
        assert_eq!((mem, eq), (0, 2));
    }

    #[test]
    fn conjunction_target() {
        let target = |mu: &AbstractVal| mu.get(0) && mu.get(1);
        let (beta, _, _) = run_exact(2, &target);
        let want = BoolFormula::and([BoolFormula::Var(0), BoolFormula::Var(1)]);
        assert!(beta.equivalent(&want, 2));
    }

    #[test]
    fn walking_follows_membership_answers() {
        // Hand-simulated walk: a = (F,F) basis (from target ≡ False at first),
        // then cex (T,T) with Mem((F,T)) = Yes, Mem((F,F)) = No leaves the
        // walked point (F,T), whose term w.r.t. a is b₁.
        let (mut l, q) = learner_start(2);
        assert_eq!(q, Query::Equiv(BoolFormula::True));
        // counterexample (F,F): satisfies the empty hypothesis → new basis.
        let s = l.step(Answer::EquivCex(AbstractVal(vec![false, false]))).unwrap();
        let q = match s {
            Step::Ask(q) => q,
            _ => panic!(),
        };
        assert_eq!(q, Query::Equiv(BoolFormula::False));
        // counterexample (T,T): violates H₁ = False → walk toward (F,F).
        let s = l.step(Answer::EquivCex(AbstractVal(vec![true, true]))).unwrap();
        // First probe flips bit 0: (F,T).
        match &s {
            Step::Ask(Query::Mem(mu)) => assert_eq!(mu.0, vec![false, true]),
            other => panic!("expected Mem, got {other:?}"),
        }
        // Yes: keep the flip, restart scan; next probe flips bit 1: (F,F).
        let s = l.step(Answer::MemYes).unwrap();
        match &s {
            Step::Ask(Query::Mem(mu)) => assert_eq!(mu.0, vec![false, false]),
            other => panic!("expected Mem, got {other:?}"),
        }
        // No: walked point stays (F,T); term is b₁; next is the equivalence
        // query on the rebuilt hypothesis.
        let s = l.step(Answer::MemNo).unwrap();
        match &s {
            Step::Ask(Query::Equiv(beta)) => {
                assert!(beta.equivalent(&BoolFormula::Var(1), 2), "got {beta}");
            }
            other => panic!("expected Equiv, got {other:?}"),
        }
        assert_eq!(l.support_sizes(), vec![1]);
    }

    #[test]
    fn exhaustive_three_variables() {
        // All 256 truth tables over 3 variables learned exactly, bounded
        // query budget per target.
        for table in 0u32..256 {
            let target = move |mu: &AbstractVal| {
                let ix = (0..3).fold(0usize, |acc, i| acc | ((mu.get(i) as usize) << i));
                (table >> ix) & 1 == 1
            };
            let (beta, mem, eq) = run_exact(3, &target);
            for ix in 0..8 {
                let mu = AbstractVal::from_index(3, ix);
                assert_eq!(beta.eval(&mu), target(&mu), "table {table}, point {mu}");
            }
            assert!(mem + eq <= 200, "table {table} took {mem} MEM + {eq} EQ");
        }
    }

    #[test]
    fn protocol_mismatch_is_error() {
        let (mut l, _) = learner_start(1);
        assert!(matches!(l.step(Answer::MemYes), Err(LearnerError::ProtocolError)));
    }

    #[test]
    fn repeated_cex_with_growing_state_is_not_livelock() {
        // The same counterexample may legitimately recur while the
        // conjectured formula cycles (True, False, True, …) as long as the
        // internal state grows; a formula-level fingerprint would misfire
        // here and break exact learning. Processing a counterexample always
        // adds a basis or a fresh walked point, so these steps must succeed.
        let (mut l, _) = learner_start(1);
        let cex = AbstractVal(vec![true]);
        let s = l.step(Answer::EquivCex(cex.clone())).unwrap();
        match s {
            Step::Ask(Query::Equiv(beta)) => assert_eq!(beta, BoolFormula::False),
            other => panic!("{other:?}"),
        }
        let s = l.step(Answer::EquivCex(cex.clone())).unwrap();
        match s {
            Step::Ask(Query::Equiv(beta)) => assert_eq!(beta, BoolFormula::True),
            other => panic!("{other:?}"),
        }
        // Third time: a new basis is opened; the conjecture collapses to
        // False again, but the state differs, so no livelock is reported.
        let s = l.step(Answer::EquivCex(cex.clone())).unwrap();
        match s {
            Step::Ask(Query::Equiv(beta)) => assert_eq!(beta, BoolFormula::False),
            other => panic!("{other:?}"),
        }
        assert_eq!(l.support_sizes(), vec![1, 0]);
    }
}
