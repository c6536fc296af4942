//! The main inference loop with predicate generation, restart management,
//! statistics and the corpus runner.
//!
//! One `infer` call owns one solver instance, one RNG and one fresh-symbol
//! counter. Each learner session runs against a fresh teacher over the
//! current predicate set; a conflict with a concrete witness pair or an
//! exhausted random-answer budget grows the predicate set by interpolation,
//! every restart resets learner and teacher state while the RNG stream
//! continues, and any reported invariant is re-verified on an independent
//! code path before it is returned.

use crate::abstraction::PredicateSet;
use crate::frontend::{parse, AnnotatedLoop, FreshGen, ParseError};
use crate::learner::{learner_start, Answer, LearnerError, Query, Step};
use crate::logic::Formula;
use crate::predgen::{
    initial_predicates, predicates_from_conflict, predicates_from_conjecture,
    PredgenError,
};
use crate::solver::{Solver, SolverConfig, SolverError};
use crate::teacher::{ConflictEvidence, EquivResponse, Teacher, TeacherError};
use crate::verify::{verify_invariant, Verdict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub seed: u64,
    /// Maximum learner restarts before giving up.
    pub max_restarts: u64,
    /// Wall-clock budget for one `infer` call, in seconds.
    pub timeout_s: u64,
    pub solver: SolverConfig,
    /// Satisfiable-cube cap per interpolation side.
    pub dnf_cap: usize,
    /// Query/answer trace sink.
    pub trace: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: 0,
            max_restarts: 10_000,
            timeout_s: 60,
            solver: SolverConfig::default(),
            dnf_cap: 4096,
            trace: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct BatchCounts {
    pub initial: u64,
    pub conjecture: u64,
    pub conflict: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stats {
    /// Final number of atomic predicates.
    pub p: usize,
    pub mem: u64,
    pub eq: u64,
    /// Learner restarts.
    pub re: u64,
    pub batches: BatchCounts,
    pub time_ms: u128,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Invariant(Formula),
    Timeout,
    NoInvariantPossible,
}

#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub outcome: Outcome,
    pub stats: Stats,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("predicate generation failed: {0}")]
    Predgen(PredgenError),
    #[error("learner protocol failure: {0}")]
    Learner(LearnerError),
    #[error("an accepted conjecture failed independent re-verification: {0}")]
    Soundness(Formula),
    #[error("trace io: {0}")]
    TraceIo(#[from] std::io::Error),
}

fn predgen_timed_out(e: &PredgenError) -> bool {
    matches!(
        e,
        PredgenError::Solver(SolverError::Timeout)
            | PredgenError::Interp(crate::interpolate::InterpError::Solver(SolverError::Timeout))
    )
}

struct Trace {
    out: Option<std::io::BufWriter<std::fs::File>>,
}

impl Trace {
    fn open(path: &Option<PathBuf>) -> Result<Trace, std::io::Error> {
        Ok(Trace {
            out: match path {
                None => None,
                Some(p) => Some(std::io::BufWriter::new(std::fs::File::create(p)?)),
            },
        })
    }

    fn line(&mut self, s: impl AsRef<str>) -> Result<(), std::io::Error> {
        if let Some(w) = &mut self.out {
            writeln!(w, "{}", s.as_ref())?;
        }
        Ok(())
    }
}

/// Run the full inference loop on an annotated loop.
pub fn infer(loop_: &AnnotatedLoop, cfg: &EngineConfig) -> Result<InferenceResult, EngineError> {
    let start = Instant::now();
    let deadline = start + Duration::from_secs(cfg.timeout_s);
    let mut solver = Solver::new(cfg.solver.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut fresh = FreshGen::new();
    let mut trace = Trace::open(&cfg.trace)?;
    let mut stats = Stats {
        p: 0,
        mem: 0,
        eq: 0,
        re: 0,
        batches: BatchCounts::default(),
        time_ms: 0,
    };

    let (under, over) = crate::teacher::approximations(loop_, &mut solver)?;

    let mut p = PredicateSet::new();
    match initial_predicates(&under, &over, &mut solver, cfg.dnf_cap) {
        Ok(batch) => {
            stats.batches.initial += 1;
            batch.merge_into(&mut p);
        }
        Err(PredgenError::NoInvariantPossible) => {
            stats.p = 0;
            stats.time_ms = start.elapsed().as_millis();
            return Ok(InferenceResult { outcome: Outcome::NoInvariantPossible, stats });
        }
        Err(e) => return Err(EngineError::Predgen(e)),
    }
    trace.line(format!("INIT P={p}"))?;

    let finish = |outcome: Outcome, mut stats: Stats, p: &PredicateSet| {
        stats.p = p.len();
        stats.time_ms = start.elapsed().as_millis();
        Ok(InferenceResult { outcome, stats })
    };

    // Cap every solver query at the remaining wall-clock budget so a single
    // long query cannot overrun the engine timeout.
    let clamp_query_budget = |solver: &mut Solver| {
        let remaining = deadline.saturating_duration_since(Instant::now()).as_millis() as u64;
        solver.cfg.query_timeout_ms = remaining.clamp(1, cfg.solver.query_timeout_ms);
    };

    loop {
        if Instant::now() > deadline {
            return finish(Outcome::Timeout, stats, &p);
        }
        if stats.re > cfg.max_restarts {
            return finish(Outcome::Timeout, stats, &p);
        }
        clamp_query_budget(&mut solver);

        let mut teacher = Teacher::new(loop_, p.clone(), &mut solver)?;
        let (mut learner, mut query) = learner_start(p.len());
        trace.line(format!("SESSION P={} tau={} t={}ms", p.len(), teacher.tau, start.elapsed().as_millis()))?;

        // One learner session; ends in an invariant, a restart cause, or
        // timeout.
        enum SessionEnd {
            Invariant(Formula),
            Conflict,
            Excessive(Formula),
            Timeout,
        }
        let end = loop {
            if Instant::now() > deadline {
                break SessionEnd::Timeout;
            }
            clamp_query_budget(&mut solver);
            let answer = match &query {
                Query::Mem(mu) => {
                    stats.mem += 1;
                    match teacher.resolve_membership(mu, &mut solver, &mut rng) {
                        Ok(true) => {
                            trace.line(format!("MEM {mu} -> YES"))?;
                            Answer::MemYes
                        }
                        Ok(false) => {
                            trace.line(format!("MEM {mu} -> NO"))?;
                            Answer::MemNo
                        }
                        Err(TeacherError::Conflict { mu, old, new }) => {
                            trace.line(format!("MEM conflict at {mu}: {old:?} vs {new:?}"))?;
                            break SessionEnd::Conflict;
                        }
                        Err(TeacherError::ExcessiveRandomAnswers(theta)) => {
                            break SessionEnd::Excessive(theta)
                        }
                        Err(TeacherError::Solver(e)) => match e {
                            SolverError::Timeout => break SessionEnd::Timeout,
                            other => return Err(EngineError::Solver(other)),
                        },
                    }
                }
                Query::Equiv(beta) => {
                    stats.eq += 1;
                    match teacher.resolve_equivalence(beta, &mut solver, &mut rng) {
                        Ok(EquivResponse::Yes) => {
                            trace.line(format!("EQ {beta} -> YES"))?;
                            break SessionEnd::Invariant(crate::abstraction::gamma(beta, &p));
                        }
                        Ok(EquivResponse::Cex(mu)) => {
                            trace.line(format!("EQ {beta} -> CEX {mu}"))?;
                            Answer::EquivCex(mu)
                        }
                        Err(TeacherError::Conflict { mu, old, new }) => {
                            trace.line(format!("EQ conflict at {mu}: {old:?} vs {new:?}"))?;
                            break SessionEnd::Conflict;
                        }
                        Err(TeacherError::ExcessiveRandomAnswers(theta)) => {
                            trace.line("EQ -> excessive random answers")?;
                            break SessionEnd::Excessive(theta)
                        }
                        Err(TeacherError::Solver(e)) => match e {
                            SolverError::Timeout => break SessionEnd::Timeout,
                            other => return Err(EngineError::Solver(other)),
                        },
                    }
                }
            };
            match learner.step(answer) {
                Ok(Step::Ask(q)) => query = q,
                Ok(Step::Done(beta)) => {
                    // Unreachable in engine flow (the teacher's Yes is
                    // handled above), but harmless.
                    break SessionEnd::Invariant(crate::abstraction::gamma(&beta, &p));
                }
                Err(LearnerError::LivelockDetected(mu)) => {
                    trace.line(format!("LIVELOCK at {mu}"))?;
                    break SessionEnd::Conflict;
                }
                Err(e @ LearnerError::ProtocolError) => return Err(EngineError::Learner(e)),
            }
        };

        match end {
            SessionEnd::Invariant(theta) => {
                // Independent re-verification on a separate code path.
                match verify_invariant(loop_, &theta, &cfg.solver)? {
                    Verdict::Invariant => {
                        trace.line(format!("INVARIANT {theta}"))?;
                        return finish(Outcome::Invariant(theta), stats, &p);
                    }
                    _ => return Err(EngineError::Soundness(theta)),
                }
            }
            SessionEnd::Timeout => return finish(Outcome::Timeout, stats, &p),
            SessionEnd::Conflict => {
                clamp_query_budget(&mut solver);
                match teacher.find_conflict_pair() {
                    ConflictEvidence::ConcretePair(nu, nu_prime) => {
                        trace.line(format!("PAIR {nu:?} | {nu_prime:?}"))?;
                        match predicates_from_conflict(&nu, &nu_prime, &p, &mut solver, cfg.dnf_cap)
                        {
                            Ok(batch) => {
                                stats.batches.conflict += 1;
                                let added = batch.merge_into(&mut p);
                                trace.line(format!("CONFLICT +{added} predicates, P={p}"))?;
                            }
                            Err(e) if predgen_timed_out(&e) => {
                                return finish(Outcome::Timeout, stats, &p)
                            }
                            Err(PredgenError::Interp(e)) => {
                                // Interpolation limits: restart without new
                                // predicates rather than aborting the run.
                                trace.line(format!("CONFLICT interpolation failed: {e}"))?;
                            }
                            Err(e) => return Err(EngineError::Predgen(e)),
                        }
                    }
                    ConflictEvidence::RandomOnly => {
                        trace.line("CONFLICT random-only, restarting")?;
                    }
                }
                stats.re += 1;
            }
            SessionEnd::Excessive(theta) => {
                clamp_query_budget(&mut solver);
                match predicates_from_conjecture(
                    &theta,
                    loop_,
                    &under,
                    &over,
                    &mut solver,
                    &mut fresh,
                    cfg.dnf_cap,
                ) {
                    Ok(batch) => {
                        stats.batches.conjecture += 1;
                        let added = batch.merge_into(&mut p);
                        trace.line(format!("CONJECTURE +{added} predicates, P={p}"))?;
                    }
                    Err(e) if predgen_timed_out(&e) => {
                        return finish(Outcome::Timeout, stats, &p)
                    }
                    Err(PredgenError::Interp(e)) => {
                        trace.line(format!("CONJECTURE interpolation failed: {e}"))?;
                    }
                    Err(e) => return Err(EngineError::Predgen(e)),
                }
                stats.re += 1;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Stats serialization and the corpus runner
// ---------------------------------------------------------------------------

/// JSON record for one run, matching the documented schema.
#[derive(Debug, Serialize)]
pub struct StatsRecord {
    pub example: String,
    pub outcome: &'static str,
    pub invariant: Option<String>,
    #[serde(rename = "P")]
    pub p: usize,
    #[serde(rename = "MEM")]
    pub mem: u64,
    #[serde(rename = "EQ")]
    pub eq: u64,
    #[serde(rename = "RE")]
    pub re: u64,
    pub time_ms: u128,
    pub batches: BatchCounts,
}

impl StatsRecord {
    pub fn new(example: &str, result: &InferenceResult) -> StatsRecord {
        let (outcome, invariant) = match &result.outcome {
            Outcome::Invariant(f) => ("invariant", Some(f.to_string())),
            Outcome::Timeout => ("timeout", None),
            Outcome::NoInvariantPossible => ("no_invariant_possible", None),
        };
        StatsRecord {
            example: example.to_string(),
            outcome,
            invariant,
            p: result.stats.p,
            mem: result.stats.mem,
            eq: result.stats.eq,
            re: result.stats.re,
            time_ms: result.stats.time_ms,
            batches: result.stats.batches,
        }
    }
}

#[derive(Debug)]
pub enum CorpusEntry {
    Runs { example: String, results: Vec<InferenceResult> },
    ParseError { example: String, error: ParseError },
}

/// Run every `.loop` file under `paths` for `runs` consecutive seeds
/// starting at `cfg.seed`. Parse failures are reported per file and the run
/// continues.
pub fn run_corpus(paths: &[PathBuf], runs: u64, cfg: &EngineConfig) -> Result<Vec<CorpusEntry>, EngineError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|q| q.extension().map(|x| x == "loop").unwrap_or(false))
                .collect();
            inner.sort();
            files.extend(inner);
        } else {
            files.push(p.clone());
        }
    }
    let mut out = Vec::new();
    for f in files {
        let name = f
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| f.display().to_string());
        let text = std::fs::read_to_string(&f)?;
        let parsed = match parse(&text) {
            Ok(l) => l,
            Err(error) => {
                out.push(CorpusEntry::ParseError { example: name, error });
                continue;
            }
        };
        let mut results = Vec::new();
        for k in 0..runs {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = cfg.seed + k;
            run_cfg.trace = None;
            results.push(infer(&parsed, &run_cfg)?);
        }
        out.push(CorpusEntry::Runs { example: name, results });
    }
    Ok(out)
}

/// Convenience wrapper: parse a loop file and infer.
pub fn infer_path(path: &Path, cfg: &EngineConfig) -> Result<Result<InferenceResult, ParseError>, EngineError> {
    let text = std::fs::read_to_string(path)?;
    match parse(&text) {
        Err(e) => Ok(Err(e)),
        Ok(l) => infer(&l, cfg).map(Ok),
    }
}
