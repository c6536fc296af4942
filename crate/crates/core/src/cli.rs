//! Command-line interface: `loopinv infer <file>` and
//! `loopinv corpus <dir>`.
//!
//! Exit codes: 0 invariant found, 2 timeout, 3 no invariant possible,
//! 1 usage or parse error.

use crate::engine::{
    infer_path, run_corpus, CorpusEntry, EngineConfig, Outcome, StatsRecord,
};
use crate::solver::{Backend, SolverConfig};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "loopinv", about = "Quantifier-free loop invariant inference", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonOpts {
    /// RNG seed for the teacher's random answers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock budget per example, seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
    /// Learner restart cap.
    #[arg(long, default_value_t = 10_000)]
    pub max_restarts: u64,
    /// Decision procedure backend.
    #[arg(long, value_parser = ["builtin", "external"], default_value = "builtin")]
    pub solver: String,
    /// Command template for the external SMT-LIB2 backend, e.g. "z3 -in".
    #[arg(long)]
    pub solver_cmd: Option<String>,
    /// Satisfiable-cube cap per interpolation side.
    #[arg(long, default_value_t = 4096)]
    pub dnf_cap: usize,
    /// Write a query/answer trace to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write per-run statistics as JSON to this file.
    #[arg(long)]
    pub stats_json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer a loop invariant for one annotated loop file.
    Infer {
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run every .loop file in a directory over several seeds.
    Corpus {
        dir: PathBuf,
        /// Seeded runs per example (seeds seed..seed+runs-1).
        #[arg(long, default_value_t = 1)]
        runs: u64,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

fn engine_config(opts: &CommonOpts) -> Result<EngineConfig, String> {
    let backend = match opts.solver.as_str() {
        "builtin" => Backend::Builtin,
        "external" => match &opts.solver_cmd {
            Some(cmd) => Backend::External(cmd.clone()),
            None => return Err("--solver external requires --solver-cmd".into()),
        },
        other => return Err(format!("unknown solver backend `{other}`")),
    };
    Ok(EngineConfig {
        seed: opts.seed,
        max_restarts: opts.max_restarts,
        timeout_s: opts.timeout,
        solver: SolverConfig { backend, query_timeout_ms: 30_000 },
        dnf_cap: opts.dnf_cap,
        trace: opts.trace.clone(),
    })
}

fn write_stats(path: &Option<PathBuf>, records: &[StatsRecord]) -> std::io::Result<()> {
    if let Some(p) = path {
        let json = if records.len() == 1 {
            serde_json::to_string_pretty(&records[0]).expect("serializable")
        } else {
            serde_json::to_string_pretty(records).expect("serializable")
        };
        std::fs::write(p, json)?;
    }
    Ok(())
}

fn summarize(name: &str, results: &[crate::engine::InferenceResult]) {
    let ok = results
        .iter()
        .filter(|r| matches!(r.outcome, Outcome::Invariant(_)))
        .count();
    let agg = |f: &dyn Fn(&crate::engine::InferenceResult) -> u128| -> (u128, u128, u128) {
        let vals: Vec<u128> = results.iter().map(f).collect();
        let min = vals.iter().min().copied().unwrap_or(0);
        let max = vals.iter().max().copied().unwrap_or(0);
        let mean = if vals.is_empty() { 0 } else { vals.iter().sum::<u128>() / vals.len() as u128 };
        (mean, min, max)
    };
    let mem = agg(&|r| r.stats.mem as u128);
    let eq = agg(&|r| r.stats.eq as u128);
    let re = agg(&|r| r.stats.re as u128);
    let t = agg(&|r| r.stats.time_ms);
    println!(
        "{name}: {ok}/{} invariant | MEM {} ({}..{}) | EQ {} ({}..{}) | RE {} ({}..{}) | time {} ms ({}..{})",
        results.len(),
        mem.0, mem.1, mem.2,
        eq.0, eq.1, eq.2,
        re.0, re.1, re.2,
        t.0, t.1, t.2
    );
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // Usage errors exit 1; --help/--version print and exit 0.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Infer { file, opts } => {
            let cfg = match engine_config(&opts) {
                Ok(c) => c,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return 1;
                }
            };
            let result = match infer_path(&file, &cfg) {
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
                Ok(Err(parse_err)) => {
                    eprintln!("{}: {parse_err}", file.display());
                    return 1;
                }
                Ok(Ok(r)) => r,
            };
            let name = file
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default();
            let record = StatsRecord::new(&name, &result);
            if let Err(e) = write_stats(&opts.stats_json, std::slice::from_ref(&record)) {
                eprintln!("error writing stats: {e}");
                return 1;
            }
            match &result.outcome {
                Outcome::Invariant(f) => {
                    println!("invariant: {f}");
                    println!(
                        "P={} MEM={} EQ={} RE={} time={}ms",
                        result.stats.p,
                        result.stats.mem,
                        result.stats.eq,
                        result.stats.re,
                        result.stats.time_ms
                    );
                    0
                }
                Outcome::Timeout => {
                    println!("timeout after {}ms", result.stats.time_ms);
                    2
                }
                Outcome::NoInvariantPossible => {
                    println!("no invariant possible: the precondition reaches states outside every candidate");
                    3
                }
            }
        }
        Command::Corpus { dir, runs, opts } => {
            let cfg = match engine_config(&opts) {
                Ok(c) => c,
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return 1;
                }
            };
            let entries = match run_corpus(&[dir], runs, &cfg) {
                Ok(es) => es,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            let mut records = Vec::new();
            for entry in &entries {
                match entry {
                    CorpusEntry::ParseError { example, error } => {
                        println!("{example}: parse error: {error}");
                    }
                    CorpusEntry::Runs { example, results } => {
                        summarize(example, results);
                        for r in results {
                            records.push(StatsRecord::new(example, r));
                        }
                    }
                }
            }
            if let Err(e) = write_stats(&opts.stats_json, &records) {
                eprintln!("error writing stats: {e}");
                return 1;
            }
            0
        }
    }
}
