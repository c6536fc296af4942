//! SMT-LIB2 process client for the optional external backend.
//!
//! Spawns the configured command, writes a `QF_LRA` script (Booleans as
//! `Bool` constants, rationals as `Real`), reads the `sat`/`unsat` verdict
//! and, when sat, parses the `(get-model)` s-expressions back into a
//! valuation. Disabled by default; the builtin solver needs no process.

use crate::logic::{Formula, Rational, RelOp, Sort, Term, Value, Valuation, Var};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::time::Instant;

use super::{SatResult, SolverError};

/// SMT-LIB2 identifiers for our variables. Superscripts and the `%` fresh
/// prefix are encoded with `|...|` quoting when needed.
fn smt_name(v: &Var) -> String {
    let base = match v.index {
        None => v.name.clone(),
        Some(k) => format!("{}@{}", v.name, k),
    };
    if base.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') && !base.starts_with(|c: char| c.is_ascii_digit()) {
        base
    } else {
        format!("|{}|", base)
    }
}

fn smt_rational(r: &Rational) -> String {
    let neg = r.is_negative();
    let abs = r.abs();
    let core = if abs.is_integer() {
        format!("{}.0", abs.numer())
    } else {
        format!("(/ {} {})", abs.numer(), abs.denom())
    };
    if neg {
        format!("(- {})", core)
    } else {
        core
    }
}

fn smt_term(t: &Term, out: &mut String) {
    match t {
        Term::Const(c) => out.push_str(&smt_rational(c)),
        Term::Var(v) => out.push_str(&smt_name(v)),
        Term::Add(a, b) => {
            out.push_str("(+ ");
            smt_term(a, out);
            out.push(' ');
            smt_term(b, out);
            out.push(')');
        }
        Term::Sub(a, b) => {
            out.push_str("(- ");
            smt_term(a, out);
            out.push(' ');
            smt_term(b, out);
            out.push(')');
        }
        Term::Mul(c, t) => {
            out.push_str("(* ");
            out.push_str(&smt_rational(c));
            out.push(' ');
            smt_term(t, out);
            out.push(')');
        }
    }
}

fn smt_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::BoolVar(v) => out.push_str(&smt_name(v)),
        Formula::Not(g) => {
            out.push_str("(not ");
            smt_formula(g, out);
            out.push(')');
        }
        Formula::And(gs) | Formula::Or(gs) => {
            out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
            for g in gs {
                out.push(' ');
                smt_formula(g, out);
            }
            out.push(')');
        }
        Formula::Cmp(op, a, b) => {
            let o = match op {
                RelOp::Lt => "<",
                RelOp::Le => "<=",
                RelOp::Eq => "=",
            };
            out.push_str("(");
            out.push_str(o);
            out.push(' ');
            smt_term(a, out);
            out.push(' ');
            smt_term(b, out);
            out.push(')');
        }
    }
}

/// Infer per-variable sorts from positions of use.
fn infer_sorts(f: &Formula, out: &mut BTreeMap<Var, Sort>) {
    fn term(t: &Term, out: &mut BTreeMap<Var, Sort>) {
        match t {
            Term::Const(_) => {}
            Term::Var(v) => {
                out.insert(v.clone(), Sort::Rat);
            }
            Term::Add(a, b) | Term::Sub(a, b) => {
                term(a, out);
                term(b, out);
            }
            Term::Mul(_, t) => term(t, out),
        }
    }
    match f {
        Formula::True | Formula::False => {}
        Formula::BoolVar(v) => {
            out.insert(v.clone(), Sort::Bool);
        }
        Formula::Not(g) => infer_sorts(g, out),
        Formula::And(gs) | Formula::Or(gs) => {
            for g in gs {
                infer_sorts(g, out);
            }
        }
        Formula::Cmp(_, a, b) => {
            term(a, out);
            term(b, out);
        }
    }
}

/// Render the full query script (without `(get-model)`).
pub fn script(phi: &Formula) -> String {
    let mut sorts = BTreeMap::new();
    infer_sorts(phi, &mut sorts);
    let mut out = String::new();
    out.push_str("(set-option :print-success false)\n(set-logic QF_LRA)\n");
    for (v, s) in &sorts {
        let sort = match s {
            Sort::Rat => "Real",
            Sort::Bool => "Bool",
        };
        out.push_str(&format!("(declare-const {} {})\n", smt_name(v), sort));
    }
    out.push_str("(assert ");
    smt_formula(phi, &mut out);
    out.push_str(")\n(check-sat)\n");
    out
}

// ---------------------------------------------------------------------------
// S-expression reading for (get-model) output
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, SolverError> {
    let mut toks: Vec<String> = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => toks.push("(".into()),
            ')' => toks.push(")".into()),
            '|' => {
                let mut s = String::new();
                for d in chars.by_ref() {
                    if d == '|' {
                        break;
                    }
                    s.push(d);
                }
                toks.push(s);
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                toks.push(s);
            }
        }
    }
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in toks {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack
                    .pop()
                    .ok_or_else(|| SolverError::External("unbalanced )".into()))?;
                stack
                    .last_mut()
                    .ok_or_else(|| SolverError::External("unbalanced )".into()))?
                    .push(Sexp::List(done));
            }
            _ => stack.last_mut().unwrap().push(Sexp::Atom(t)),
        }
    }
    if stack.len() != 1 {
        return Err(SolverError::External("unbalanced (".into()));
    }
    Ok(stack.pop().unwrap())
}

fn parse_value(s: &Sexp) -> Result<Value, SolverError> {
    match s {
        Sexp::Atom(a) => match a.as_str() {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            other => parse_numeral(other).map(Value::Rat),
        },
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), inner] if op == "-" => match parse_value(inner)? {
                Value::Rat(r) => Ok(Value::Rat(-r)),
                Value::Bool(_) => Err(SolverError::External("negated boolean".into())),
            },
            [Sexp::Atom(op), a, b] if op == "/" => {
                let num = match parse_value(a)? {
                    Value::Rat(r) => r,
                    _ => return Err(SolverError::External("bad numerator".into())),
                };
                let den = match parse_value(b)? {
                    Value::Rat(r) => r,
                    _ => return Err(SolverError::External("bad denominator".into())),
                };
                Ok(Value::Rat(num / den))
            }
            _ => Err(SolverError::External(format!("unrecognized model value: {s:?}"))),
        },
    }
}

fn parse_numeral(text: &str) -> Result<Rational, SolverError> {
    if let Some((int_part, frac_part)) = text.split_once('.') {
        let digits = format!("{int_part}{frac_part}");
        let num: BigInt = digits
            .parse()
            .map_err(|_| SolverError::External(format!("bad numeral {text}")))?;
        let mut den = BigInt::one();
        for _ in 0..frac_part.len() {
            den *= 10;
        }
        return Ok(Rational::new(num, den));
    }
    let num: BigInt = text
        .parse()
        .map_err(|_| SolverError::External(format!("bad numeral {text}")))?;
    Ok(Rational::from_integer(num))
}

fn decode_name(name: &str) -> Var {
    match name.rsplit_once('@') {
        Some((base, idx)) => match idx.parse::<u32>() {
            Ok(k) => Var::indexed(base, k),
            Err(_) => Var::plain(name),
        },
        None => Var::plain(name),
    }
}

/// Parse `(get-model)` output into a valuation.
pub fn parse_model(text: &str) -> Result<Valuation, SolverError> {
    let sexps = parse_sexps(text)?;
    let mut model = Valuation::new();
    let entries: &[Sexp] = match sexps.as_slice() {
        [Sexp::List(items)] => items,
        other => {
            return Err(SolverError::External(format!("unrecognized model shape: {other:?}")))
        }
    };
    for e in entries {
        if let Sexp::List(parts) = e {
            // (define-fun x () Real 1.0) — ignore the "model" header atom.
            if let [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(args), _sort, value] =
                parts.as_slice()
            {
                if kw == "define-fun" && args.is_empty() {
                    model.set(decode_name(name), parse_value(value)?);
                }
            }
        }
    }
    Ok(model)
}

fn wait_line(
    reader: &mut BufReader<&mut std::process::ChildStdout>,
    deadline: Instant,
) -> Result<String, SolverError> {
    // Blocking read; the deadline is best-effort (checked after the read).
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| SolverError::External(format!("read: {e}")))?;
    if n == 0 {
        return Err(SolverError::External("external solver closed its output".into()));
    }
    if Instant::now() > deadline {
        return Err(SolverError::Timeout);
    }
    Ok(line.trim().to_string())
}

fn spawn(cmd_template: &str) -> Result<Child, SolverError> {
    let parts: Vec<&str> = cmd_template.split_whitespace().collect();
    let (prog, args) = parts
        .split_first()
        .ok_or_else(|| SolverError::External("empty solver command".into()))?;
    Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolverError::External(format!("spawn {prog}: {e}")))
}

/// One-shot external query: write script, read verdict, fetch model if sat.
pub fn check_sat_external(
    cmd_template: &str,
    phi: &Formula,
    deadline: Instant,
) -> Result<SatResult, SolverError> {
    let mut child = spawn(cmd_template)?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut reader = BufReader::new(&mut stdout);
    let q = script(phi);
    stdin
        .write_all(q.as_bytes())
        .map_err(|e| SolverError::External(format!("write: {e}")))?;
    stdin.flush().ok();
    let verdict = wait_line(&mut reader, deadline)?;
    let result = match verdict.as_str() {
        "unsat" => {
            drop(stdin);
            Ok(SatResult::Unsat { core: None })
        }
        "sat" => {
            stdin
                .write_all(b"(get-model)\n(exit)\n")
                .map_err(|e| SolverError::External(format!("write: {e}")))?;
            stdin.flush().ok();
            drop(stdin);
            let mut rest = String::new();
            use std::io::Read;
            reader
                .read_to_string(&mut rest)
                .map_err(|e| SolverError::External(format!("read: {e}")))?;
            let model = parse_model(&rest)?;
            Ok(SatResult::Sat(model))
        }
        other => Err(SolverError::External(format!("unexpected verdict `{other}`"))),
    };
    let _ = child.kill();
    let _ = child.wait();
    result
}
