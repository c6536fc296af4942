//! Display impls producing the concrete syntax the frontend parses.
//!
//! Printing is structure-preserving: sub-expressions that would re-associate
//! under the left-associative grammar are parenthesized, so `parse ∘ print`
//! is the identity on ASTs.

use super::{Formula, RelOp, Term, Var};
use std::fmt;

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            None => write!(f, "{}", self.name),
            Some(k) => write!(f, "{}@{}", self.name, k),
        }
    }
}

fn fmt_term(t: &Term, parent_right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Const(c) => {
            if c.is_integer() {
                write!(f, "{}", c.numer())
            } else {
                // Non-integer constants only occur in internal diagnostics.
                write!(f, "{}", c)
            }
        }
        Term::Var(v) => write!(f, "{}", v),
        Term::Mul(c, t) => {
            if c.is_integer() {
                write!(f, "{}", c.numer())?;
            } else {
                write!(f, "{}", c)?;
            }
            write!(f, " * ")?;
            match &**t {
                Term::Const(_) | Term::Var(_) => fmt_term(t, false, f),
                _ => {
                    write!(f, "(")?;
                    fmt_term(t, false, f)?;
                    write!(f, ")")
                }
            }
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            let op = if matches!(t, Term::Add(..)) { "+" } else { "-" };
            let need_parens = parent_right;
            if need_parens {
                write!(f, "(")?;
            }
            fmt_term(a, false, f)?;
            write!(f, " {} ", op)?;
            fmt_term(b, true, f)?;
            if need_parens {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, false, f)
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "=",
        };
        write!(f, "{}", s)
    }
}

// Precedence levels: Or = 1, And = 2, Not/atoms = 3.
fn prec(phi: &Formula) -> u8 {
    match phi {
        Formula::Or(_) => 1,
        Formula::And(_) => 2,
        _ => 3,
    }
}

fn fmt_formula(phi: &Formula, min_prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec(phi);
    let need_parens = p < min_prec;
    if need_parens {
        write!(f, "(")?;
    }
    match phi {
        Formula::True => write!(f, "true")?,
        Formula::False => write!(f, "false")?,
        Formula::BoolVar(v) => write!(f, "{}", v)?,
        Formula::Not(g) => {
            write!(f, "!")?;
            // Operand of ! must be atomic or parenthesized.
            match g.as_ref() {
                Formula::True | Formula::False | Formula::BoolVar(_) | Formula::Not(_) => {
                    fmt_formula(g, 3, f)?
                }
                _ => {
                    write!(f, "(")?;
                    fmt_formula(g, 0, f)?;
                    write!(f, ")")?;
                }
            }
        }
        Formula::And(gs) => {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    write!(f, " && ")?;
                }
                fmt_formula(g, 3, f)?;
            }
        }
        Formula::Or(gs) => {
            for (i, g) in gs.iter().enumerate() {
                if i > 0 {
                    write!(f, " || ")?;
                }
                fmt_formula(g, 2, f)?;
            }
        }
        Formula::Cmp(op, a, b) => {
            write!(f, "{} {} {}", a, op, b)?;
        }
    }
    if need_parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(self, 0, f)
    }
}
