//! Parsed program representation: statements and annotated loops.

use crate::logic::{Formula, Sort, Term, Var};
use std::fmt;

/// A single statement of the loop body language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Nop,
    /// `x := e` for a rational-sorted variable.
    AssignRat(Var, Term),
    /// `x := p` for a Boolean-sorted variable.
    AssignBool(Var, Formula),
    /// `x := nondet`.
    Havoc(Var),
    If(Formula, Vec<Statement>, Vec<Statement>),
    Assume(Formula),
}

/// `{δ} while (κ) { S₁; …; S_m } {ε}` with variable declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedLoop {
    /// Declarations in source order; drives `Γ` domains and frame conditions.
    pub decls: Vec<(String, Sort)>,
    pub pre: Formula,
    pub guard: Formula,
    pub body: Vec<Statement>,
    pub post: Formula,
}

impl AnnotatedLoop {
    pub fn var_sort(&self, name: &str) -> Option<Sort> {
        self.decls
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| *s)
    }

    pub fn var_names(&self) -> impl Iterator<Item = &str> {
        self.decls.iter().map(|(n, _)| n.as_str())
    }
}

fn fmt_stmts(stmts: &[Statement], indent: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for s in stmts {
        fmt_stmt(s, indent, f)?;
    }
    Ok(())
}

fn fmt_stmt(s: &Statement, indent: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let pad = "  ".repeat(indent);
    match s {
        Statement::Nop => writeln!(f, "{pad}nop;"),
        Statement::AssignRat(v, e) => writeln!(f, "{pad}{v} := {e};"),
        Statement::AssignBool(v, p) => writeln!(f, "{pad}{v} := {p};"),
        Statement::Havoc(v) => writeln!(f, "{pad}{v} := nondet;"),
        Statement::If(cond, then_b, else_b) => {
            writeln!(f, "{pad}if ({cond}) {{")?;
            fmt_stmts(then_b, indent + 1, f)?;
            if else_b.is_empty() {
                writeln!(f, "{pad}}};")
            } else {
                writeln!(f, "{pad}}} else {{")?;
                fmt_stmts(else_b, indent + 1, f)?;
                writeln!(f, "{pad}}};")
            }
        }
        Statement::Assume(p) => writeln!(f, "{pad}assume ({p});"),
    }
}

impl fmt::Display for AnnotatedLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // One decl line per run of consecutive same-sort declarations, so
        // declaration order survives a print/parse round trip.
        let mut i = 0;
        while i < self.decls.len() {
            let sort = self.decls[i].1;
            let mut names = vec![self.decls[i].0.as_str()];
            let mut j = i + 1;
            while j < self.decls.len() && self.decls[j].1 == sort {
                names.push(self.decls[j].0.as_str());
                j += 1;
            }
            let kw = match sort {
                Sort::Rat => "rat",
                Sort::Bool => "bool",
            };
            writeln!(f, "{} {};", kw, names.join(", "))?;
            i = j;
        }
        writeln!(f, "pre {{ {} }}", self.pre)?;
        writeln!(f, "while ({}) {{", self.guard)?;
        fmt_stmts(&self.body, 1, f)?;
        writeln!(f, "}}")?;
        writeln!(f, "post {{ {} }}", self.post)
    }
}
