//! Recursive-descent parser for annotated loop files.
//!
//! ```text
//! file    := decl* "pre" "{" bexp "}" "while" "(" bexp ")" "{" stmts "}" "post" "{" bexp "}"
//! decl    := ("rat" | "bool") ident ("," ident)* ";"
//! stmts   := (stmt ";")*
//! stmt    := "nop" | ident ":=" (exp | bexp | "nondet")
//!          | "if" "(" bexp ")" "{" stmts "}" ("else" "{" stmts "}")?
//!          | "assume" "(" bexp ")"
//! exp     := int | ident | exp "+" exp | exp "-" exp | "(" exp ")"
//! bexp    := "true" | "false" | ident | "!" bexp | bexp "&&" bexp
//!          | bexp "||" bexp | exp ("<"|"<="|"="|">"|">=") exp | "(" bexp ")"
//! ```
//!
//! `||`, `>` and `>=` desugar to the core connectives (`>`/`>=` by mirroring
//! the comparison). Comments run from `//` to end of line. Parsing is
//! sort-directed: an identifier in Boolean position must be declared `bool`,
//! so the `exp`/`bexp` overlap resolves without unbounded lookahead.

use super::ast::{AnnotatedLoop, Statement};
use crate::logic::{Formula, RelOp, Sort, Term, Var};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(s) => write!(f, "integer `{s}`"),
            Tok::Kw(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "pre", "while", "post", "rat", "bool", "nop", "nondet", "if", "else", "assume", "true",
    "false",
];

struct Lexer {
    toks: Vec<(Tok, u32, u32)>,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let mut toks = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut chars = text.chars().peekable();
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }
    loop {
        let (l0, c0) = (line, col);
        let c = match chars.peek().copied() {
            None => break,
            Some(c) => c,
        };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' {
            bump!();
            if chars.peek() == Some(&'/') {
                while let Some(&d) = chars.peek() {
                    if d == '\n' {
                        break;
                    }
                    bump!();
                }
                continue;
            }
            return Err(ParseError { line: l0, col: c0, msg: "unexpected `/`".into() });
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_alphanumeric() || d == '_' {
                    s.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            let tok = match KEYWORDS.iter().find(|k| **k == s) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(s),
            };
            toks.push((tok, l0, c0));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() {
                    s.push(d);
                    bump!();
                } else {
                    break;
                }
            }
            toks.push((Tok::Int(s), l0, c0));
            continue;
        }
        bump!();
        let two = |second: char, chars: &mut std::iter::Peekable<std::str::Chars>| {
            chars.peek() == Some(&second)
        };
        let sym: &'static str = match c {
            '{' => "{",
            '}' => "}",
            '(' => "(",
            ')' => ")",
            ';' => ";",
            ',' => ",",
            '+' => "+",
            '-' => "-",
            '*' => "*",
            '=' => "=",
            '!' => "!",
            '<' => {
                if two('=', &mut chars) {
                    bump!();
                    "<="
                } else {
                    "<"
                }
            }
            '>' => {
                if two('=', &mut chars) {
                    bump!();
                    ">="
                } else {
                    ">"
                }
            }
            ':' => {
                if two('=', &mut chars) {
                    bump!();
                    ":="
                } else {
                    return Err(ParseError { line: l0, col: c0, msg: "expected `:=`".into() });
                }
            }
            '&' => {
                if two('&', &mut chars) {
                    bump!();
                    "&&"
                } else {
                    return Err(ParseError { line: l0, col: c0, msg: "expected `&&`".into() });
                }
            }
            '|' => {
                if two('|', &mut chars) {
                    bump!();
                    "||"
                } else {
                    return Err(ParseError { line: l0, col: c0, msg: "expected `||`".into() });
                }
            }
            other => {
                return Err(ParseError {
                    line: l0,
                    col: c0,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        };
        toks.push((Tok::Sym(sym), l0, c0));
    }
    toks.push((Tok::Eof, line, col));
    Ok(Lexer { toks })
}

struct Parser {
    toks: Vec<(Tok, u32, u32)>,
    pos: usize,
    sorts: BTreeMap<String, Sort>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (u32, u32) {
        let (_, l, c) = &self.toks[self.pos];
        (*l, *c)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Sym(t) if *t == s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn eat_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if matches!(self.peek(), Tok::Kw(k) if *k == s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Kw(t) if *t == s)
    }

    fn sort_of(&self, name: &str) -> Result<Sort, ParseError> {
        match self.sorts.get(name) {
            Some(s) => Ok(*s),
            None => self.err(format!("undeclared variable `{name}`")),
        }
    }

    // exp := term ("+" term | "-" term)*   with term := int | ident | "(" exp ")"
    fn exp(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.exp_primary()?;
        loop {
            if self.is_sym("+") {
                self.bump();
                acc = acc.add(self.exp_primary()?);
            } else if self.is_sym("-") {
                self.bump();
                acc = acc.sub(self.exp_primary()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn exp_primary(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Int(s) => {
                self.bump();
                let n: num_bigint::BigInt = match s.parse() {
                    Ok(n) => n,
                    Err(_) => return self.err(format!("bad integer literal `{s}`")),
                };
                let c = crate::logic::Rational::from_integer(n);
                if self.is_sym("*") {
                    self.bump();
                    let t = self.exp_primary()?;
                    return Ok(Term::scaled(c, t));
                }
                Ok(Term::Const(c))
            }
            Tok::Ident(name) => {
                let sort = self.sort_of(&name)?;
                if sort != Sort::Rat {
                    return self.err(format!("variable `{name}` is bool, expected rat"));
                }
                self.bump();
                Ok(Term::Var(Var::plain(name)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.exp()?;
                self.eat_sym(")")?;
                Ok(e)
            }
            t => self.err(format!("expected expression, found {t}")),
        }
    }

    fn relop(&mut self) -> Option<&'static str> {
        for s in ["<=", "<", ">=", ">", "="] {
            if self.is_sym(s) {
                self.bump();
                return Some(s);
            }
        }
        None
    }

    fn comparison(&mut self, lhs: Term) -> Result<Formula, ParseError> {
        let op = match self.relop() {
            Some(op) => op,
            None => return self.err(format!("expected comparison operator, found {}", self.peek())),
        };
        let rhs = self.exp()?;
        // `>` and `>=` mirror into the core `<`/`<=`.
        Ok(match op {
            "<" => Formula::Cmp(RelOp::Lt, lhs, rhs),
            "<=" => Formula::Cmp(RelOp::Le, lhs, rhs),
            "=" => Formula::Cmp(RelOp::Eq, lhs, rhs),
            ">" => Formula::Cmp(RelOp::Lt, rhs, lhs),
            ">=" => Formula::Cmp(RelOp::Le, rhs, lhs),
            _ => unreachable!(),
        })
    }

    // bexp := band ("||" band)*
    fn bexp(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.band()?];
        while self.is_sym("||") {
            self.bump();
            items.push(self.band()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::or(items) })
    }

    // band := bprimary ("&&" bprimary)*
    fn band(&mut self) -> Result<Formula, ParseError> {
        let mut items = vec![self.bprimary()?];
        while self.is_sym("&&") {
            self.bump();
            items.push(self.bprimary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Formula::and(items) })
    }

    fn bprimary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Kw("true") => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Sym("!") => {
                self.bump();
                let inner = self.bprimary()?;
                Ok(inner.not())
            }
            Tok::Ident(name) => {
                match self.sort_of(&name)? {
                    Sort::Bool => {
                        self.bump();
                        Ok(Formula::BoolVar(Var::plain(name)))
                    }
                    // A rat identifier starts an arithmetic comparison.
                    Sort::Rat => {
                        let lhs = self.exp()?;
                        self.comparison(lhs)
                    }
                }
            }
            Tok::Int(_) => {
                let lhs = self.exp()?;
                self.comparison(lhs)
            }
            Tok::Sym("(") => {
                // Either a parenthesized bexp or the parenthesized left side
                // of a comparison; try the arithmetic reading first and
                // backtrack.
                let save = self.pos;
                let arith = (|| -> Result<Formula, ParseError> {
                    let lhs = self.exp()?;
                    self.comparison(lhs)
                })();
                match arith {
                    Ok(f) => Ok(f),
                    Err(_) => {
                        self.pos = save;
                        self.bump(); // (
                        let inner = self.bexp()?;
                        self.eat_sym(")")?;
                        Ok(inner)
                    }
                }
            }
            t => self.err(format!("expected boolean expression, found {t}")),
        }
    }

    fn stmts(&mut self) -> Result<Vec<Statement>, ParseError> {
        let mut out = Vec::new();
        while !self.is_sym("}") {
            let s = self.stmt()?;
            self.eat_sym(";")?;
            out.push(s);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Statement, ParseError> {
        match self.peek().clone() {
            Tok::Kw("nop") => {
                self.bump();
                Ok(Statement::Nop)
            }
            Tok::Kw("if") => {
                self.bump();
                self.eat_sym("(")?;
                let cond = self.bexp()?;
                self.eat_sym(")")?;
                self.eat_sym("{")?;
                let then_b = self.stmts()?;
                self.eat_sym("}")?;
                let else_b = if self.is_kw("else") {
                    self.bump();
                    self.eat_sym("{")?;
                    let b = self.stmts()?;
                    self.eat_sym("}")?;
                    b
                } else {
                    Vec::new()
                };
                Ok(Statement::If(cond, then_b, else_b))
            }
            Tok::Kw("assume") => {
                self.bump();
                self.eat_sym("(")?;
                let cond = self.bexp()?;
                self.eat_sym(")")?;
                Ok(Statement::Assume(cond))
            }
            Tok::Ident(name) => {
                let sort = self.sort_of(&name)?;
                self.bump();
                self.eat_sym(":=")?;
                if self.is_kw("nondet") {
                    self.bump();
                    return Ok(Statement::Havoc(Var::plain(name)));
                }
                match sort {
                    Sort::Rat => Ok(Statement::AssignRat(Var::plain(name), self.exp()?)),
                    Sort::Bool => Ok(Statement::AssignBool(Var::plain(name), self.bexp()?)),
                }
            }
            t => self.err(format!("expected statement, found {t}")),
        }
    }

    fn file(&mut self) -> Result<AnnotatedLoop, ParseError> {
        let mut decls: Vec<(String, Sort)> = Vec::new();
        loop {
            let sort = if self.is_kw("rat") {
                Sort::Rat
            } else if self.is_kw("bool") {
                Sort::Bool
            } else {
                break;
            };
            self.bump();
            loop {
                match self.bump() {
                    Tok::Ident(name) => {
                        if self.sorts.insert(name.clone(), sort).is_some() {
                            self.pos -= 1;
                            return self.err(format!("duplicate declaration of `{name}`"));
                        }
                        decls.push((name, sort));
                    }
                    t => {
                        self.pos -= 1;
                        return self.err(format!("expected identifier, found {t}"));
                    }
                }
                if self.is_sym(",") {
                    self.bump();
                } else {
                    break;
                }
            }
            self.eat_sym(";")?;
        }
        self.eat_kw("pre")?;
        self.eat_sym("{")?;
        let pre = self.bexp()?;
        self.eat_sym("}")?;
        self.eat_kw("while")?;
        self.eat_sym("(")?;
        let guard = self.bexp()?;
        self.eat_sym(")")?;
        self.eat_sym("{")?;
        let body = self.stmts()?;
        if body.is_empty() {
            return self.err("loop body must contain at least one statement");
        }
        self.eat_sym("}")?;
        self.eat_kw("post")?;
        self.eat_sym("{")?;
        let post = self.bexp()?;
        self.eat_sym("}")?;
        if self.peek() != &Tok::Eof {
            return self.err(format!("trailing input: {}", self.peek()));
        }
        Ok(AnnotatedLoop { decls, pre, guard, body, post })
    }
}

/// Parse an annotated loop from source text.
pub fn parse(text: &str) -> Result<AnnotatedLoop, ParseError> {
    let lexer = lex(text)?;
    let mut p = Parser { toks: lexer.toks, pos: 0, sorts: BTreeMap::new() };
    p.file()
}

/// Parse a bare formula over the loop's declared variables (used by the CLI
/// and tests to read candidate invariants).
pub fn parse_formula(text: &str, decls: &[(String, Sort)]) -> Result<Formula, ParseError> {
    let lexer = lex(text)?;
    let mut p = Parser {
        toks: lexer.toks,
        pos: 0,
        sorts: decls.iter().map(|(n, s)| (n.clone(), *s)).collect(),
    };
    let f = p.bexp()?;
    if p.peek() != &Tok::Eof {
        return p.err(format!("trailing input: {}", p.peek()));
    }
    Ok(f)
}
