//! Parsing of annotated loops and their logical encodings.

mod ast;
mod parse;
mod trans;

pub use ast::{AnnotatedLoop, Statement};
pub use parse::{parse, parse_formula, ParseError};
pub use trans::{pre_condition, transition, transition_seq, xi_sequence, FreshGen};
