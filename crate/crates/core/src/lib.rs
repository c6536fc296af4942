//! Quantifier-free loop invariant inference for annotated loops.
//!
//! The pipeline combines four pieces:
//!
//! * a CDNF exact-learning engine for Boolean formulae ([`learner`]),
//! * a mechanical teacher answering its queries from invariant
//!   approximations and an SMT-style decision procedure ([`teacher`],
//!   [`solver`]),
//! * predicate abstraction relating quantifier-free formulae over atomic
//!   predicates with Boolean formulae over indicator variables
//!   ([`abstraction`]), and
//! * interpolation-based predicate generation that discovers new atomic
//!   predicates on demand ([`interpolate`], [`predgen`]).
//!
//! [`engine`] wires everything into the main inference loop behind the
//! `loopinv` command-line interface.

pub mod abstraction;
pub mod cli;
pub mod engine;
pub mod frontend;
pub mod interpolate;
pub mod learner;
pub mod logic;
pub mod predgen;
pub mod solver;
pub mod teacher;
pub mod verify;
