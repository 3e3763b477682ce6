//! A kernel for second-order functions and theorems over a small
//! first-order term language.
//!
//! Function variables stand for arbitrary functions of fixed arity.
//! Second-order functions are defined in terms of them, instantiated by
//! replacing function variables with functions, and theorems over them are
//! instantiated likewise, with the constraints of every replaced function
//! checked against its replacement.

pub mod cli;
pub mod error;
pub mod eval;
pub mod events;
pub mod instantiate;
pub mod kernel;
pub mod refine;
pub mod registry;
pub mod sexpr;
pub mod symbol;

pub use error::{Error, Result};
pub use symbol::Symbol;
