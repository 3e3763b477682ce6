use std::collections::BTreeSet;

use thiserror::Error;

use crate::eval::Binding;
use crate::instantiate::{Instantiation, ObligationKind};
use crate::kernel::{KernelError, TermError};
use crate::sexpr::SyntaxError;
use crate::symbol::Symbol;

fn show_set(set: &BTreeSet<Symbol>) -> String {
    let items: Vec<&str> = set.iter().map(Symbol::as_str).collect();
    format!("{{{}}}", items.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("name clash: `{name}` is already {existing}")]
    NameClash { name: Symbol, existing: String },
    #[error("invariant violation for `{name}`: {condition}")]
    InvariantViolation { name: Symbol, condition: String },
    #[error("`{name}` is malformed: {message}")]
    MalformedEvent { name: String, message: String },
    #[error(
        "function parameters of `{name}` do not match its dependencies: extra {}, missing {}",
        show_set(extra),
        show_set(missing)
    )]
    FunvarMismatch {
        name: Symbol,
        /// Declared but not depended upon.
        extra: BTreeSet<Symbol>,
        /// Depended upon but not declared.
        missing: BTreeSet<Symbol>,
    },
    #[error("invalid instantiation {sigma}: {message}")]
    InvalidInstantiation { sigma: String, message: String },
    #[error(
        "missing instance: no instance of `{sofun}` for {sigma}; introduce it with \
         (defun-inst <name> ({sofun} {pairs})) and then re-try",
        pairs = sigma.pairs_text()
    )]
    MissingInstance { sofun: Symbol, sigma: Instantiation },
    #[error("`{sofun}` already has instance `{existing}` for {sigma}")]
    InstanceClash {
        sofun: Symbol,
        sigma: Instantiation,
        existing: Symbol,
    },
    #[error("`{0}` is not a second-order function")]
    NotSecondOrder(Symbol),
    #[error("unknown theorem `{0}`")]
    UnknownTheorem(Symbol),
    #[error("obligation failed: `{replacement}` does not satisfy the {kind} of `{replaced}`")]
    ObligationFailed {
        replaced: Symbol,
        replacement: Symbol,
        kind: ObligationKind,
    },
    #[error("bounded check failed for `{name}`: counterexample {counterexample}")]
    BoundedCheckFailed { name: Symbol, counterexample: Binding },
    #[error("chain step {step}: expected {expected}, found {found}")]
    ChainShapeError {
        step: usize,
        expected: String,
        found: String,
    },
    #[error("refinement chain `{chain}` is incomplete: {message}")]
    ChainIncomplete { chain: Symbol, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
