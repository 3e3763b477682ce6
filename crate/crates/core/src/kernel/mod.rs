//! The term language and the function-variable dependency computation.

mod term;
mod value;

use std::collections::BTreeSet;

use thiserror::Error;

pub(crate) use term::parse_bound_vars;
pub use term::{Quantifier, Term, TermError};
pub use value::Value;

use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
    Between(usize, usize),
}

impl Arity {
    pub fn admits(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
            Arity::Between(lo, hi) => (lo..=hi).contains(&n),
        }
    }

    /// The fixed arity, if there is one; only fixed-arity functions may
    /// replace function variables.
    pub fn fixed(self) -> Option<usize> {
        match self {
            Arity::Exactly(k) => Some(k),
            _ => None,
        }
    }
}

impl std::fmt::Display for Arity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Arity::Exactly(k) => write!(f, "{k}"),
            Arity::AtLeast(k) => write!(f, "{k}+"),
            Arity::Between(lo, hi) => write!(f, "{lo}..{hi}"),
        }
    }
}

/// Executable primitives available in every session.
pub const BUILTINS: &[(&str, Arity)] = &[
    ("cons", Arity::Exactly(2)),
    ("car", Arity::Exactly(1)),
    ("cdr", Arity::Exactly(1)),
    ("atom", Arity::Exactly(1)),
    ("consp", Arity::Exactly(1)),
    ("listp", Arity::Exactly(1)),
    ("endp", Arity::Exactly(1)),
    ("null", Arity::Exactly(1)),
    ("not", Arity::Exactly(1)),
    ("equal", Arity::Exactly(2)),
    ("eql", Arity::Exactly(2)),
    ("list", Arity::AtLeast(0)),
    ("member", Arity::Exactly(2)),
    ("append", Arity::Exactly(2)),
    ("len", Arity::Exactly(1)),
    ("true-listp", Arity::Exactly(1)),
    ("acl2-count", Arity::Exactly(1)),
    ("mv-nth", Arity::Exactly(2)),
    ("natp", Arity::Exactly(1)),
    ("integerp", Arity::Exactly(1)),
    ("zp", Arity::Exactly(1)),
    ("symbolp", Arity::Exactly(1)),
    ("characterp", Arity::Exactly(1)),
    ("stringp", Arity::Exactly(1)),
    ("fix", Arity::Exactly(1)),
    ("nfix", Arity::Exactly(1)),
    ("binary-+", Arity::Exactly(2)),
    ("binary-*", Arity::Exactly(2)),
    ("+", Arity::AtLeast(0)),
    ("*", Arity::AtLeast(0)),
    ("-", Arity::Between(1, 2)),
    ("<", Arity::Exactly(2)),
    (">", Arity::Exactly(2)),
    ("<=", Arity::Exactly(2)),
    (">=", Arity::Exactly(2)),
    ("code-char", Arity::Exactly(1)),
    ("char-code", Arity::Exactly(1)),
];

pub fn builtin_arity(name: &str) -> Option<Arity> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

/// What an applied name refers to.
#[derive(Debug, Clone, Copy)]
pub enum Callee<'a> {
    Builtin(Arity),
    FunVar { arity: usize },
    Function { arity: usize, fparams: &'a [Symbol] },
}

impl Callee<'_> {
    pub fn arity(&self) -> Arity {
        match self {
            Callee::Builtin(a) => *a,
            Callee::FunVar { arity } | Callee::Function { arity, .. } => Arity::Exactly(*arity),
        }
    }
}

/// Name resolution for applied function symbols.
pub trait Signatures {
    fn callee(&self, name: &Symbol) -> Option<Callee<'_>>;
}

/// Resolves one not-yet-registered function (e.g. a recursive definition
/// under construction) before deferring to an underlying table.
pub struct WithPending<'a, S: ?Sized> {
    pub inner: &'a S,
    pub name: &'a Symbol,
    pub arity: usize,
    pub fparams: &'a [Symbol],
}

impl<S: Signatures + ?Sized> Signatures for WithPending<'_, S> {
    fn callee(&self, name: &Symbol) -> Option<Callee<'_>> {
        if name == self.name {
            Some(Callee::Function {
                arity: self.arity,
                fparams: self.fparams,
            })
        } else {
            self.inner.callee(name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("unknown function `{0}`")]
    UnknownFunction(Symbol),
    #[error("arity error: `{name}` expects {expected} argument(s), given {actual}")]
    ArityError {
        name: Symbol,
        expected: Arity,
        actual: usize,
    },
}

/// The function variables a term depends on: those applied in it, plus the
/// declared function parameters of every second-order function applied in
/// it. Bodies of referenced functions are not entered.
pub fn funvars_of_term(term: &Term, sigs: &(impl Signatures + ?Sized)) -> Result<BTreeSet<Symbol>, KernelError> {
    let mut out = BTreeSet::new();
    let mut err = None;
    term.walk(&mut |t| {
        let Term::App(name, _) = t else { return };
        if err.is_some() {
            return;
        }
        match sigs.callee(name) {
            None => err = Some(KernelError::UnknownFunction(name.clone())),
            Some(Callee::FunVar { .. }) => {
                out.insert(name.clone());
            }
            Some(Callee::Function { fparams, .. }) => out.extend(fparams.iter().cloned()),
            Some(Callee::Builtin(_)) => {}
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Checks that every application supplies the registered number of
/// arguments.
pub fn check_arities(term: &Term, sigs: &(impl Signatures + ?Sized)) -> Result<(), KernelError> {
    let mut result = Ok(());
    term.walk(&mut |t| {
        let Term::App(name, args) = t else { return };
        if result.is_err() {
            return;
        }
        result = match sigs.callee(name) {
            None => Err(KernelError::UnknownFunction(name.clone())),
            Some(c) if !c.arity().admits(args.len()) => Err(KernelError::ArityError {
                name: name.clone(),
                expected: c.arity(),
                actual: args.len(),
            }),
            Some(_) => Ok(()),
        };
    });
    result
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::sexpr::read_form;

    struct Table {
        funvars: BTreeMap<Symbol, usize>,
        functions: BTreeMap<Symbol, (usize, Vec<Symbol>)>,
    }

    impl Signatures for Table {
        fn callee(&self, name: &Symbol) -> Option<Callee<'_>> {
            if let Some(&arity) = self.funvars.get(name) {
                return Some(Callee::FunVar { arity });
            }
            if let Some((arity, fparams)) = self.functions.get(name) {
                return Some(Callee::Function { arity: *arity, fparams });
            }
            builtin_arity(name.as_str()).map(Callee::Builtin)
        }
    }

    fn table() -> Table {
        Table {
            funvars: BTreeMap::from([("?f".into(), 1), ("?g".into(), 2), ("?p".into(), 1)]),
            functions: BTreeMap::from([
                ("quad[?f]".into(), (1, vec!["?f".into()])),
                ("wrap".into(), (1, vec![])),
            ]),
        }
    }

    fn term(text: &str) -> Term {
        Term::from_form(&read_form(text).unwrap()).unwrap()
    }

    fn names(items: &[&str]) -> BTreeSet<Symbol> {
        items.iter().map(|s| Symbol::from(*s)).collect()
    }

    #[test]
    fn funvars_of_nested_application() {
        let t = term("(?f (?f (?f (?f x))))");
        assert_eq!(funvars_of_term(&t, &table()).unwrap(), names(&["?f"]));
    }

    #[test]
    fn funvars_include_declared_parameters_of_sofuns() {
        let t = term("(cons (wrap x) (quad[?f] y))");
        assert_eq!(funvars_of_term(&t, &table()).unwrap(), names(&["?f"]));
    }

    #[test]
    fn funvars_empty_for_first_order_terms() {
        assert!(funvars_of_term(&term("(len l)"), &table()).unwrap().is_empty());
    }

    #[test]
    fn quoted_symbols_do_not_count() {
        assert!(funvars_of_term(&term("(cons '?f '(?g x))"), &table())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn funvars_traverse_special_forms() {
        let t = term("(forall (x y) (implies (?p x) (cond ((?g x y) t) (t nil))))");
        assert_eq!(funvars_of_term(&t, &table()).unwrap(), names(&["?g", "?p"]));
    }

    #[test]
    fn funvars_unknown_function() {
        assert_eq!(
            funvars_of_term(&term("(mystery x)"), &table()),
            Err(KernelError::UnknownFunction("mystery".into()))
        );
    }

    #[test]
    fn arity_checks() {
        assert!(check_arities(&term("(?g x y)"), &table()).is_ok());
        assert_eq!(
            check_arities(&term("(?g x)"), &table()),
            Err(KernelError::ArityError {
                name: "?g".into(),
                expected: Arity::Exactly(2),
                actual: 1
            })
        );
        assert_eq!(
            check_arities(&term("(cons x)"), &table()),
            Err(KernelError::ArityError {
                name: "cons".into(),
                expected: Arity::Exactly(2),
                actual: 1
            })
        );
        assert!(check_arities(&term("(list)"), &table()).is_ok());
        assert!(check_arities(&term("(- 1 2 3)"), &table()).is_err());
    }

    #[test]
    fn pending_definition_resolves_self() {
        let fparams = vec![Symbol::from("?p")];
        let name = Symbol::from("all[?p]");
        let inner = table();
        let sigs = WithPending {
            inner: &inner,
            name: &name,
            arity: 1,
            fparams: &fparams,
        };
        let t = term("(and (?p (car l)) (all[?p] (cdr l)))");
        assert_eq!(funvars_of_term(&t, &sigs).unwrap(), names(&["?p"]));
        assert!(funvars_of_term(&t, &inner).is_err());
    }
}
