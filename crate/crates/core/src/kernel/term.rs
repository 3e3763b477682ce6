use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::value::Value;
use crate::sexpr::{write_form, Form, FormKind, Location};
use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }
}

/// An immutable term. `and`, `or`, `if`, `cond`, `implies`, `iff` and the
/// quantifiers are structural; every other head is a function application.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Symbol),
    Const(Value),
    App(Symbol, Vec<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Cond(Vec<(Term, Term)>),
    Implies(Box<Term>, Box<Term>),
    Iff(Box<Term>, Box<Term>),
    Quant(Quantifier, Vec<Symbol>, Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed term at {location}: {message} in `{form}`")]
pub struct TermError {
    pub location: Location,
    pub message: String,
    pub form: String,
}

fn term_error(form: &Form, message: impl Into<String>) -> TermError {
    TermError {
        location: form.location,
        message: message.into(),
        form: write_form(form),
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::canonical(name))
    }

    pub fn app(f: &str, args: Vec<Term>) -> Term {
        Term::App(Symbol::canonical(f), args)
    }

    pub fn t() -> Term {
        Term::Const(Value::t())
    }

    pub fn nil() -> Term {
        Term::Const(Value::nil())
    }

    pub fn equal(a: Term, b: Term) -> Term {
        Term::App(Symbol::new("equal"), vec![a, b])
    }

    pub fn negate(a: Term) -> Term {
        Term::App(Symbol::new("not"), vec![a])
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::Implies(Box::new(a), Box::new(b))
    }

    pub fn is_true_const(&self) -> bool {
        matches!(self, Term::Const(v) if *v == Value::t())
    }

    /// Parses a term. Self-evaluating symbols (`t`, `nil`, keywords),
    /// numbers, characters and strings are constants; other symbols are
    /// variables.
    pub fn from_form(form: &Form) -> Result<Term, TermError> {
        match &form.kind {
            FormKind::Int(n) => Ok(Term::Const(Value::Int(*n))),
            FormKind::Char(_) | FormKind::Str(_) => Ok(Term::Const(Value::from_form(form))),
            FormKind::Symbol(s) if s.is_self_evaluating() => Ok(Term::Const(Value::Sym(s.clone()))),
            FormKind::Symbol(s) => Ok(Term::Var(s.clone())),
            FormKind::Dotted(..) => Err(term_error(form, "dotted pair is not a term")),
            FormKind::List(items) => {
                let Some((head, args)) = items.split_first() else {
                    return Ok(Term::nil());
                };
                let Some(head) = head.as_symbol() else {
                    return Err(term_error(form, "operator must be a symbol"));
                };
                Term::from_application(form, head, args)
            }
        }
    }

    fn from_application(form: &Form, head: &Symbol, args: &[Form]) -> Result<Term, TermError> {
        let exactly = |n: usize| -> Result<Vec<Term>, TermError> {
            if args.len() != n {
                return Err(term_error(form, format!("`{head}` takes {n} arguments")));
            }
            args.iter().map(Term::from_form).collect()
        };
        match head.as_str() {
            "quote" => match args {
                [datum] => Ok(Term::Const(Value::from_form(datum))),
                _ => Err(term_error(form, "`quote` takes one argument")),
            },
            "if" => {
                let [c, a, b]: [Term; 3] = exactly(3)?.try_into().expect("arity checked");
                Ok(Term::If(Box::new(c), Box::new(a), Box::new(b)))
            }
            "and" => Ok(Term::And(args.iter().map(Term::from_form).collect::<Result<_, _>>()?)),
            "or" => Ok(Term::Or(args.iter().map(Term::from_form).collect::<Result<_, _>>()?)),
            "implies" | "iff" => {
                let [a, b]: [Term; 2] = exactly(2)?.try_into().expect("arity checked");
                let (a, b) = (Box::new(a), Box::new(b));
                Ok(if head.as_str() == "implies" {
                    Term::Implies(a, b)
                } else {
                    Term::Iff(a, b)
                })
            }
            "cond" => {
                let mut clauses = Vec::with_capacity(args.len());
                for clause in args {
                    match clause.as_list() {
                        Some([test, value]) => clauses.push((Term::from_form(test)?, Term::from_form(value)?)),
                        _ => return Err(term_error(clause, "cond clause must be (test value)")),
                    }
                }
                Ok(Term::Cond(clauses))
            }
            "forall" | "exists" => {
                let [vars, body] = args else {
                    return Err(term_error(form, "quantifier takes a variable list and a body"));
                };
                let quantifier = if head.as_str() == "forall" {
                    Quantifier::Forall
                } else {
                    Quantifier::Exists
                };
                let vars = parse_bound_vars(vars)?;
                Ok(Term::Quant(quantifier, vars, Box::new(Term::from_form(body)?)))
            }
            "lambda" | "let" | "let*" | "flet" => Err(term_error(form, format!("`{head}` is not supported"))),
            _ => Ok(Term::App(
                head.clone(),
                args.iter().map(Term::from_form).collect::<Result<_, _>>()?,
            )),
        }
    }

    pub fn to_form(&self) -> Form {
        let sym = |s: &str| Form::new(FormKind::Symbol(Symbol::new(s)));
        let tagged = |tag: &str, items: &[&Term]| {
            let mut v = vec![sym(tag)];
            v.extend(items.iter().map(|t| t.to_form()));
            Form::list(v)
        };
        match self {
            Term::Var(s) => Form::new(FormKind::Symbol(s.clone())),
            Term::Const(v) => match v {
                Value::Int(_) | Value::Char(_) | Value::Str(_) => v.to_form(),
                Value::Sym(s) if s.is_self_evaluating() => v.to_form(),
                _ => Form::list(vec![sym("quote"), v.to_form()]),
            },
            Term::App(f, args) => {
                let mut v = vec![Form::new(FormKind::Symbol(f.clone()))];
                v.extend(args.iter().map(Term::to_form));
                Form::list(v)
            }
            Term::If(c, a, b) => tagged("if", &[c, a, b]),
            Term::And(ts) => tagged("and", &ts.iter().collect::<Vec<_>>()),
            Term::Or(ts) => tagged("or", &ts.iter().collect::<Vec<_>>()),
            Term::Implies(a, b) => tagged("implies", &[a, b]),
            Term::Iff(a, b) => tagged("iff", &[a, b]),
            Term::Cond(clauses) => {
                let mut v = vec![sym("cond")];
                v.extend(clauses.iter().map(|(c, a)| Form::list(vec![c.to_form(), a.to_form()])));
                Form::list(v)
            }
            Term::Quant(q, vars, body) => {
                let vars = match vars.as_slice() {
                    [single] => Form::new(FormKind::Symbol(single.clone())),
                    _ => Form::list(vars.iter().map(|v| Form::new(FormKind::Symbol(v.clone()))).collect()),
                };
                Form::list(vec![sym(q.keyword()), vars, body.to_form()])
            }
        }
    }

    /// Immediate subterms, in left-to-right order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Const(_) => vec![],
            Term::App(_, args) | Term::And(args) | Term::Or(args) => args.iter().collect(),
            Term::If(c, a, b) => vec![c, a, b],
            Term::Implies(a, b) | Term::Iff(a, b) => vec![a, b],
            Term::Cond(clauses) => clauses.iter().flat_map(|(c, a)| [c, a]).collect(),
            Term::Quant(_, _, body) => vec![body],
        }
    }

    /// Pre-order traversal over every subterm, including `self`.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Term)) {
        visit(self);
        for child in self.children() {
            child.walk(visit);
        }
    }

    /// Names applied anywhere in the term, in first-occurrence order.
    pub fn applied_functions(&self) -> Vec<Symbol> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let Term::App(f, _) = t {
                if seen.insert(f.clone()) {
                    out.push(f.clone());
                }
            }
        });
        out
    }

    /// Free individual variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Symbol> {
        fn go(t: &Term, bound: &mut Vec<Symbol>, out: &mut Vec<Symbol>) {
            match t {
                Term::Var(v) => {
                    if !bound.contains(v) && !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Term::Quant(_, vars, body) => {
                    let depth = bound.len();
                    bound.extend(vars.iter().cloned());
                    go(body, bound, out);
                    bound.truncate(depth);
                }
                _ => {
                    for c in t.children() {
                        go(c, bound, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Rebuilds the term bottom-up, letting `f` rewrite each application
    /// after its arguments have been rewritten.
    pub fn try_map_apps<E>(&self, f: &mut impl FnMut(&Symbol, Vec<Term>) -> Result<Term, E>) -> Result<Term, E> {
        let mut rec = |t: &Term| t.try_map_apps(f);
        Ok(match self {
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::App(name, args) => {
                let args = args.iter().map(&mut rec).collect::<Result<Vec<_>, E>>()?;
                return f(name, args);
            }
            Term::If(c, a, b) => Term::If(Box::new(rec(c)?), Box::new(rec(a)?), Box::new(rec(b)?)),
            Term::And(ts) => Term::And(ts.iter().map(&mut rec).collect::<Result<_, _>>()?),
            Term::Or(ts) => Term::Or(ts.iter().map(&mut rec).collect::<Result<_, _>>()?),
            Term::Implies(a, b) => Term::Implies(Box::new(rec(a)?), Box::new(rec(b)?)),
            Term::Iff(a, b) => Term::Iff(Box::new(rec(a)?), Box::new(rec(b)?)),
            Term::Cond(clauses) => Term::Cond(
                clauses
                    .iter()
                    .map(|(c, a)| Ok((rec(c)?, rec(a)?)))
                    .collect::<Result<_, E>>()?,
            ),
            Term::Quant(q, vars, body) => Term::Quant(*q, vars.clone(), Box::new(rec(body)?)),
        })
    }

    /// Capture-avoiding substitution of terms for free individual variables.
    pub fn subst_vars(&self, map: &BTreeMap<Symbol, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Quant(q, vars, body) => {
                let mut inner: BTreeMap<Symbol, Term> = map
                    .iter()
                    .filter(|(k, _)| !vars.contains(k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                if inner.is_empty() {
                    return self.clone();
                }
                let body_free = body.free_vars();
                let incoming: BTreeSet<Symbol> = inner
                    .iter()
                    .filter(|(k, _)| body_free.contains(k))
                    .flat_map(|(_, t)| t.free_vars())
                    .collect();
                let mut renamed = Vec::with_capacity(vars.len());
                for v in vars {
                    if incoming.contains(v) {
                        let avoid: BTreeSet<Symbol> = incoming
                            .iter()
                            .chain(body_free.iter())
                            .chain(vars.iter())
                            .cloned()
                            .collect();
                        let fresh = fresh_name(v, &avoid);
                        inner.insert(v.clone(), Term::Var(fresh.clone()));
                        renamed.push(fresh);
                    } else {
                        renamed.push(v.clone());
                    }
                }
                Term::Quant(*q, renamed, Box::new(body.subst_vars(&inner)))
            }
            _ => self
                .try_map_children(&mut |c| Ok::<_, ()>(c.subst_vars(map)))
                .expect("infallible"),
        }
    }

    fn try_map_children<E>(&self, f: &mut impl FnMut(&Term) -> Result<Term, E>) -> Result<Term, E> {
        Ok(match self {
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::App(name, args) => Term::App(name.clone(), args.iter().map(&mut *f).collect::<Result<_, _>>()?),
            Term::If(c, a, b) => Term::If(Box::new(f(c)?), Box::new(f(a)?), Box::new(f(b)?)),
            Term::And(ts) => Term::And(ts.iter().map(&mut *f).collect::<Result<_, _>>()?),
            Term::Or(ts) => Term::Or(ts.iter().map(&mut *f).collect::<Result<_, _>>()?),
            Term::Implies(a, b) => Term::Implies(Box::new(f(a)?), Box::new(f(b)?)),
            Term::Iff(a, b) => Term::Iff(Box::new(f(a)?), Box::new(f(b)?)),
            Term::Cond(clauses) => Term::Cond(
                clauses
                    .iter()
                    .map(|(c, a)| Ok((f(c)?, f(a)?)))
                    .collect::<Result<_, E>>()?,
            ),
            Term::Quant(q, vars, body) => Term::Quant(*q, vars.clone(), Box::new(f(body)?)),
        })
    }

    /// Structural equality up to consistent renaming of quantifier-bound
    /// variables.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        alpha_eq_in(self, other, &mut Vec::new())
    }
}

fn alpha_eq_in(a: &Term, b: &Term, scope: &mut Vec<(Symbol, Symbol)>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            for (l, r) in scope.iter().rev() {
                if l == x || r == y {
                    return l == x && r == y;
                }
            }
            x == y
        }
        (Term::Quant(q1, v1, b1), Term::Quant(q2, v2, b2)) => {
            if q1 != q2 || v1.len() != v2.len() {
                return false;
            }
            let depth = scope.len();
            scope.extend(v1.iter().cloned().zip(v2.iter().cloned()));
            let eq = alpha_eq_in(b1, b2, scope);
            scope.truncate(depth);
            eq
        }
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| alpha_eq_in(x, y, scope))
        }
        _ => {
            if std::mem::discriminant(a) != std::mem::discriminant(b) {
                return false;
            }
            let (xs, ys) = (a.children(), b.children());
            xs.len() == ys.len() && xs.into_iter().zip(ys).all(|(x, y)| alpha_eq_in(x, y, scope))
        }
    }
}

fn fresh_name(base: &Symbol, avoid: &BTreeSet<Symbol>) -> Symbol {
    (1..)
        .map(|i| base.suffixed(&format!("-{i}")))
        .find(|s| !avoid.contains(s))
        .expect("unbounded supply of names")
}

pub(crate) fn parse_bound_vars(form: &Form) -> Result<Vec<Symbol>, TermError> {
    let vars: Vec<Symbol> = match &form.kind {
        FormKind::Symbol(s) => vec![s.clone()],
        FormKind::List(items) => items
            .iter()
            .map(|f| {
                f.as_symbol()
                    .cloned()
                    .ok_or_else(|| term_error(f, "bound variable must be a symbol"))
            })
            .collect::<Result<_, _>>()?,
        _ => return Err(term_error(form, "expected a variable or variable list")),
    };
    if vars.is_empty() {
        return Err(term_error(form, "empty variable list"));
    }
    if let Some(v) = vars.iter().find(|v| v.is_self_evaluating()) {
        return Err(term_error(form, format!("`{v}` cannot be a variable")));
    }
    let distinct: BTreeSet<_> = vars.iter().collect();
    if distinct.len() != vars.len() {
        return Err(term_error(form, "duplicate bound variable"));
    }
    Ok(vars)
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_form(&self.to_form()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::read_form;

    fn term(text: &str) -> Term {
        Term::from_form(&read_form(text).unwrap()).unwrap()
    }

    #[test]
    fn parse_print_round_trip() {
        for text in [
            "(cond ((atom l) (null l)) (t (and (?p (car l)) (all[?p] (cdr l)))))",
            "(forall (x y) (implies (equal (?f x) (?f y)) (equal x y)))",
            "(forall x (io x (?h x)))",
            "(if a '(1 2) 'sym)",
            "(iff (member e y) (and (leaf e x) (natp e)))",
            "(cons #\\a \"s\")",
        ] {
            assert_eq!(term(text).to_string(), text);
        }
        assert_eq!(term("()"), Term::nil());
        assert_eq!(term("'nil"), Term::nil());
    }

    #[test]
    fn special_forms_are_structural() {
        assert!(matches!(term("(and a b)"), Term::And(_)));
        assert!(matches!(term("(exists x (p x))"), Term::Quant(Quantifier::Exists, ..)));
        assert!(matches!(term("(not a)"), Term::App(..)));
    }

    #[test]
    fn malformed_terms() {
        for text in [
            "(if a b)",
            "((f) x)",
            "(forall () x)",
            "(forall (x x) x)",
            "(a . b)",
            "(cond (a))",
            "(let ((x 1)) x)",
        ] {
            assert!(Term::from_form(&read_form(text).unwrap()).is_err(), "{text}");
        }
    }

    #[test]
    fn free_vars_skip_bound() {
        let t = term("(forall e (iff (member e y) (and (leaf e x) (natp e))))");
        assert_eq!(t.free_vars(), vec![Symbol::new("y"), Symbol::new("x")]);
    }

    #[test]
    fn substitution_avoids_capture() {
        let t = term("(forall y (equal x y))");
        let map = BTreeMap::from([(Symbol::new("x"), term("(f y)"))]);
        let out = t.subst_vars(&map);
        assert_eq!(out.to_string(), "(forall y-1 (equal (f y) y-1))");
        assert!(out.alpha_eq(&term("(forall z (equal (f y) z))")));
    }

    #[test]
    fn substitution_respects_shadowing() {
        let t = term("(and x (forall x (p x)))");
        let map = BTreeMap::from([(Symbol::new("x"), term("5"))]);
        assert_eq!(t.subst_vars(&map).to_string(), "(and 5 (forall x (p x)))");
    }

    #[test]
    fn alpha_equivalence() {
        assert!(term("(forall (x y) (p x y))").alpha_eq(&term("(forall (a b) (p a b))")));
        assert!(!term("(forall (x y) (p x y))").alpha_eq(&term("(forall (a b) (p b a))")));
        assert!(!term("(forall x (p x y))").alpha_eq(&term("(forall y (p y y))")));
        assert!(!term("(p x)").alpha_eq(&term("(p y)")));
    }
}
