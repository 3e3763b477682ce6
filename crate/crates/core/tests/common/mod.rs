//! Generators and property bodies shared by the property tests and the
//! acceptance runner.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use softk::eval::{Evaluator, Limits, Value};
use softk::events::process_source;
use softk::instantiate::{apply_instantiation, Instantiation};
use softk::kernel::{funvars_of_term, Quantifier, Term};
use softk::registry::Registry;
use softk::sexpr::{read_form, write_form, Form, FormKind};
use softk::Symbol;

pub const CASES: u32 = 1000;

/// Second-order functions and every instance the generated
/// instantiations can ask for.
pub fn base_source() -> String {
    let mut src = String::from(
        "(defunvar ?f (*) => *)
         (defunvar ?g (* *) => *)
         (defunvar ?p (*) => *)
         (defun2 twice[?f] (?f) (x) (?f (?f x)))
         (defun2 pair[?f_?g] (?f ?g) (x y) (?g (?f x) y))
         (defun wrap (x) (list x))
         (defun inc (x) (+ 1 (nfix x)))
        ",
    );
    for f in ["wrap", "inc"] {
        src += &format!("(defun-inst twice[{f}] (twice[?f] (?f . {f})))\n");
        src += &format!("(defun-inst pair[{f}_?g] (?g) (pair[?f_?g] (?f . {f})))\n");
        for g in ["cons", "binary-+"] {
            src += &format!("(defun-inst pair[{f}_{g}] (pair[?f_?g] (?f . {f}) (?g . {g})))\n");
        }
    }
    for g in ["cons", "binary-+"] {
        src += &format!("(defun-inst pair[?f_{g}] (?f) (pair[?f_?g] (?g . {g})))\n");
    }
    src
}

pub fn base_registry() -> Registry {
    process_source(&base_source()).expect("base source is admissible").0
}

pub fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn sym(s: &str) -> Symbol {
    Symbol::from(s)
}

fn app(f: &str, args: Vec<Term>) -> Term {
    Term::App(sym(f), args)
}

/// Terms over `x` and `y` using function variables, second-order
/// functions, user functions and builtins. Quantifiers only when
/// `quantifiers` is set.
pub fn term(quantifiers: bool) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::var("x")),
        Just(Term::var("y")),
        (-2i64..4).prop_map(|n| Term::Const(Value::Int(n))),
        Just(Term::Const(Value::nil())),
    ];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        let two = (inner.clone(), inner.clone());
        let mut options = vec![
            inner.clone().prop_map(|a| app("?f", vec![a])).boxed(),
            two.clone().prop_map(|(a, b)| app("?g", vec![a, b])).boxed(),
            inner.clone().prop_map(|a| app("?p", vec![a])).boxed(),
            inner.clone().prop_map(|a| app("twice[?f]", vec![a])).boxed(),
            two.clone().prop_map(|(a, b)| app("pair[?f_?g]", vec![a, b])).boxed(),
            inner.clone().prop_map(|a| app("wrap", vec![a])).boxed(),
            two.clone().prop_map(|(a, b)| app("cons", vec![a, b])).boxed(),
            inner.clone().prop_map(|a| app("car", vec![a])).boxed(),
            two.clone().prop_map(|(a, b)| app("equal", vec![a, b])).boxed(),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, a, b)| Term::If(Box::new(c), Box::new(a), Box::new(b)))
                .boxed(),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Term::And).boxed(),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Term::Or).boxed(),
            two.clone().prop_map(|(a, b)| Term::implies(a, b)).boxed(),
        ];
        if quantifiers {
            options.push(
                (
                    prop_oneof![Just(Quantifier::Forall), Just(Quantifier::Exists)],
                    inner.clone(),
                )
                    .prop_map(|(q, b)| Term::Quant(q, vec![sym("x")], Box::new(b)))
                    .boxed(),
            );
        }
        proptest::strategy::Union::new(options)
    })
}

/// Any sub-map of `?f -> {wrap, inc}`, `?g -> {cons, binary-+}`,
/// `?p -> {consp, natp}`.
pub fn sigma() -> impl Strategy<Value = Instantiation> {
    let f = prop::option::of(prop_oneof![Just("wrap"), Just("inc")]);
    let g = prop::option::of(prop_oneof![Just("cons"), Just("binary-+")]);
    let p = prop::option::of(prop_oneof![Just("consp"), Just("natp")]);
    (f, g, p).prop_map(|(f, g, p)| {
        let pairs = [("?f", f), ("?g", g), ("?p", p)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (sym(k), sym(v))));
        Instantiation::from_pairs(pairs).expect("distinct keys")
    })
}

/// An instantiation of all three function variables.
pub fn full_sigma() -> impl Strategy<Value = Instantiation> {
    sigma().prop_filter("covers every function variable", |s| s.len() == 3)
}

fn symbol_name() -> impl Strategy<Value = String> {
    "[a-z?][a-z0-9?_\\-\\[\\]]{0,6}".prop_filter("not nil", |s| s != "nil")
}

/// Reader-produced forms: no empty lists and no list or `nil` dotted tails.
pub fn form() -> impl Strategy<Value = Form> {
    let leaf = prop_oneof![
        symbol_name().prop_map(Form::symbol),
        any::<i64>().prop_map(Form::int),
        prop_oneof![
            Just('a'),
            Just('Z'),
            Just(' '),
            Just('\n'),
            Just('\0'),
            Just('('),
            Just('\u{1}'),
            Just('é'),
        ]
        .prop_map(|c| Form::new(FormKind::Char(c))),
        "[ -~]{0,6}".prop_map(|s| Form::new(FormKind::Str(s))),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        let atom_tail = inner.clone().prop_filter("atomic, non-nil tail", |f| {
            !matches!(f.kind, FormKind::List(_) | FormKind::Dotted(..))
        });
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..5).prop_map(Form::list),
            (prop::collection::vec(inner, 1..3), atom_tail).prop_map(|(items, tail)| Form::dotted(items, tail)),
        ]
    })
}

fn check(cond: bool, message: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(message()))
    }
}

fn apply(t: &Term, s: &Instantiation, r: &Registry) -> Result<Term, TestCaseError> {
    apply_instantiation(t, s, r).map_err(|e| TestCaseError::fail(format!("apply {s} to {t}: {e}")))
}

fn funvars(t: &Term, r: &Registry) -> BTreeSet<Symbol> {
    funvars_of_term(t, r).expect("generated terms use registered names")
}

pub fn identity(t: &Term, r: &Registry) -> Result<(), TestCaseError> {
    let out = apply(t, &Instantiation::new(), r)?;
    check(out == *t, || format!("{t} became {out}"))
}

pub fn stability(t: &Term, s: &Instantiation, r: &Registry) -> Result<(), TestCaseError> {
    let used = funvars(t, r);
    let disjoint = Instantiation::from_pairs(
        s.iter()
            .filter(|(k, _)| !used.contains(*k))
            .map(|(k, v)| (k.clone(), v.clone())),
    )
    .expect("sub-map");
    let out = apply(t, &disjoint, r)?;
    check(out == *t, || format!("{disjoint} changed {t} into {out}"))
}

pub fn idempotence(t: &Term, s: &Instantiation, r: &Registry) -> Result<(), TestCaseError> {
    let once = apply(t, s, r)?;
    let twice = apply(&once, s, r)?;
    check(once == twice, || format!("{s} on {t}: {once} then {twice}"))
}

pub fn funvar_elimination(t: &Term, s: &Instantiation, r: &Registry) -> Result<(), TestCaseError> {
    let out = apply(t, s, r)?;
    let expected: BTreeSet<Symbol> = funvars(t, r).into_iter().filter(|v| !s.contains_key(v)).collect();
    let found = funvars(&out, r);
    check(found == expected, || {
        format!("{s} on {t}: funvars {found:?}, expected {expected:?}")
    })
}

pub fn form_round_trip(f: &Form) -> Result<(), TestCaseError> {
    let text = write_form(f);
    let back = read_form(&text).map_err(|e| TestCaseError::fail(format!("`{text}`: {e}")))?;
    check(back == *f, || format!("`{text}` read back as `{back}`"))
}

pub fn term_round_trip(t: &Term) -> Result<(), TestCaseError> {
    let text = write_form(&t.to_form());
    let form = read_form(&text).map_err(|e| TestCaseError::fail(format!("`{text}`: {e}")))?;
    let back = Term::from_form(&form).map_err(|e| TestCaseError::fail(format!("`{text}`: {e}")))?;
    check(back == *t, || format!("`{text}` read back as `{back}`"))
}

const ARGS: [&str; 5] = ["0", "1", "3", "nil", "(1 . 2)"];

pub fn coherence_input() -> impl Strategy<Value = (Term, Instantiation, usize, usize)> {
    let body = term(false).prop_map(|t| app("cons", vec![app("?f", vec![Term::var("y")]), t]));
    (body, full_sigma(), 0..ARGS.len(), 0..ARGS.len())
}

/// Registers `(defun2 r (fparams) (x y) body)` and its instance under
/// `s`, then compares calling the instance with interpreting the body.
pub fn coherence(base: &Registry, (body, s, i, j): &(Term, Instantiation, usize, usize)) -> Result<(), TestCaseError> {
    let fparams = funvars(body, base);
    let names: Vec<&str> = fparams.iter().map(Symbol::as_str).collect();
    let sub = s.restrict(&fparams);
    let source = format!(
        "(defun2 r ({fps}) (x y) {body})
         (defun-inst r-inst (r {pairs}))",
        fps = names.join(" "),
        pairs = sub.pairs_text(),
    );
    let mut registry = base.clone();
    for form in softk::sexpr::read_forms(&source).expect("printed terms read back") {
        softk::events::process_event(&mut registry, &form, &Default::default())
            .map_err(|e| TestCaseError::fail(format!("{source}: {e}")))?;
    }
    let (x, y) = (value(ARGS[*i]), value(ARGS[*j]));
    let limits = Limits::default();
    let called = Evaluator::new(&registry, limits).call(&sym("r-inst"), &[x.clone(), y.clone()]);
    let env = [(sym("x"), x), (sym("y"), y)];
    let interpreted = Evaluator::new(&registry, limits)
        .with_interpretation(&sub)
        .eval(body, &env);
    match (&called, &interpreted) {
        (Ok(a), Ok(b)) => check(a == b, || format!("{source}: instance {a}, interpreted {b}")),
        (Err(_), Err(_)) => Ok(()),
        _ => Err(TestCaseError::fail(format!(
            "{source}: instance {called:?}, interpreted {interpreted:?}"
        ))),
    }
}

fn value(text: &str) -> Value {
    match Term::from_form(&read_form(&format!("'{text}")).expect("literal")).expect("constant") {
        Term::Const(v) => v,
        t => panic!("not a constant: {t}"),
    }
}
