//! Call-by-value execution of plain functions, and exhaustive checking of
//! formulas over finite universes.
//!
//! Quantifiers (and quantifier functions) are decided only when a universe
//! is supplied, by enumerating it. Choice and witness functions are never
//! executable. Function variables are executable only under an
//! interpretation mapping them to functions.

use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;
use std::fmt;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

use crate::instantiate::Instantiation;
use crate::kernel::{builtin_arity, Arity, Quantifier, Term};
use crate::registry::{FunDef, FunKind, Registry};
use crate::symbol::Symbol;

pub use crate::kernel::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum nesting of user-function calls.
    pub depth: usize,
    /// Maximum number of quantifier assignments enumerated by one check.
    pub budget: u64,
    /// Evaluate guards on entry to user functions.
    pub check_guards: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            depth: 10_000,
            budget: 1_000_000,
            check_guards: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("`{0}` is not executable")]
    NonExecutable(Symbol),
    #[error("recursion depth limit {0} exceeded")]
    DepthExceeded(usize),
    #[error("enumeration budget of {0} assignments exhausted")]
    BudgetExhausted(u64),
    #[error("unbound variable `{0}`")]
    UnboundVariable(Symbol),
    #[error("unknown function `{0}`")]
    UnknownFunction(Symbol),
    #[error("guard of `{0}` does not hold")]
    GuardViolation(Symbol),
    #[error("integer overflow in `{0}`")]
    Overflow(Symbol),
    #[error("quantifier needs a universe")]
    NoUniverse,
}

/// A finite, duplicate-free, non-empty set of values that quantified and
/// free variables range over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub name: Symbol,
    values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid universe `{name}`: {message}")]
pub struct UniverseError {
    pub name: Symbol,
    pub message: String,
}

impl Universe {
    pub fn new(name: Symbol, values: Vec<Value>) -> Result<Self, UniverseError> {
        if values.is_empty() {
            return Err(UniverseError {
                name,
                message: "a universe is non-empty".into(),
            });
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = values.iter().find(|v| !seen.insert(*v)) {
            return Err(UniverseError {
                message: format!("duplicate value {dup}"),
                name,
            });
        }
        Ok(Universe { name, values })
    }

    /// Every proper list of length at most `max_len` over `atoms`, shortest
    /// first.
    pub fn lists_over(name: Symbol, atoms: &[Value], max_len: usize) -> Result<Self, UniverseError> {
        let mut level: Vec<Vec<Value>> = vec![vec![]];
        let mut values = vec![Value::nil()];
        for _ in 0..max_len {
            level = level
                .iter()
                .flat_map(|prefix| {
                    atoms.iter().map(move |a| {
                        let mut l = prefix.clone();
                        l.push(a.clone());
                        l
                    })
                })
                .collect();
            values.extend(level.iter().map(|l| Value::list(l.iter().cloned())));
        }
        dedup(&mut values);
        Universe::new(name, values)
    }

    /// The atoms plus every cons tree of depth at most `max_depth` over them.
    pub fn trees_over(name: Symbol, atoms: &[Value], max_depth: usize) -> Result<Self, UniverseError> {
        let mut values = atoms.to_vec();
        for _ in 0..max_depth {
            let mut next = atoms.to_vec();
            for a in &values {
                for b in &values {
                    next.push(Value::cons(a.clone(), b.clone()));
                }
            }
            values = next;
            dedup(&mut values);
        }
        dedup(&mut values);
        Universe::new(name, values)
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn dedup(values: &mut Vec<Value>) {
    let mut seen = BTreeSet::new();
    values.retain(|v| seen.insert(v.clone()));
}

/// An assignment of values to variables, in enumeration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Binding(pub Vec<(Symbol, Value)>);

impl Binding {
    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.iter().find(|(v, _)| v.as_str() == var).map(|(_, val)| val)
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("(no variables)");
        }
        let items: Vec<String> = self.0.iter().map(|(v, val)| format!("{v}={val}")).collect();
        f.write_str(&items.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// The first falsifying assignment in enumeration order.
    Fail(Binding),
    Unknown(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail(_) => "fail",
            Verdict::Unknown(_) => "unknown",
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Pass => f.write_str("pass"),
            Verdict::Fail(b) => write!(f, "fail: {b}"),
            Verdict::Unknown(reason) => write!(f, "unknown: {reason}"),
        }
    }
}

type Env = Vec<(Symbol, Value)>;

/// What a called name resolves to.
#[derive(Clone, Copy)]
enum Target<'a> {
    Interpreted(&'a Symbol),
    FunVar,
    Function(&'a FunDef),
    Builtin(Arity),
    Unknown,
}

pub struct Evaluator<'a> {
    registry: &'a Registry,
    limits: Limits,
    universe: Option<&'a Universe>,
    interpretation: Option<&'a Instantiation>,
    spent: Cell<u64>,
    depth: Cell<usize>,
    resolved: RefCell<FxHashMap<Symbol, Target<'a>>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(registry: &'a Registry, limits: Limits) -> Self {
        Evaluator {
            registry,
            limits,
            universe: None,
            interpretation: None,
            spent: Cell::new(0),
            depth: Cell::new(0),
            resolved: RefCell::default(),
        }
    }

    pub fn with_universe(mut self, universe: &'a Universe) -> Self {
        self.universe = Some(universe);
        self
    }

    /// Interprets function variables by the functions they map to.
    pub fn with_interpretation(mut self, interpretation: &'a Instantiation) -> Self {
        self.interpretation = Some(interpretation);
        self.resolved.get_mut().clear();
        self
    }

    fn resolve(&self, name: &Symbol) -> Target<'a> {
        if let Some(target) = self.resolved.borrow().get(name) {
            return *target;
        }
        let target = if let Some(to) = self.interpretation.and_then(|i| i.get(name)) {
            Target::Interpreted(to)
        } else if self.registry.funvar(name).is_some() {
            Target::FunVar
        } else if let Some(def) = self.registry.function(name) {
            Target::Function(def)
        } else {
            builtin_arity(name.as_str()).map_or(Target::Unknown, Target::Builtin)
        };
        self.resolved.borrow_mut().insert(name.clone(), target);
        target
    }

    /// Assignments enumerated so far.
    pub fn spent(&self) -> u64 {
        self.spent.get()
    }

    pub fn eval(&self, term: &Term, env: &[(Symbol, Value)]) -> Result<Value, EvalError> {
        match term {
            Term::Var(v) => env
                .iter()
                .rev()
                .find(|(name, _)| name == v)
                .map(|(_, val)| val.clone())
                .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            Term::Const(v) => Ok(v.clone()),
            Term::App(f, args) => {
                let values = args
                    .iter()
                    .map(|a| self.eval(a, env))
                    .collect::<Result<SmallVec<[Value; 4]>, _>>()?;
                self.call(f, &values)
            }
            Term::If(c, a, b) => {
                if self.eval(c, env)?.is_true() {
                    self.eval(a, env)
                } else {
                    self.eval(b, env)
                }
            }
            Term::And(ts) => {
                let mut last = Value::t();
                for t in ts {
                    last = self.eval(t, env)?;
                    if last.is_nil() {
                        break;
                    }
                }
                Ok(last)
            }
            Term::Or(ts) => {
                for t in ts {
                    let v = self.eval(t, env)?;
                    if v.is_true() {
                        return Ok(v);
                    }
                }
                Ok(Value::nil())
            }
            Term::Cond(clauses) => {
                for (test, value) in clauses {
                    if self.eval(test, env)?.is_true() {
                        return self.eval(value, env);
                    }
                }
                Ok(Value::nil())
            }
            Term::Implies(a, b) => {
                if self.eval(a, env)?.is_nil() {
                    return Ok(Value::t());
                }
                Ok(Value::bool(self.eval(b, env)?.is_true()))
            }
            Term::Iff(a, b) => {
                let a = self.eval(a, env)?.is_true();
                Ok(Value::bool(a == self.eval(b, env)?.is_true()))
            }
            Term::Quant(q, vars, body) => self.quantify(*q, vars, body, env),
        }
    }

    /// Applies a named function to evaluated arguments.
    pub fn call(&self, name: &Symbol, args: &[Value]) -> Result<Value, EvalError> {
        let def = match self.resolve(name) {
            Target::Interpreted(target) => return self.nested(|| self.call(target, args)),
            Target::FunVar => return Err(EvalError::NonExecutable(name.clone())),
            Target::Builtin(arity) if arity.admits(args.len()) => return builtin(name, args),
            Target::Builtin(_) | Target::Unknown => return Err(EvalError::UnknownFunction(name.clone())),
            Target::Function(def) => def,
        };
        match &def.kind {
            FunKind::Plain => self.nested(|| {
                let env: SmallVec<[(Symbol, Value); 4]> =
                    def.params.iter().cloned().zip(args.iter().cloned()).collect();
                if self.limits.check_guards && !def.guard.is_true_const() && self.eval(&def.guard, &env)?.is_nil() {
                    return Err(EvalError::GuardViolation(name.clone()));
                }
                self.eval(&def.body, &env)
            }),
            FunKind::Quantifier(q) if self.universe.is_some() => self.nested(|| {
                let env: Env = def.params.iter().cloned().zip(args.iter().cloned()).collect();
                self.quantify(q.quantifier, &q.boundvars, &def.body, &env)
            }),
            _ => Err(EvalError::NonExecutable(name.clone())),
        }
    }

    fn nested(&self, f: impl FnOnce() -> Result<Value, EvalError>) -> Result<Value, EvalError> {
        let depth = self.depth.get();
        if depth >= self.limits.depth {
            return Err(EvalError::DepthExceeded(self.limits.depth));
        }
        self.depth.set(depth + 1);
        let out = stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, f);
        self.depth.set(depth);
        out
    }

    fn spend(&self) -> Result<(), EvalError> {
        let spent = self.spent.get() + 1;
        if spent > self.limits.budget {
            return Err(EvalError::BudgetExhausted(self.limits.budget));
        }
        self.spent.set(spent);
        Ok(())
    }

    fn quantify(
        &self,
        q: Quantifier,
        vars: &[Symbol],
        body: &Term,
        env: &[(Symbol, Value)],
    ) -> Result<Value, EvalError> {
        let universe = self.universe.ok_or(EvalError::NoUniverse)?;
        let mut env = env.to_vec();
        let found = self.search(universe, vars, &mut env, &mut |env| {
            let holds = self.eval(body, env)?.is_true();
            Ok(match q {
                Quantifier::Forall => !holds,
                Quantifier::Exists => holds,
            })
        })?;
        Ok(Value::bool(match q {
            Quantifier::Forall => !found,
            Quantifier::Exists => found,
        }))
    }

    /// Enumerates assignments of `vars` (last variable fastest) until
    /// `stop` returns true; reports whether it did.
    fn search(
        &self,
        universe: &Universe,
        vars: &[Symbol],
        env: &mut Env,
        stop: &mut dyn FnMut(&Env) -> Result<bool, EvalError>,
    ) -> Result<bool, EvalError> {
        let Some((var, rest)) = vars.split_first() else {
            self.spend()?;
            return stop(env);
        };
        for value in universe.values() {
            env.push((var.clone(), value.clone()));
            let found = self.search(universe, rest, env, stop);
            env.pop();
            if found? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Treats free variables and any leading universal quantifiers of
    /// `formula` as ranging over the universe, and searches for a falsifying
    /// assignment.
    pub fn check(&self, formula: &Term) -> Verdict {
        let mut vars = formula.free_vars();
        let mut matrix = formula;
        while let Term::Quant(Quantifier::Forall, bound, body) = matrix {
            for v in bound {
                vars.retain(|x| x != v);
                vars.push(v.clone());
            }
            matrix = body;
        }
        if vars.is_empty() {
            return match self.eval(matrix, &[]) {
                Ok(v) if v.is_true() => Verdict::Pass,
                Ok(_) => Verdict::Fail(Binding::default()),
                Err(e) => Verdict::Unknown(e.to_string()),
            };
        }
        let Some(universe) = self.universe else {
            return Verdict::Unknown("free variables but no universe".into());
        };
        let mut env = Env::new();
        let mut counterexample = None;
        let outcome = self.search(universe, &vars, &mut env, &mut |env| {
            if self.eval(matrix, env)?.is_nil() {
                counterexample = Some(Binding(env.clone()));
                return Ok(true);
            }
            Ok(false)
        });
        match outcome {
            Err(e) => Verdict::Unknown(e.to_string()),
            Ok(true) => Verdict::Fail(counterexample.expect("recorded on stop")),
            Ok(false) => Verdict::Pass,
        }
    }
}

/// Evaluates `term` with no universe and no function-variable
/// interpretation.
pub fn eval_term(
    term: &Term,
    env: &[(Symbol, Value)],
    registry: &Registry,
    limits: Limits,
) -> Result<Value, EvalError> {
    Evaluator::new(registry, limits).eval(term, env)
}

/// Exhaustively checks `formula` over `universe`.
pub fn check_bounded(formula: &Term, universe: &Universe, registry: &Registry, limits: Limits) -> Verdict {
    Evaluator::new(registry, limits).with_universe(universe).check(formula)
}

fn fix(v: &Value) -> i64 {
    v.as_int().unwrap_or(0)
}

fn arith(name: &Symbol, args: &[Value], unit: i64, op: fn(i64, i64) -> Option<i64>) -> Result<Value, EvalError> {
    args.iter()
        .try_fold(unit, |acc, v| op(acc, fix(v)))
        .map(Value::Int)
        .ok_or_else(|| EvalError::Overflow(name.clone()))
}

/// Applies a builtin; the caller has checked the arity.
fn builtin(name: &Symbol, args: &[Value]) -> Result<Value, EvalError> {
    let arg = |i: usize| &args[i];
    Ok(match name.as_str() {
        "cons" => Value::cons(arg(0).clone(), arg(1).clone()),
        "car" => arg(0).car(),
        "cdr" => arg(0).cdr(),
        "atom" | "endp" => Value::bool(!arg(0).is_cons()),
        "consp" => Value::bool(arg(0).is_cons()),
        "listp" => Value::bool(arg(0).is_cons() || arg(0).is_nil()),
        "null" | "not" => Value::bool(arg(0).is_nil()),
        "equal" | "eql" => Value::bool(arg(0) == arg(1)),
        "list" => Value::list(args.iter().cloned()),
        "member" => {
            let mut cursor = arg(1).clone();
            while cursor.is_cons() {
                if cursor.car() == *arg(0) {
                    return Ok(cursor);
                }
                cursor = cursor.cdr();
            }
            Value::nil()
        }
        "append" => {
            let mut items = Vec::new();
            let mut cursor = arg(0).clone();
            while cursor.is_cons() {
                items.push(cursor.car());
                cursor = cursor.cdr();
            }
            items
                .into_iter()
                .rev()
                .fold(arg(1).clone(), |tail, head| Value::cons(head, tail))
        }
        "len" => {
            let mut n = 0;
            let mut cursor = arg(0).clone();
            while cursor.is_cons() {
                n += 1;
                cursor = cursor.cdr();
            }
            Value::Int(n)
        }
        "true-listp" => {
            let mut cursor = arg(0).clone();
            while cursor.is_cons() {
                cursor = cursor.cdr();
            }
            Value::bool(cursor.is_nil())
        }
        "acl2-count" => Value::Int(acl2_count(arg(0))),
        "mv-nth" => {
            let mut n = fix(arg(0)).max(0);
            let mut cursor = arg(1).clone();
            while n > 0 && cursor.is_cons() {
                cursor = cursor.cdr();
                n -= 1;
            }
            cursor.car()
        }
        "natp" => Value::bool(arg(0).as_int().is_some_and(|n| n >= 0)),
        "integerp" => Value::bool(arg(0).as_int().is_some()),
        "zp" => Value::bool(arg(0).as_int().is_none_or(|n| n <= 0)),
        "symbolp" => Value::bool(matches!(arg(0), Value::Sym(_))),
        "characterp" => Value::bool(matches!(arg(0), Value::Char(_))),
        "stringp" => Value::bool(matches!(arg(0), Value::Str(_))),
        "fix" => Value::Int(fix(arg(0))),
        "nfix" => Value::Int(fix(arg(0)).max(0)),
        "binary-+" | "+" => return arith(name, args, 0, i64::checked_add),
        "binary-*" | "*" => return arith(name, args, 1, i64::checked_mul),
        "-" => {
            let result = if args.len() == 1 {
                fix(arg(0)).checked_neg()
            } else {
                fix(arg(0)).checked_sub(fix(arg(1)))
            };
            return result.map(Value::Int).ok_or_else(|| EvalError::Overflow(name.clone()));
        }
        "<" => Value::bool(fix(arg(0)) < fix(arg(1))),
        ">" => Value::bool(fix(arg(0)) > fix(arg(1))),
        "<=" => Value::bool(fix(arg(0)) <= fix(arg(1))),
        ">=" => Value::bool(fix(arg(0)) >= fix(arg(1))),
        "code-char" => {
            let code = arg(0).as_int().filter(|n| (0..256).contains(n)).unwrap_or(0);
            Value::Char(char::from_u32(code as u32).expect("octets are chars"))
        }
        "char-code" => match arg(0) {
            Value::Char(c) => Value::Int(*c as i64),
            _ => Value::Int(0),
        },
        _ => return Err(EvalError::UnknownFunction(name.clone())),
    })
}

fn acl2_count(v: &Value) -> i64 {
    match v {
        Value::Cons(pair) => 1 + acl2_count(&pair.0) + acl2_count(&pair.1),
        Value::Int(n) => n.saturating_abs(),
        Value::Str(s) => s.chars().count() as i64,
        _ => 0,
    }
}
