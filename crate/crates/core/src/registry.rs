//! Session tables: function variables, second-order functions, instances
//! of second-order functions, and theorems.
//!
//! Ordinary first-order functions and the witness functions of quantifier
//! definitions live in the same function table as second-order ones; the
//! second-order table is the subset of names recorded as such. Witness
//! functions are never recorded as second-order, nor as instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};

use crate::error::{Error, Result};
use crate::instantiate::Instantiation;
use crate::kernel::{builtin_arity, check_arities, funvars_of_term, Callee, Quantifier, Signatures, Term, WithPending};
use crate::sexpr::{write_form, Form};
use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    New,
    /// Identical to an existing record; nothing changed.
    Redundant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunVar {
    pub name: Symbol,
    pub arity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewriteMode {
    Default,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantInfo {
    pub quantifier: Quantifier,
    pub boundvars: Vec<Symbol>,
    pub witness: Symbol,
    /// `<name>-necc` for universal, `<name>-suff` for existential.
    pub rule: Symbol,
    pub rewrite: RewriteMode,
}

impl QuantInfo {
    pub fn for_function(name: &Symbol, quantifier: Quantifier, boundvars: Vec<Symbol>, rewrite: RewriteMode) -> Self {
        let rule_suffix = match quantifier {
            Quantifier::Forall => "-necc",
            Quantifier::Exists => "-suff",
        };
        QuantInfo {
            quantifier,
            boundvars,
            witness: name.suffixed("-witness"),
            rule: name.suffixed(rule_suffix),
            rewrite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunKind {
    Plain,
    Choice {
        boundvars: Vec<Symbol>,
    },
    /// `body` holds the matrix; the quantified body is rebuilt on demand.
    Quantifier(QuantInfo),
    /// The choice function behind a quantifier definition. Its `body` is the
    /// constraint it chooses for: the negated matrix for `forall`, the
    /// matrix itself for `exists`.
    Witness {
        owner: Symbol,
        boundvars: Vec<Symbol>,
    },
}

impl FunKind {
    pub fn label(&self) -> &'static str {
        match self {
            FunKind::Plain => "plain",
            FunKind::Choice { .. } => "choice",
            FunKind::Quantifier(_) => "quantifier",
            FunKind::Witness { .. } => "witness",
        }
    }
}

/// A defined function, first- or second-order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDef {
    pub name: Symbol,
    pub kind: FunKind,
    /// Function parameters; empty for first-order functions.
    pub fparams: Vec<Symbol>,
    pub params: Vec<Symbol>,
    pub body: Term,
    pub guard: Term,
    pub measure: Option<Term>,
    pub recursive: bool,
}

impl FunDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_second_order(&self) -> bool {
        !self.fparams.is_empty()
    }

    pub fn quant(&self) -> Option<&QuantInfo> {
        match &self.kind {
            FunKind::Quantifier(q) => Some(q),
            _ => None,
        }
    }

    pub fn boundvars(&self) -> &[Symbol] {
        match &self.kind {
            FunKind::Plain => &[],
            FunKind::Choice { boundvars } | FunKind::Witness { boundvars, .. } => boundvars,
            FunKind::Quantifier(q) => &q.boundvars,
        }
    }

    /// The defining body with its quantifier restored, for quantifier
    /// functions; the body itself otherwise.
    pub fn quantified_body(&self) -> Term {
        match &self.kind {
            FunKind::Quantifier(q) => Term::Quant(q.quantifier, q.boundvars.clone(), Box::new(self.body.clone())),
            _ => self.body.clone(),
        }
    }

    /// The application of this function to its own parameters.
    pub fn self_call(&self) -> Term {
        Term::App(self.name.clone(), self.params.iter().cloned().map(Term::Var).collect())
    }

    /// Term slots that may reference other functions.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        [Some(&self.body), Some(&self.guard), self.measure.as_ref()]
            .into_iter()
            .flatten()
    }

    /// Non-builtin names applied in the body, guard, or measure.
    pub fn calls(&self) -> BTreeSet<Symbol> {
        self.terms()
            .flat_map(Term::applied_functions)
            .filter(|f| builtin_arity(f.as_str()).is_none())
            .collect()
    }

    /// The witness function record derived from a quantifier definition.
    pub fn witness_def(&self) -> Option<FunDef> {
        let q = self.quant()?;
        let chosen = match q.quantifier {
            Quantifier::Forall => Term::negate(self.body.clone()),
            Quantifier::Exists => self.body.clone(),
        };
        Some(FunDef {
            name: q.witness.clone(),
            kind: FunKind::Witness {
                owner: self.name.clone(),
                boundvars: q.boundvars.clone(),
            },
            fparams: self.fparams.clone(),
            params: self.params.clone(),
            body: chosen,
            guard: Term::t(),
            measure: None,
            recursive: false,
        })
    }

    /// Whether the body applies the function's own name.
    pub fn applies_itself(&self) -> bool {
        self.body.applied_functions().contains(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremRec {
    pub name: Symbol,
    pub formula: Term,
    /// Cached `funvars(formula)`.
    pub funvars: BTreeSet<Symbol>,
    /// Recorded verbatim, without interpretation.
    pub rule_classes: Option<Form>,
}

impl TheoremRec {
    pub fn new(name: Symbol, formula: Term, registry: &Registry) -> Result<Self> {
        check_arities(&formula, registry)?;
        let funvars = funvars_of_term(&formula, registry)?;
        Ok(TheoremRec {
            name,
            formula,
            funvars,
            rule_classes: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceKey {
    pub sofun: Symbol,
    pub sigma: Instantiation,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    funvars: IndexMap<Symbol, FunVar>,
    functions: IndexMap<Symbol, Arc<FunDef>>,
    sofuns: IndexSet<Symbol>,
    instances: BTreeMap<InstanceKey, Symbol>,
    theorems: IndexMap<Symbol, Arc<TheoremRec>>,
    /// Rewrite-rule names of quantifier functions, mapped to their owner.
    rules: BTreeMap<Symbol, Symbol>,
}

impl Signatures for Registry {
    fn callee(&self, name: &Symbol) -> Option<Callee<'_>> {
        if let Some(fv) = self.funvars.get(name) {
            return Some(Callee::FunVar { arity: fv.arity });
        }
        if let Some(def) = self.functions.get(name) {
            return Some(Callee::Function {
                arity: def.arity(),
                fparams: &def.fparams,
            });
        }
        builtin_arity(name.as_str()).map(Callee::Builtin)
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `f` against a scratch copy and keeps the result only on
    /// success, so a failed event leaves every table untouched.
    pub fn atomically<T>(&mut self, f: impl FnOnce(&mut Registry) -> Result<T>) -> Result<T> {
        let mut staged = self.clone();
        let out = f(&mut staged)?;
        *self = staged;
        Ok(out)
    }

    pub fn funvar(&self, name: &Symbol) -> Option<&FunVar> {
        self.funvars.get(name)
    }

    pub fn function(&self, name: &Symbol) -> Option<&FunDef> {
        self.functions.get(name).map(Arc::as_ref)
    }

    pub fn theorem(&self, name: &Symbol) -> Option<&TheoremRec> {
        self.theorems.get(name).map(Arc::as_ref)
    }

    pub fn is_sofun(&self, name: &Symbol) -> bool {
        self.sofuns.contains(name)
    }

    /// The second-order function record, if `name` is in the second-order
    /// table.
    pub fn sofun(&self, name: &Symbol) -> Option<&FunDef> {
        self.is_sofun(name).then(|| self.function(name)).flatten()
    }

    pub fn funvars(&self) -> impl Iterator<Item = &FunVar> {
        self.funvars.values()
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunDef> {
        self.functions.values().map(Arc::as_ref)
    }

    pub fn theorems(&self) -> impl Iterator<Item = &TheoremRec> {
        self.theorems.values().map(Arc::as_ref)
    }

    pub fn instances(&self) -> impl Iterator<Item = (&InstanceKey, &Symbol)> {
        self.instances.iter()
    }

    /// Arity of a name usable as an instantiation value, if it has a fixed
    /// one.
    pub fn fixed_arity(&self, name: &Symbol) -> Option<usize> {
        self.callee(name).and_then(|c| c.arity().fixed())
    }

    /// What `name` is currently bound to, if anything.
    pub fn name_in_use(&self, name: &Symbol) -> Option<String> {
        if self.funvars.contains_key(name) {
            Some("a function variable".into())
        } else if let Some(def) = self.functions.get(name) {
            Some(format!("a {} function", def.kind.label()))
        } else if self.theorems.contains_key(name) {
            Some("a theorem".into())
        } else if let Some(owner) = self.rules.get(name) {
            Some(format!("the rewrite rule of `{owner}`"))
        } else if builtin_arity(name.as_str()).is_some() {
            Some("a built-in function".into())
        } else {
            None
        }
    }

    fn ensure_unused(&self, name: &Symbol) -> Result<()> {
        match self.name_in_use(name) {
            Some(existing) => Err(Error::NameClash {
                name: name.clone(),
                existing,
            }),
            None => Ok(()),
        }
    }

    pub fn register_funvar(&mut self, name: Symbol, arity: usize) -> Result<Admission> {
        if let Some(existing) = self.funvars.get(&name) {
            if existing.arity == arity {
                return Ok(Admission::Redundant);
            }
        }
        self.ensure_unused(&name)?;
        if arity == 0 {
            return Err(Error::InvariantViolation {
                name,
                condition: "function variables take one or more arguments".into(),
            });
        }
        self.funvars.insert(name.clone(), FunVar { name, arity });
        Ok(Admission::New)
    }

    /// Registers a first-order function (empty `fparams`). Quantifier
    /// definitions also register their witness.
    pub fn register_function(&mut self, def: FunDef) -> Result<Admission> {
        if def.is_second_order() && !matches!(def.kind, FunKind::Witness { .. }) {
            return Err(Error::InvariantViolation {
                name: def.name.clone(),
                condition: "a function with function parameters must be registered as second-order".into(),
            });
        }
        self.insert_function(def, false)
    }

    /// Registers a second-order function and records it in the
    /// second-order table.
    pub fn register_sofun(&mut self, def: FunDef) -> Result<Admission> {
        if def.fparams.is_empty() {
            return Err(Error::InvariantViolation {
                name: def.name.clone(),
                condition: "fparams is non-empty".into(),
            });
        }
        self.insert_function(def, true)
    }

    fn insert_function(&mut self, def: FunDef, second_order: bool) -> Result<Admission> {
        if let Some(existing) = self.functions.get(&def.name) {
            if **existing == def && self.is_sofun(&def.name) == second_order {
                return Ok(Admission::Redundant);
            }
        }
        self.ensure_unused(&def.name)?;
        self.validate_definition(&def)?;
        let witness = def.witness_def();
        if let Some(q) = def.quant() {
            self.ensure_unused(&q.witness)?;
            self.ensure_unused(&q.rule)?;
            if q.witness == q.rule || q.witness == def.name {
                return Err(Error::InvariantViolation {
                    name: def.name.clone(),
                    condition: "witness and rule names are distinct".into(),
                });
            }
            self.rules.insert(q.rule.clone(), def.name.clone());
        }
        let name = def.name.clone();
        self.functions.insert(name.clone(), Arc::new(def));
        if let Some(w) = witness {
            self.functions.insert(w.name.clone(), Arc::new(w));
        }
        if second_order {
            self.sofuns.insert(name);
        }
        Ok(Admission::New)
    }

    fn validate_definition(&self, def: &FunDef) -> Result<()> {
        let violation = |condition: &str| Error::InvariantViolation {
            name: def.name.clone(),
            condition: condition.into(),
        };
        let mut seen = BTreeSet::new();
        for fv in &def.fparams {
            if !seen.insert(fv) {
                return Err(violation("fparams is duplicate-free"));
            }
            if self.funvar(fv).is_none() {
                return Err(Error::InvariantViolation {
                    name: def.name.clone(),
                    condition: format!("fparam `{fv}` is a registered function variable"),
                });
            }
        }
        let mut seen = BTreeSet::new();
        for p in def.params.iter().chain(def.boundvars()) {
            if !seen.insert(p) {
                return Err(violation("parameters and bound variables are distinct"));
            }
            if p.is_self_evaluating() {
                return Err(Error::InvariantViolation {
                    name: def.name.clone(),
                    condition: format!("`{p}` cannot be a parameter"),
                });
            }
        }

        let pending = WithPending {
            inner: self,
            name: &def.name,
            arity: def.arity(),
            fparams: &def.fparams,
        };
        if matches!(def.kind, FunKind::Plain) {
            check_arities(&def.body, &pending)?;
        } else {
            check_arities(&def.body, self)?;
        }
        check_arities(&def.guard, self)?;
        if let Some(m) = &def.measure {
            check_arities(m, self)?;
        }

        let in_scope: BTreeSet<&Symbol> = def.params.iter().chain(def.boundvars()).collect();
        if let Some(v) = def.body.free_vars().iter().find(|v| !in_scope.contains(v)) {
            return Err(Error::InvariantViolation {
                name: def.name.clone(),
                condition: format!("body variable `{v}` is a parameter"),
            });
        }
        for slot in [Some(&def.guard), def.measure.as_ref()].into_iter().flatten() {
            if let Some(v) = slot.free_vars().iter().find(|v| !def.params.contains(v)) {
                return Err(Error::InvariantViolation {
                    name: def.name.clone(),
                    condition: format!("guard/measure variable `{v}` is a parameter"),
                });
            }
        }

        if def.applies_itself() != def.recursive {
            return Err(violation("recursive iff the body applies the function itself"));
        }
        if def.recursive && !matches!(def.kind, FunKind::Plain) {
            return Err(violation("only plain functions may be recursive"));
        }
        if def.measure.is_some() && !def.recursive {
            return Err(violation("a measure is only allowed on a recursive function"));
        }

        if !matches!(def.kind, FunKind::Witness { .. }) {
            let (depends, _) = dependencies(def, self)?;
            let declared: BTreeSet<Symbol> = def.fparams.iter().cloned().collect();
            if depends != declared {
                let condition = match def.kind {
                    FunKind::Plain => "funvars(body) ∪ funvars(measure) ∪ funvars(guard) = fparams",
                    FunKind::Choice { .. } => "funvars(body) = fparams",
                    _ => "funvars(body) ∪ funvars(guard) = fparams",
                };
                return Err(violation(condition));
            }
        }
        Ok(())
    }

    pub fn register_instance(&mut self, key: InstanceKey, instance: Symbol) -> Result<Admission> {
        let Some(sofun) = self.sofun(&key.sofun) else {
            return Err(Error::NotSecondOrder(key.sofun.clone()));
        };
        if key.sigma.is_empty() {
            return Err(Error::InvariantViolation {
                name: instance,
                condition: "an instance replaces at least one function variable".into(),
            });
        }
        if let Some(k) = key.sigma.keys().find(|k| !sofun.fparams.contains(k)) {
            return Err(Error::InvariantViolation {
                name: instance.clone(),
                condition: format!("instantiation key `{k}` is an fparam of `{}`", key.sofun),
            });
        }
        if self.function(&instance).is_none() {
            return Err(Error::InvariantViolation {
                name: instance.clone(),
                condition: "the instance is a registered function".into(),
            });
        }
        match self.instances.get(&key) {
            Some(existing) if *existing == instance => Ok(Admission::Redundant),
            Some(existing) => Err(Error::InstanceClash {
                sofun: key.sofun.clone(),
                sigma: key.sigma.clone(),
                existing: existing.clone(),
            }),
            None => {
                self.instances.insert(key, instance);
                Ok(Admission::New)
            }
        }
    }

    pub fn register_theorem(&mut self, rec: TheoremRec) -> Result<Admission> {
        if let Some(existing) = self.theorems.get(&rec.name) {
            if **existing == rec {
                return Ok(Admission::Redundant);
            }
        }
        self.ensure_unused(&rec.name)?;
        check_arities(&rec.formula, self)?;
        if funvars_of_term(&rec.formula, self)? != rec.funvars {
            return Err(Error::InvariantViolation {
                name: rec.name.clone(),
                condition: "funvars field equals funvars(formula)".into(),
            });
        }
        self.theorems.insert(rec.name.clone(), Arc::new(rec));
        Ok(Admission::New)
    }

    /// The recorded instance of `sofun` for `sigma` restricted to the
    /// function parameters of `sofun`.
    pub fn lookup_instance(&self, sofun: &Symbol, sigma: &Instantiation) -> Option<&Symbol> {
        let def = self.sofun(sofun)?;
        let key = InstanceKey {
            sofun: sofun.clone(),
            sigma: sigma.restrict(&def.fparams),
        };
        self.instances.get(&key)
    }

    /// One record per line; stable across runs.
    pub fn dump(&self) -> String {
        let list = |items: &mut dyn Iterator<Item = &Symbol>| {
            let v: Vec<&str> = items.map(Symbol::as_str).collect();
            format!("({})", v.join(" "))
        };
        let mut out = String::new();
        for fv in self.funvars.values() {
            let _ = writeln!(out, "funvar name={} arity={}", fv.name, fv.arity);
        }
        for def in self.functions.values() {
            let _ = write!(
                out,
                "function name={} kind={} second-order={} fparams={} params={} calls={}",
                def.name,
                def.kind.label(),
                self.is_sofun(&def.name),
                list(&mut def.fparams.iter()),
                list(&mut def.params.iter()),
                list(&mut def.calls().iter()),
            );
            match &def.kind {
                FunKind::Plain => {
                    let _ = write!(out, " recursive={}", def.recursive);
                }
                FunKind::Choice { boundvars } => {
                    let _ = write!(out, " boundvars={}", list(&mut boundvars.iter()));
                }
                FunKind::Quantifier(q) => {
                    let _ = write!(
                        out,
                        " quantifier={} boundvars={} witness={} rule={}",
                        q.quantifier.keyword(),
                        list(&mut q.boundvars.iter()),
                        q.witness,
                        q.rule
                    );
                }
                FunKind::Witness { owner, .. } => {
                    let _ = write!(out, " owner={owner}");
                }
            }
            out.push('\n');
        }
        for (key, name) in &self.instances {
            let _ = writeln!(out, "instance name={} of={} sigma={}", name, key.sofun, key.sigma);
        }
        for thm in self.theorems.values() {
            let _ = writeln!(
                out,
                "theorem name={} funvars={} formula={}",
                thm.name,
                list(&mut thm.funvars.iter()),
                write_form(&thm.formula.to_form())
            );
        }
        out
    }
}

/// The function variables a definition depends on, per kind: body, guard
/// and measure for plain functions; body alone for choice functions; body
/// and guard for quantifier functions. Also returns the recursion flag
/// implied by the body.
pub fn dependencies(def: &FunDef, registry: &Registry) -> Result<(BTreeSet<Symbol>, bool)> {
    let pending = WithPending {
        inner: registry,
        name: &def.name,
        arity: def.arity(),
        fparams: &def.fparams,
    };
    let mut deps = funvars_of_term(&def.body, &pending)?;
    match def.kind {
        FunKind::Choice { .. } => {}
        _ => deps.extend(funvars_of_term(&def.guard, registry)?),
    }
    if let Some(m) = &def.measure {
        deps.extend(funvars_of_term(m, registry)?);
    }
    Ok((deps, def.applies_itself()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::read_form;

    fn term(text: &str) -> Term {
        Term::from_form(&read_form(text).unwrap()).unwrap()
    }

    fn sym(s: &str) -> Symbol {
        Symbol::from(s)
    }

    fn plain(name: &str, fparams: &[&str], params: &[&str], body: &str) -> FunDef {
        let body = term(body);
        let name = sym(name);
        let recursive = body.applied_functions().contains(&name);
        FunDef {
            name,
            kind: FunKind::Plain,
            fparams: fparams.iter().map(|s| sym(s)).collect(),
            params: params.iter().map(|s| sym(s)).collect(),
            body,
            guard: Term::t(),
            measure: None,
            recursive,
        }
    }

    fn base() -> Registry {
        let mut r = Registry::new();
        r.register_funvar(sym("?f"), 1).unwrap();
        r.register_funvar(sym("?p"), 1).unwrap();
        r.register_sofun(plain("quad[?f]", &["?f"], &["x"], "(?f (?f (?f (?f x))))"))
            .unwrap();
        r.register_function(plain("wrap", &[], &["x"], "(list x)")).unwrap();
        r
    }

    #[test]
    fn funvar_registration_is_idempotent() {
        let mut r = Registry::new();
        assert_eq!(r.register_funvar(sym("?io"), 2).unwrap(), Admission::New);
        assert_eq!(r.register_funvar(sym("?io"), 2).unwrap(), Admission::Redundant);
        assert!(matches!(r.register_funvar(sym("?io"), 3), Err(Error::NameClash { .. })));
        assert!(matches!(
            r.register_funvar(sym("cons"), 2),
            Err(Error::NameClash { .. })
        ));
    }

    #[test]
    fn sofun_exactness_is_enforced() {
        let mut r = base();
        let bad = plain("bad", &["?f", "?p"], &["x"], "(?f x)");
        let err = r.register_sofun(bad).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { ref condition, .. } if condition.contains("fparams")));
        assert!(r.function(&sym("bad")).is_none());
    }

    #[test]
    fn recursive_sofun_sees_itself() {
        let mut r = base();
        let all = plain(
            "all[?p]",
            &["?p"],
            &["l"],
            "(cond ((atom l) (null l)) (t (and (?p (car l)) (all[?p] (cdr l)))))",
        );
        assert!(all.recursive);
        r.register_sofun(all.clone()).unwrap();
        assert_eq!(r.register_sofun(all).unwrap(), Admission::Redundant);
    }

    #[test]
    fn instance_registration_and_lookup() {
        let mut r = base();
        r.register_function(plain("quad[wrap]", &[], &["x"], "(wrap (wrap (wrap (wrap x))))"))
            .unwrap();
        let sigma = Instantiation::from_pairs([(sym("?f"), sym("wrap"))]).unwrap();
        let key = InstanceKey {
            sofun: sym("quad[?f]"),
            sigma: sigma.clone(),
        };
        assert_eq!(
            r.register_instance(key.clone(), sym("quad[wrap]")).unwrap(),
            Admission::New
        );
        assert_eq!(
            r.register_instance(key.clone(), sym("quad[wrap]")).unwrap(),
            Admission::Redundant
        );
        assert!(matches!(
            r.register_instance(key, sym("wrap")),
            Err(Error::InstanceClash { .. })
        ));

        let wider = Instantiation::from_pairs([(sym("?p"), sym("wrap")), (sym("?f"), sym("wrap"))]).unwrap();
        assert_eq!(r.lookup_instance(&sym("quad[?f]"), &wider), Some(&sym("quad[wrap]")));
        let other = Instantiation::from_pairs([(sym("?f"), sym("nfix"))]).unwrap();
        assert_eq!(r.lookup_instance(&sym("quad[?f]"), &other), None);
    }

    #[test]
    fn instance_keys_must_be_fparams() {
        let mut r = base();
        r.register_function(plain("g", &[], &["x"], "x")).unwrap();
        let sigma = Instantiation::from_pairs([(sym("?p"), sym("wrap"))]).unwrap();
        let key = InstanceKey {
            sofun: sym("quad[?f]"),
            sigma,
        };
        assert!(matches!(
            r.register_instance(key, sym("g")),
            Err(Error::InvariantViolation { .. })
        ));
    }

    #[test]
    fn quantifier_registers_witness_and_rule() {
        let mut r = base();
        let name = sym("injective[?f]");
        let def = FunDef {
            kind: FunKind::Quantifier(QuantInfo::for_function(
                &name,
                Quantifier::Forall,
                vec![sym("x"), sym("y")],
                RewriteMode::Default,
            )),
            name,
            fparams: vec![sym("?f")],
            params: vec![],
            body: term("(implies (equal (?f x) (?f y)) (equal x y))"),
            guard: Term::t(),
            measure: None,
            recursive: false,
        };
        r.register_sofun(def).unwrap();
        let w = r.function(&sym("injective[?f]-witness")).unwrap();
        assert!(matches!(w.kind, FunKind::Witness { .. }));
        assert!(!r.is_sofun(&w.name));
        assert!(r.name_in_use(&sym("injective[?f]-necc")).is_some());
    }

    #[test]
    fn theorem_funvars_are_cached() {
        let mut r = base();
        let rec = TheoremRec::new(sym("thm"), term("(equal (quad[?f] x) (quad[?f] x))"), &r).unwrap();
        assert_eq!(rec.funvars, BTreeSet::from([sym("?f")]));
        r.register_theorem(rec.clone()).unwrap();
        let mut tampered = rec;
        tampered.name = sym("thm2");
        tampered.funvars.clear();
        assert!(matches!(
            r.register_theorem(tampered),
            Err(Error::InvariantViolation { .. })
        ));
    }

    #[test]
    fn atomically_rolls_back() {
        let mut r = base();
        let before = r.dump();
        let result = r.atomically(|s| {
            s.register_funvar(sym("?z"), 1)?;
            s.register_funvar(sym("quad[?f]"), 1)
        });
        assert!(result.is_err());
        assert_eq!(r.dump(), before);
    }
}
