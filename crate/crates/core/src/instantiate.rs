//! Instantiations of function variables, their application to terms, and
//! the pair closure and constraint discharge behind theorem instances.
//!
//! Applying an instantiation replaces a function variable key by its value
//! wherever the key is applied, and replaces every second-order function
//! whose function parameters meet the keys by its recorded instance (looked
//! up under the instantiation restricted to that function's parameters).
//! Witness functions follow their owner: the witness of a quantifier
//! function maps to the witness of the owner's instance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::{Quantifier, Term, Value};
use crate::registry::{FunDef, FunKind, InstanceKey, Registry, RewriteMode, TheoremRec};
use crate::sexpr::{Form, FormKind};
use crate::symbol::Symbol;

/// A finite map from function variables to function names, kept sorted by
/// key so that equal maps have one canonical form.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Instantiation(BTreeMap<Symbol, Symbol>);

impl Instantiation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails on a repeated key.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Symbol, Symbol)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut out = Instantiation::new();
        for (k, v) in pairs {
            if map.insert(k.clone(), v.clone()).is_some() {
                out.0 = map;
                return Err(Error::InvalidInstantiation {
                    sigma: out.to_string(),
                    message: format!("key `{k}` appears more than once"),
                });
            }
        }
        Ok(Instantiation(map))
    }

    /// Reads `(fv . f)` pairs.
    pub fn from_forms(forms: &[Form]) -> Result<Self> {
        let pairs = forms
            .iter()
            .map(|f| match &f.kind {
                FormKind::Dotted(head, tail) if head.len() == 1 => match (head[0].as_symbol(), tail.as_symbol()) {
                    (Some(k), Some(v)) => Ok((k.clone(), v.clone())),
                    _ => Err(bad_pair(f)),
                },
                _ => Err(bad_pair(f)),
            })
            .collect::<Result<Vec<_>>>()?;
        Instantiation::from_pairs(pairs)
    }

    pub fn get(&self, key: &Symbol) -> Option<&Symbol> {
        self.0.get(key)
    }

    pub fn contains_key(&self, key: &Symbol) -> bool {
        self.0.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Symbol> {
        self.0.keys()
    }

    pub fn values(&self) -> impl Iterator<Item = &Symbol> {
        self.0.values()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Symbol)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The sub-map whose keys are among `fparams`.
    pub fn restrict<'a>(&self, fparams: impl IntoIterator<Item = &'a Symbol>) -> Instantiation {
        let keep: BTreeSet<&Symbol> = fparams.into_iter().collect();
        Instantiation(
            self.0
                .iter()
                .filter(|(k, _)| keep.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }

    pub fn meets(&self, fparams: &[Symbol]) -> bool {
        fparams.iter().any(|fv| self.0.contains_key(fv))
    }

    /// Keys must be function variables; values must be known names of the
    /// same fixed arity.
    pub fn validate(&self, registry: &Registry) -> Result<()> {
        for (k, v) in &self.0 {
            let Some(fv) = registry.funvar(k) else {
                return Err(self.invalid(format!("`{k}` is not a function variable")));
            };
            match registry.fixed_arity(v) {
                None if registry.name_in_use(v).is_none() => {
                    return Err(self.invalid(format!("`{v}` is not a known function")));
                }
                None => {
                    return Err(self.invalid(format!("`{v}` has no fixed arity")));
                }
                Some(arity) if arity != fv.arity => {
                    return Err(self.invalid(format!("`{v}` takes {arity} argument(s) but `{k}` takes {}", fv.arity)));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    fn invalid(&self, message: String) -> Error {
        Error::InvalidInstantiation {
            sigma: self.to_string(),
            message,
        }
    }

    /// `(k . v) ...` without the outer parentheses.
    pub fn pairs_text(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("({k} . {v})"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn bad_pair(f: &Form) -> Error {
    Error::InvalidInstantiation {
        sigma: f.to_string(),
        message: "expected a pair (function-variable . function)".into(),
    }
}

impl fmt::Display for Instantiation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.pairs_text())
    }
}

/// An instance being introduced, visible to lookups before it is recorded
/// so that recursive calls in the body resolve to it.
#[derive(Debug, Clone)]
pub struct PendingInstance {
    pub key: InstanceKey,
    pub name: Symbol,
    pub witness: Option<Symbol>,
}

pub struct Instantiator<'a> {
    registry: &'a Registry,
    sigma: &'a Instantiation,
    pending: Option<&'a PendingInstance>,
}

impl<'a> Instantiator<'a> {
    pub fn new(registry: &'a Registry, sigma: &'a Instantiation) -> Self {
        Instantiator {
            registry,
            sigma,
            pending: None,
        }
    }

    pub fn with_pending(mut self, pending: &'a PendingInstance) -> Self {
        self.pending = Some(pending);
        self
    }

    pub fn apply(&self, term: &Term) -> Result<Term> {
        if self.sigma.is_empty() {
            return Ok(term.clone());
        }
        term.try_map_apps(&mut |name, args| Ok(Term::App(self.replacement(name)?, args)))
    }

    /// What an applied name becomes under the instantiation.
    pub fn replacement(&self, name: &Symbol) -> Result<Symbol> {
        if let Some(value) = self.sigma.get(name) {
            return Ok(value.clone());
        }
        let Some(def) = self.registry.function(name) else {
            return Ok(name.clone());
        };
        if !self.sigma.meets(&def.fparams) {
            return Ok(name.clone());
        }
        match &def.kind {
            FunKind::Witness { owner, .. } => self.witness_of_instance(owner),
            _ if self.registry.is_sofun(name) => self.instance_of(name),
            _ => Ok(name.clone()),
        }
    }

    /// The instance of `sofun` under the instantiation restricted to its
    /// function parameters.
    pub fn instance_of(&self, sofun: &Symbol) -> Result<Symbol> {
        let fparams = self
            .registry
            .function(sofun)
            .map(|d| d.fparams.as_slice())
            .unwrap_or_default();
        let restricted = self.sigma.restrict(fparams);
        if restricted.is_empty() {
            return Ok(sofun.clone());
        }
        if let Some(p) = self.pending {
            if p.key.sofun == *sofun && p.key.sigma == restricted {
                return Ok(p.name.clone());
            }
        }
        self.registry
            .lookup_instance(sofun, &restricted)
            .cloned()
            .ok_or_else(|| Error::MissingInstance {
                sofun: sofun.clone(),
                sigma: restricted,
            })
    }

    fn witness_of_instance(&self, owner: &Symbol) -> Result<Symbol> {
        let instance = self.instance_of(owner)?;
        if let Some(p) = self.pending {
            if p.name == instance {
                if let Some(w) = &p.witness {
                    return Ok(w.clone());
                }
            }
        }
        self.registry
            .function(&instance)
            .and_then(FunDef::quant)
            .map(|q| q.witness.clone())
            .ok_or_else(|| Error::InvariantViolation {
                name: instance,
                condition: format!("the instance of quantifier function `{owner}` has a witness"),
            })
    }
}

/// Applies `sigma` to `term`, replacing explicit and implicit occurrences of
/// its keys.
pub fn apply_instantiation(term: &Term, sigma: &Instantiation, registry: &Registry) -> Result<Term> {
    Instantiator::new(registry, sigma).apply(term)
}

/// `sigma` restricted to `fparams`.
pub fn restrict(sigma: &Instantiation, fparams: &BTreeSet<Symbol>) -> Instantiation {
    sigma.restrict(fparams)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRole {
    FunVar,
    SoFun,
    Witness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pair {
    pub replaced: Symbol,
    pub replacement: Symbol,
    pub role: PairRole,
}

/// The replacement pairs of a functional instance: the instantiation's own
/// pairs, then one pair per affected second-order function reachable from
/// the theorem, then the witness pairs of the quantifier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairClosure {
    pub pairs: Vec<Pair>,
}

impl PairClosure {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pair> {
        self.pairs.iter()
    }

    /// `(replaced replacement)` tuples, for comparisons in tests and reports.
    pub fn as_tuples(&self) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|p| (p.replaced.to_string(), p.replacement.to_string()))
            .collect()
    }
}

impl fmt::Display for PairClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .pairs
            .iter()
            .map(|p| format!("({} {})", p.replaced, p.replacement))
            .collect();
        write!(f, "({})", items.join(" "))
    }
}

/// Computes the pairs needed to instantiate `thm` with `sigma`. The search
/// is breadth-first from the formula through function bodies, visiting each
/// level in name order. Guards and measures are not searched: they are not
/// part of any constraint.
pub fn compute_more_pairs(thm: &TheoremRec, sigma: &Instantiation, registry: &Registry) -> Result<PairClosure> {
    if let Some(k) = sigma.keys().find(|k| !thm.funvars.contains(*k)) {
        return Err(Error::InvalidInstantiation {
            sigma: sigma.to_string(),
            message: format!("theorem `{}` does not depend on `{k}`", thm.name),
        });
    }
    let inst = Instantiator::new(registry, sigma);
    let mut pairs: Vec<Pair> = sigma
        .iter()
        .map(|(k, v)| Pair {
            replaced: k.clone(),
            replacement: v.clone(),
            role: PairRole::FunVar,
        })
        .collect();
    let mut witnesses = Vec::new();

    let mut visited = BTreeSet::new();
    let mut frontier: BTreeSet<Symbol> = thm.formula.applied_functions().into_iter().collect();
    while !frontier.is_empty() {
        let mut next = BTreeSet::new();
        for name in frontier {
            if !visited.insert(name.clone()) {
                continue;
            }
            let Some(def) = registry.function(&name) else {
                continue;
            };
            if registry.is_sofun(&name) && sigma.meets(&def.fparams) {
                let instance = inst.instance_of(&name)?;
                if let Some(q) = def.quant() {
                    let inst_witness = registry
                        .function(&instance)
                        .and_then(FunDef::quant)
                        .map(|iq| iq.witness.clone())
                        .ok_or_else(|| Error::InvariantViolation {
                            name: instance.clone(),
                            condition: format!("the instance of quantifier function `{name}` has a witness"),
                        })?;
                    witnesses.push(Pair {
                        replaced: q.witness.clone(),
                        replacement: inst_witness,
                        role: PairRole::Witness,
                    });
                }
                pairs.push(Pair {
                    replaced: name.clone(),
                    replacement: instance,
                    role: PairRole::SoFun,
                });
            }
            next.extend(
                def.body
                    .applied_functions()
                    .into_iter()
                    .filter(|c| !visited.contains(c) && registry.function(c).is_some()),
            );
        }
        frontier = next;
    }
    pairs.extend(witnesses);
    Ok(PairClosure { pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObligationKind {
    Definition,
    ChoiceAxiom,
    RewriteRule,
}

impl fmt::Display for ObligationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObligationKind::Definition => "definition",
            ObligationKind::ChoiceAxiom => "choice-axiom",
            ObligationKind::RewriteRule => "rewrite-rule",
        })
    }
}

/// Terms standing for the chosen values of `boundvars`: the call itself for
/// one variable, `(mv-nth i call)` for several.
fn chosen_values(call: &Term, boundvars: &[Symbol]) -> BTreeMap<Symbol, Term> {
    if let [single] = boundvars {
        return BTreeMap::from([(single.clone(), call.clone())]);
    }
    boundvars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let index = Term::Const(Value::Int(i as i64));
            (v.clone(), Term::app("mv-nth", vec![index, call.clone()]))
        })
        .collect()
}

/// The constraints a function satisfies: its definitional equation (plain),
/// its choice axiom (choice and witness functions), or its definitional
/// equation in terms of its witness together with its rewrite rule
/// (quantifier functions). Guards are not constraints.
pub fn constraints_of(def: &FunDef) -> Vec<(ObligationKind, Term)> {
    let call = def.self_call();
    match &def.kind {
        FunKind::Plain => vec![(ObligationKind::Definition, Term::equal(call, def.body.clone()))],
        FunKind::Choice { boundvars } | FunKind::Witness { boundvars, .. } => {
            let chosen = def.body.subst_vars(&chosen_values(&call, boundvars));
            vec![(ObligationKind::ChoiceAxiom, Term::implies(def.body.clone(), chosen))]
        }
        FunKind::Quantifier(q) => {
            let witness_call = Term::App(q.witness.clone(), def.params.iter().cloned().map(Term::Var).collect());
            let witnessed = def.body.subst_vars(&chosen_values(&witness_call, &q.boundvars));
            let matrix = def.body.clone();
            let rule = match (q.quantifier, q.rewrite) {
                (Quantifier::Forall, RewriteMode::Default) => {
                    Term::implies(Term::negate(matrix), Term::negate(call.clone()))
                }
                (Quantifier::Forall, RewriteMode::Direct) => Term::implies(call.clone(), matrix),
                (Quantifier::Exists, _) => Term::implies(matrix, call.clone()),
            };
            vec![
                (ObligationKind::Definition, Term::equal(call, witnessed)),
                (ObligationKind::RewriteRule, rule),
            ]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub replaced: Symbol,
    pub replacement: Symbol,
    pub kind: ObligationKind,
    /// The constraint of `replaced` with the instantiation applied.
    pub expected: Term,
    /// The corresponding recorded constraint of `replacement`, if it has one.
    pub actual: Option<Term>,
    pub discharged: bool,
}

/// Checks, for every non-function-variable pair, that the replacement's
/// constraints are the instantiated constraints of the replaced function.
pub fn discharge_obligations(
    closure: &PairClosure,
    sigma: &Instantiation,
    registry: &Registry,
) -> Result<Vec<Obligation>> {
    let inst = Instantiator::new(registry, sigma);
    let mut out = Vec::new();
    for pair in closure.iter().filter(|p| p.role != PairRole::FunVar) {
        let replaced = registry
            .function(&pair.replaced)
            .ok_or_else(|| Error::Kernel(crate::kernel::KernelError::UnknownFunction(pair.replaced.clone())))?;
        let actual = registry
            .function(&pair.replacement)
            .map(constraints_of)
            .unwrap_or_default();
        for (i, (kind, constraint)) in constraints_of(replaced).into_iter().enumerate() {
            let expected = inst.apply(&constraint)?;
            let actual = actual.get(i).filter(|(k, _)| *k == kind).map(|(_, t)| t.clone());
            let discharged = actual.as_ref().is_some_and(|a| a.alpha_eq(&expected));
            out.push(Obligation {
                replaced: pair.replaced.clone(),
                replacement: pair.replacement.clone(),
                kind,
                expected,
                actual,
                discharged,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::QuantInfo;
    use crate::sexpr::read_form;

    fn term(text: &str) -> Term {
        Term::from_form(&read_form(text).unwrap()).unwrap()
    }

    fn sym(s: &str) -> Symbol {
        Symbol::from(s)
    }

    fn sigma(pairs: &[(&str, &str)]) -> Instantiation {
        Instantiation::from_pairs(pairs.iter().map(|(k, v)| (sym(k), sym(v)))).unwrap()
    }

    fn plain(name: &str, fparams: &[&str], params: &[&str], body: &str) -> FunDef {
        let body = term(body);
        let name = sym(name);
        FunDef {
            recursive: body.applied_functions().contains(&name),
            name,
            kind: FunKind::Plain,
            fparams: fparams.iter().map(|s| sym(s)).collect(),
            params: params.iter().map(|s| sym(s)).collect(),
            body,
            guard: Term::t(),
            measure: None,
        }
    }

    fn registry() -> Registry {
        let mut r = Registry::new();
        r.register_funvar(sym("?f"), 1).unwrap();
        r.register_funvar(sym("?p"), 1).unwrap();
        r.register_sofun(plain("sof[?f]", &["?f"], &["y"], "(?f y)")).unwrap();
        r.register_function(plain("f", &[], &["x"], "(cons x x)")).unwrap();
        r.register_function(plain("sof[f]", &[], &["y"], "(f y)")).unwrap();
        r.register_instance(
            InstanceKey {
                sofun: sym("sof[?f]"),
                sigma: sigma(&[("?f", "f")]),
            },
            sym("sof[f]"),
        )
        .unwrap();
        r
    }

    #[test]
    fn restrict_filters_keys() {
        let s = sigma(&[("?f", "code-char"), ("?p", "octetp")]);
        assert_eq!(s.restrict(&[sym("?p")]), sigma(&[("?p", "octetp")]));
        assert_eq!(s.restrict(&[sym("?f"), sym("?p")]), s);
        assert!(s.restrict(&[]).is_empty());
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(Instantiation::from_pairs([(sym("?f"), sym("a")), (sym("?f"), sym("b"))]).is_err());
    }

    #[test]
    fn replaces_explicit_and_implicit_occurrences() {
        let r = registry();
        let t = term("(cons (?f x) (sof[?f] y))");
        let out = apply_instantiation(&t, &sigma(&[("?f", "f")]), &r).unwrap();
        assert_eq!(out, term("(cons (f x) (sof[f] y))"));
    }

    #[test]
    fn empty_instantiation_is_identity() {
        let r = registry();
        let t = term("(cons (?f x) (sof[?f] y))");
        assert_eq!(apply_instantiation(&t, &Instantiation::new(), &r).unwrap(), t);
    }

    #[test]
    fn missing_instance_names_restricted_key() {
        let r = registry();
        let t = term("(sof[?f] x)");
        let err = apply_instantiation(&t, &sigma(&[("?f", "car"), ("?p", "atom")]), &r).unwrap_err();
        assert_eq!(
            err,
            Error::MissingInstance {
                sofun: sym("sof[?f]"),
                sigma: sigma(&[("?f", "car")])
            }
        );
        assert!(err.to_string().contains("(defun-inst <name> (sof[?f] (?f . car)))"));
    }

    #[test]
    fn unaffected_sofun_is_unchanged() {
        let r = registry();
        let t = term("(and (?p x) (sof[?f] x))");
        let out = apply_instantiation(&t, &sigma(&[("?p", "atom")]), &r).unwrap();
        assert_eq!(out, term("(and (atom x) (sof[?f] x))"));
    }

    #[test]
    fn validate_checks_arity_and_kinds() {
        let r = registry();
        assert!(sigma(&[("?f", "f")]).validate(&r).is_ok());
        assert!(sigma(&[("?f", "cons")]).validate(&r).is_err());
        assert!(sigma(&[("?f", "list")]).validate(&r).is_err());
        assert!(sigma(&[("f", "car")]).validate(&r).is_err());
        assert!(sigma(&[("?f", "nosuch")]).validate(&r).is_err());
    }

    #[test]
    fn choice_axiom_shape() {
        let def = FunDef {
            name: sym("fixpoint[?f]"),
            kind: FunKind::Choice {
                boundvars: vec![sym("x")],
            },
            fparams: vec![sym("?f")],
            params: vec![],
            body: term("(equal (?f x) x)"),
            guard: Term::t(),
            measure: None,
            recursive: false,
        };
        let cs = constraints_of(&def);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].0, ObligationKind::ChoiceAxiom);
        assert_eq!(
            cs[0].1,
            term("(implies (equal (?f x) x) (equal (?f (fixpoint[?f])) (fixpoint[?f])))")
        );
    }

    #[test]
    fn plain_definition_shape() {
        let def = plain("quad[?f]", &["?f"], &["x"], "(?f (?f (?f (?f x))))");
        assert_eq!(
            constraints_of(&def),
            vec![(
                ObligationKind::Definition,
                term("(equal (quad[?f] x) (?f (?f (?f (?f x)))))")
            )]
        );
    }

    #[test]
    fn quantifier_constraints_use_witness_and_rule() {
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
        let cs = constraints_of(&def);
        assert_eq!(cs[0].0, ObligationKind::Definition);
        assert_eq!(
            cs[0].1,
            term(
                "(equal (injective[?f]) (implies (equal (?f (mv-nth 0 (injective[?f]-witness))) \
                 (?f (mv-nth 1 (injective[?f]-witness)))) \
                 (equal (mv-nth 0 (injective[?f]-witness)) (mv-nth 1 (injective[?f]-witness)))))"
            )
        );
        assert_eq!(
            cs[1],
            (
                ObligationKind::RewriteRule,
                term("(implies (not (implies (equal (?f x) (?f y)) (equal x y))) (not (injective[?f])))")
            )
        );
    }

    #[test]
    fn hand_registered_mismatch_is_not_discharged() {
        let mut r = registry();
        r.register_function(plain("sof[bad]", &[], &["y"], "(f (f y))"))
            .unwrap();
        r.register_instance(
            InstanceKey {
                sofun: sym("sof[?f]"),
                sigma: sigma(&[("?f", "car")]),
            },
            sym("sof[bad]"),
        )
        .unwrap();
        let s = sigma(&[("?f", "car")]);
        let closure = PairClosure {
            pairs: vec![
                Pair {
                    replaced: sym("?f"),
                    replacement: sym("car"),
                    role: PairRole::FunVar,
                },
                Pair {
                    replaced: sym("sof[?f]"),
                    replacement: sym("sof[bad]"),
                    role: PairRole::SoFun,
                },
            ],
        };
        let obligations = discharge_obligations(&closure, &s, &r).unwrap();
        assert_eq!(obligations.len(), 1);
        assert!(!obligations[0].discharged);

        let good = PairClosure {
            pairs: vec![Pair {
                replaced: sym("sof[?f]"),
                replacement: sym("sof[f]"),
                role: PairRole::SoFun,
            }],
        };
        let obligations = discharge_obligations(&good, &sigma(&[("?f", "f")]), &r).unwrap();
        assert!(obligations.iter().all(|o| o.discharged));
    }

    #[test]
    fn function_variable_pairs_yield_no_obligations() {
        let r = registry();
        let closure = PairClosure {
            pairs: vec![Pair {
                replaced: sym("?f"),
                replacement: sym("f"),
                role: PairRole::FunVar,
            }],
        };
        assert!(discharge_obligations(&closure, &sigma(&[("?f", "f")]), &r)
            .unwrap()
            .is_empty());
    }
}
