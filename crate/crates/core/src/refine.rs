//! Refinement chains: a sequence of specification predicates, each step
//! theorem showing one predicate implies the previous, composed into an
//! end-to-end implication and validated against an implementation.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::eval::{check_bounded, Limits, Universe, Verdict};
use crate::instantiate::{apply_instantiation, Instantiation};
use crate::kernel::Term;
use crate::registry::{FunKind, Registry, TheoremRec};
use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefinementChain {
    /// Name of the end-to-end theorem.
    pub name: Symbol,
    /// spec0 (the requirements) through specm (the implementation).
    pub specs: Vec<Term>,
    /// Step j shows `(implies specj spec(j-1))`.
    pub steps: Vec<Symbol>,
    /// Function variables mapped to their executable solutions.
    pub implementation: Instantiation,
}

/// Conjuncts of `term`, with nested `and`s flattened.
fn conjuncts(term: &Term) -> BTreeSet<&Term> {
    match term {
        Term::And(ts) => ts.iter().flat_map(conjuncts).collect(),
        t => BTreeSet::from([t]),
    }
}

/// Replaces a nullary plain predicate application by its body.
fn unfold(term: &Term, registry: &Registry) -> Term {
    match term {
        Term::App(f, args) if args.is_empty() => match registry.function(f) {
            Some(def) if matches!(def.kind, FunKind::Plain) && !def.recursive => def.body.clone(),
            _ => term.clone(),
        },
        Term::And(ts) => Term::And(ts.iter().map(|t| unfold(t, registry)).collect()),
        t => t.clone(),
    }
}

fn equal_conjuncts(a: &Term, b: &Term) -> bool {
    let (a, b) = (conjuncts(a), conjuncts(b));
    a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.alpha_eq(y))
}

/// Equal as conjunct sets, either as written or with spec predicates
/// unfolded one level.
fn same_conjuncts(a: &Term, b: &Term, registry: &Registry) -> bool {
    equal_conjuncts(a, b) || equal_conjuncts(&unfold(a, registry), &unfold(b, registry))
}

/// Checks each step's shape and registers `(implies specm spec0)` under the
/// chain's name.
pub fn compose_chain(chain: &RefinementChain, registry: &mut Registry) -> Result<TheoremRec> {
    let Some((spec0, _)) = chain.specs.split_first() else {
        return Err(Error::ChainIncomplete {
            chain: chain.name.clone(),
            message: "no specifications".into(),
        });
    };
    if chain.steps.len() + 1 != chain.specs.len() {
        return Err(Error::ChainIncomplete {
            chain: chain.name.clone(),
            message: format!(
                "{} specifications need {} steps, found {}",
                chain.specs.len(),
                chain.specs.len() - 1,
                chain.steps.len()
            ),
        });
    }
    for (j, step) in chain.steps.iter().enumerate() {
        let expected = Term::implies(chain.specs[j + 1].clone(), chain.specs[j].clone());
        let shape_error = |found: String| Error::ChainShapeError {
            step: j + 1,
            expected: expected.to_string(),
            found,
        };
        let thm = registry
            .theorem(step)
            .ok_or_else(|| shape_error(format!("no theorem named `{step}`")))?;
        let Term::Implies(hyp, concl) = &thm.formula else {
            return Err(shape_error(thm.formula.to_string()));
        };
        if !same_conjuncts(hyp, &chain.specs[j + 1], registry) || !same_conjuncts(concl, &chain.specs[j], registry) {
            return Err(shape_error(thm.formula.to_string()));
        }
    }
    let last = chain.specs.last().expect("non-empty");
    let rec = TheoremRec::new(chain.name.clone(), Term::implies(last.clone(), spec0.clone()), registry)?;
    registry.register_theorem(rec.clone())?;
    Ok(rec)
}

/// Bounded-checks the implementation's instance of spec0's defining body.
pub fn verify_implementation(
    chain: &RefinementChain,
    universe: &Universe,
    registry: &Registry,
    limits: Limits,
) -> Result<Verdict> {
    let incomplete = |message: String| Error::ChainIncomplete {
        chain: chain.name.clone(),
        message,
    };
    let spec0 = chain
        .specs
        .first()
        .ok_or_else(|| incomplete("no specifications".into()))?;
    let Term::App(name, args) = spec0 else {
        return Err(incomplete(format!("spec0 `{spec0}` is not a predicate application")));
    };
    let def = registry
        .sofun(name)
        .ok_or_else(|| Error::NotSecondOrder(name.clone()))?;
    if let Some(fv) = def.fparams.iter().find(|fv| !chain.implementation.contains_key(fv)) {
        return Err(incomplete(format!("no implementation for `{fv}`")));
    }
    let sigma = chain.implementation.restrict(&def.fparams);
    let body = match registry
        .lookup_instance(name, &sigma)
        .and_then(|i| registry.function(i))
    {
        Some(instance) => instance.quantified_body(),
        None => apply_instantiation(&def.quantified_body(), &sigma, registry)?,
    };
    let bindings: BTreeMap<Symbol, Term> = def.params.iter().cloned().zip(args.iter().cloned()).collect();
    let formula = body.subst_vars(&bindings);
    Ok(check_bounded(&formula, universe, registry, limits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Value;
    use crate::events::process_source;
    use crate::sexpr::read_form;

    const SPEC: &str = "
        (defunvar ?h (*) => *)
        (defun-sk2 spec[?h] (?h) () (forall x (equal (?h x) (cons x x))))
        (defun-sk2 def-?h (?h) () (forall x (equal (?h x) (cons x x))))
        (defun2 spec1[?h] (?h) () (and (def-?h) (spec[?h])))
        (defun dup (x) (cons x x))
        (defun-sk2 def-?h-dup (?h) () (forall x (equal (?h x) (dup x))))
        (defun2 spec2[?h] (?h) () (and (def-?h-dup) (def-?h)))
        (defthm s1 (implies (spec1[?h]) (spec[?h])))
        (defthm s2 (implies (and (def-?h) (def-?h-dup)) (spec1[?h])))
    ";

    fn term(text: &str) -> Term {
        Term::from_form(&read_form(text).unwrap()).unwrap()
    }

    fn chain(specs: &[&str], steps: &[&str], implementation: &[(&str, &str)]) -> RefinementChain {
        RefinementChain {
            name: "end-to-end".into(),
            specs: specs.iter().map(|s| term(s)).collect(),
            steps: steps.iter().map(|s| Symbol::from(*s)).collect(),
            implementation: Instantiation::from_pairs(
                implementation.iter().map(|(k, v)| (Symbol::from(*k), Symbol::from(*v))),
            )
            .unwrap(),
        }
    }

    fn universe() -> Universe {
        Universe::new("u".into(), vec![Value::Int(0), Value::Int(1), Value::nil()]).unwrap()
    }

    #[test]
    fn composes_with_reordered_conjuncts() {
        let (mut r, _) = process_source(SPEC).unwrap();
        let c = chain(&["(spec[?h])", "(spec1[?h])", "(spec2[?h])"], &["s1", "s2"], &[]);
        let rec = compose_chain(&c, &mut r).unwrap();
        assert_eq!(rec.formula, term("(implies (spec2[?h]) (spec[?h]))"));
        assert_eq!(rec.funvars, BTreeSet::from([Symbol::from("?h")]));
        assert!(r.theorem(&"end-to-end".into()).is_some());
    }

    #[test]
    fn single_step_chain_is_the_step() {
        let (mut r, _) = process_source(SPEC).unwrap();
        let c = chain(&["(spec[?h])", "(spec1[?h])"], &["s1"], &[]);
        let rec = compose_chain(&c, &mut r).unwrap();
        assert_eq!(rec.formula, r.theorem(&"s1".into()).unwrap().formula);
    }

    #[test]
    fn out_of_order_steps() {
        let (mut r, _) = process_source(SPEC).unwrap();
        let c = chain(&["(spec[?h])", "(spec1[?h])", "(spec2[?h])"], &["s2", "s1"], &[]);
        assert!(matches!(
            compose_chain(&c, &mut r),
            Err(Error::ChainShapeError { step: 1, .. })
        ));
    }

    #[test]
    fn degenerate_chain_verifies() {
        let (mut r, _) = process_source(SPEC).unwrap();
        let c = chain(&["(spec[?h])"], &[], &[("?h", "dup")]);
        let rec = compose_chain(&c, &mut r).unwrap();
        assert_eq!(rec.formula, term("(implies (spec[?h]) (spec[?h]))"));
        assert_eq!(
            verify_implementation(&c, &universe(), &r, Limits::default()).unwrap(),
            Verdict::Pass
        );
    }

    #[test]
    fn wrong_implementation_fails() {
        let (r, _) = process_source(&format!("{SPEC} (defun bad (x) (cons x 0))")).unwrap();
        let c = chain(&["(spec[?h])"], &[], &[("?h", "bad")]);
        assert!(matches!(
            verify_implementation(&c, &universe(), &r, Limits::default()).unwrap(),
            Verdict::Fail(_)
        ));
        let c = chain(&["(spec[?h])"], &[], &[]);
        assert!(matches!(
            verify_implementation(&c, &universe(), &r, Limits::default()),
            Err(Error::ChainIncomplete { .. })
        ));
    }
}
