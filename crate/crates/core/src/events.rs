//! Processing of top-level event forms: function variables, second-order
//! function definitions (plain, choice, quantifier), their instances,
//! theorems, and theorem instances.
//!
//! Every event runs atomically: a rejected event leaves the registry exactly
//! as it was.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::eval::{check_bounded, Limits, Universe, Verdict};
use crate::instantiate::{
    apply_instantiation, compute_more_pairs, discharge_obligations, Instantiation, Instantiator, Obligation,
    PairClosure, PendingInstance,
};
use crate::kernel::{parse_bound_vars, Quantifier, Term};
use crate::registry::{
    dependencies, Admission, FunDef, FunKind, InstanceKey, QuantInfo, Registry, RewriteMode, TheoremRec,
};
use crate::sexpr::{read_forms, Form, FormKind};
use crate::symbol::Symbol;

/// Event heads understood by [`process_event`].
pub const EVENT_KINDS: &[&str] = &[
    "defunvar",
    "defun",
    "defun2",
    "defchoose",
    "defchoose2",
    "defun-sk",
    "defun-sk2",
    "defun-inst",
    "defthm",
    "defthm-inst",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Admitted,
    Redundant,
    Rejected,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Admitted => "admitted",
            Status::Redundant => "redundant",
            Status::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventOutcome {
    pub name: String,
    /// The event head, e.g. `defun2`.
    pub kind: String,
    pub status: Status,
    /// Names registered by the event, in registration order.
    pub generated: Vec<Symbol>,
    pub diagnostics: Vec<String>,
    pub closure: Option<PairClosure>,
    pub obligations: Vec<Obligation>,
    pub verdict: Option<Verdict>,
    pub error: Option<Error>,
}

impl EventOutcome {
    pub fn new(name: impl Into<String>, kind: impl Into<String>) -> Self {
        EventOutcome {
            name: name.into(),
            kind: kind.into(),
            status: Status::Admitted,
            generated: Vec::new(),
            diagnostics: Vec::new(),
            closure: None,
            obligations: Vec::new(),
            verdict: None,
            error: None,
        }
    }

    /// The outcome recorded for a form that failed with `error`.
    pub fn rejected(form: &Form, error: Error) -> Self {
        let (name, kind) = describe(form);
        let mut out = EventOutcome::new(name, kind);
        out.status = Status::Rejected;
        out.error = Some(error);
        out
    }

    fn admitted(&mut self, admission: Admission) {
        if admission == Admission::Redundant && self.generated.is_empty() {
            self.status = Status::Redundant;
        }
    }
}

/// Name and head of a form, for reports.
pub fn describe(form: &Form) -> (String, String) {
    let items = form.as_list().unwrap_or_default();
    let kind = items
        .first()
        .and_then(Form::as_symbol)
        .map_or_else(|| "form".to_string(), Symbol::to_string);
    let name = items.get(1).map_or_else(
        || kind.clone(),
        |f| f.as_symbol().map_or_else(|| f.to_string(), Symbol::to_string),
    );
    (name, kind)
}

/// Settings that affect event processing.
#[derive(Debug, Clone, Copy, Default)]
pub struct EventContext<'a> {
    /// When set, theorems are checked over this universe and a failing
    /// check rejects the event.
    pub universe: Option<&'a Universe>,
    pub limits: Limits,
}

/// Processes one event form against `registry`, atomically.
pub fn process_event(registry: &mut Registry, form: &Form, ctx: &EventContext<'_>) -> Result<EventOutcome> {
    registry.atomically(|r| dispatch(r, form, ctx))
}

/// Processes every form in `text` with default settings, stopping at the
/// first rejection.
pub fn process_source(text: &str) -> Result<(Registry, Vec<EventOutcome>)> {
    let mut registry = Registry::new();
    let mut outcomes = Vec::new();
    for form in read_forms(text)? {
        outcomes.push(process_event(&mut registry, &form, &EventContext::default())?);
    }
    Ok((registry, outcomes))
}

fn malformed(name: impl fmt::Display, message: impl Into<String>) -> Error {
    Error::MalformedEvent {
        name: name.to_string(),
        message: message.into(),
    }
}

fn dispatch(registry: &mut Registry, form: &Form, ctx: &EventContext<'_>) -> Result<EventOutcome> {
    let (name, kind) = describe(form);
    let Some(items) = form.as_list().filter(|items| !items.is_empty()) else {
        return Err(malformed(&name, "an event is a non-empty list"));
    };
    let args = &items[1..];
    let mut out = EventOutcome::new(&name, &kind);
    let event_name = || {
        args.first()
            .and_then(Form::as_symbol)
            .filter(|s| !s.is_self_evaluating())
            .cloned()
            .ok_or_else(|| malformed(&name, "expected a name"))
    };
    match kind.as_str() {
        "defunvar" => defunvar(registry, event_name()?, &args[1..], &mut out)?,
        "defun" => defun(registry, event_name()?, None, &args[1..], &mut out)?,
        "defun2" => {
            let name = event_name()?;
            let (fparams, rest) = split_fparams(&name, &args[1..])?;
            defun(registry, name, Some(fparams), rest, &mut out)?
        }
        "defchoose" => defchoose(registry, event_name()?, None, &args[1..], &mut out)?,
        "defchoose2" => {
            let name = event_name()?;
            let Some((bvars, rest)) = args[1..].split_first() else {
                return Err(malformed(&name, "expected bound variables"));
            };
            let (fparams, rest) = split_fparams(&name, rest)?;
            let mut items = vec![bvars.clone()];
            items.extend_from_slice(rest);
            defchoose(registry, name, Some(fparams), &items, &mut out)?
        }
        "defun-sk" => defun_sk(registry, event_name()?, None, &args[1..], &mut out)?,
        "defun-sk2" => {
            let name = event_name()?;
            let (fparams, rest) = split_fparams(&name, &args[1..])?;
            defun_sk(registry, name, Some(fparams), rest, &mut out)?
        }
        "defun-inst" => defun_inst(registry, event_name()?, &args[1..], &mut out)?,
        "defthm" => defthm(registry, event_name()?, &args[1..], ctx, &mut out)?,
        "defthm-inst" => defthm_inst(registry, event_name()?, &args[1..], ctx, &mut out)?,
        _ => return Err(malformed(&name, format!("unknown event `{kind}`"))),
    }
    Ok(out)
}

fn symbol_list(owner: &Symbol, form: &Form, what: &str) -> Result<Vec<Symbol>> {
    form.as_list()
        .and_then(|items| items.iter().map(|f| f.as_symbol().cloned()).collect::<Option<Vec<_>>>())
        .ok_or_else(|| malformed(owner, format!("{what} must be a list of symbols")))
}

fn split_fparams<'f>(name: &Symbol, args: &'f [Form]) -> Result<(Vec<Symbol>, &'f [Form])> {
    let Some((first, rest)) = args.split_first() else {
        return Err(malformed(name, "expected function parameters"));
    };
    Ok((symbol_list(name, first, "function parameters")?, rest))
}

fn term(form: &Form) -> Result<Term> {
    Ok(Term::from_form(form)?)
}

/// Keyword/value pairs, restricted to `allowed` keys.
fn keyword_options<'f>(name: &Symbol, forms: &'f [Form], allowed: &[&str]) -> Result<Vec<(&'f str, &'f Form)>> {
    if !forms.len().is_multiple_of(2) {
        return Err(malformed(name, "options come in keyword/value pairs"));
    }
    forms
        .chunks(2)
        .map(|pair| {
            let key = pair[0]
                .as_symbol()
                .filter(|s| s.is_keyword())
                .ok_or_else(|| malformed(name, format!("expected a keyword, found `{}`", pair[0])))?;
            if !allowed.contains(&key.as_str()) {
                return Err(malformed(name, format!("unsupported option `{key}`")));
            }
            Ok((key.as_str(), &pair[1]))
        })
        .collect()
}

fn defunvar(registry: &mut Registry, name: Symbol, args: &[Form], out: &mut EventOutcome) -> Result<()> {
    let [stars, arrow, result] = args else {
        return Err(malformed(&name, "expected (defunvar name (* ...) => *)"));
    };
    let stars = symbol_list(&name, stars, "argument signature")?;
    if stars.iter().any(|s| s.as_str() != "*") || !arrow.is_symbol("=>") || !result.is_symbol("*") {
        return Err(malformed(&name, "signature must be (* ...) => *"));
    }
    if stars.is_empty() {
        return Err(malformed(&name, "a function variable takes one or more arguments"));
    }
    let admission = registry.register_funvar(name.clone(), stars.len())?;
    if admission == Admission::New {
        out.generated.push(name);
    }
    out.admitted(admission);
    Ok(())
}

#[derive(Default)]
struct Declarations {
    guard: Option<Term>,
    measure: Option<Term>,
}

/// Reads `(declare (xargs :guard g :measure m ...))` forms; other
/// declarations and xargs keys are recorded as ignored.
fn declarations(name: &Symbol, forms: &[Form], out: &mut EventOutcome) -> Result<Declarations> {
    let mut decls = Declarations::default();
    for form in forms {
        if matches!(form.kind, FormKind::Str(_)) {
            continue;
        }
        let Some(items) = form
            .as_list()
            .filter(|_| form.head().is_some_and(|h| h.as_str() == "declare"))
        else {
            return Err(malformed(name, format!("expected a declaration, found `{form}`")));
        };
        for decl in &items[1..] {
            if decl.head().is_none_or(|h| h.as_str() != "xargs") {
                out.diagnostics.push(format!("ignored declaration {decl}"));
                continue;
            }
            let xargs = &decl.as_list().unwrap_or_default()[1..];
            if xargs.len() % 2 != 0 {
                return Err(malformed(name, "xargs come in keyword/value pairs"));
            }
            for pair in xargs.chunks(2) {
                let slot = match pair[0].as_symbol().map(Symbol::as_str) {
                    Some(":guard") => &mut decls.guard,
                    Some(":measure") => &mut decls.measure,
                    _ => {
                        out.diagnostics.push(format!("ignored xargs option {}", pair[0]));
                        continue;
                    }
                };
                if slot.is_some() {
                    return Err(malformed(name, format!("{} given twice", pair[0])));
                }
                *slot = Some(term(&pair[1])?);
            }
        }
    }
    Ok(decls)
}

fn check_fparams(registry: &Registry, name: &Symbol, fparams: &[Symbol]) -> Result<()> {
    if let Some(fv) = fparams.iter().find(|fv| registry.funvar(fv).is_none()) {
        return Err(malformed(name, format!("`{fv}` is not a function variable")));
    }
    Ok(())
}

/// Rejects a definition whose declared function parameters differ from the
/// function variables it depends on.
fn check_exact_funvars(registry: &Registry, def: &FunDef) -> Result<()> {
    let (depends, _) = dependencies(def, registry)?;
    let declared: BTreeSet<Symbol> = def.fparams.iter().cloned().collect();
    if depends != declared {
        return Err(Error::FunvarMismatch {
            name: def.name.clone(),
            extra: declared.difference(&depends).cloned().collect(),
            missing: depends.difference(&declared).cloned().collect(),
        });
    }
    Ok(())
}

fn register(registry: &mut Registry, def: FunDef, out: &mut EventOutcome) -> Result<Admission> {
    let names: Vec<Symbol> = std::iter::once(def.name.clone())
        .chain(def.quant().map(|q| q.witness.clone()))
        .collect();
    let admission = if def.is_second_order() {
        registry.register_sofun(def)?
    } else {
        registry.register_function(def)?
    };
    if admission == Admission::New {
        out.generated.extend(names);
    }
    Ok(admission)
}

fn defun(
    registry: &mut Registry,
    name: Symbol,
    fparams: Option<Vec<Symbol>>,
    args: &[Form],
    out: &mut EventOutcome,
) -> Result<()> {
    let Some((params, rest)) = args.split_first() else {
        return Err(malformed(&name, "expected parameters"));
    };
    let params = symbol_list(&name, params, "parameters")?;
    let Some((body, decls)) = rest.split_last() else {
        return Err(malformed(&name, "expected a body"));
    };
    let fparams = fparams.unwrap_or_default();
    check_fparams(registry, &name, &fparams)?;
    let decls = declarations(&name, decls, out)?;
    let body = term(body)?;
    let recursive = body.applied_functions().contains(&name);
    let def = FunDef {
        name: name.clone(),
        kind: FunKind::Plain,
        fparams,
        params,
        body,
        guard: decls.guard.unwrap_or_else(Term::t),
        measure: decls.measure,
        recursive,
    };
    check_exact_funvars(registry, &def)?;
    if def.recursive && def.measure.is_none() && !structurally_recursive(&def) {
        out.diagnostics.push(format!(
            "termination of `{name}` not established; evaluation is bounded by the depth limit"
        ));
    }
    let admission = register(registry, def, out)?;
    out.admitted(admission);
    Ok(())
}

fn defchoose(
    registry: &mut Registry,
    name: Symbol,
    fparams: Option<Vec<Symbol>>,
    args: &[Form],
    out: &mut EventOutcome,
) -> Result<()> {
    let [bvars, params, body, options @ ..] = args else {
        return Err(malformed(&name, "expected bound variables, parameters and a body"));
    };
    keyword_options(&name, options, &[":strengthen", ":doc"])?;
    let boundvars = parse_bound_vars(bvars)?;
    let params = symbol_list(&name, params, "parameters")?;
    if let Some(v) = boundvars.iter().find(|v| params.contains(v)) {
        return Err(malformed(&name, format!("bound variable `{v}` is also a parameter")));
    }
    let fparams = fparams.unwrap_or_default();
    check_fparams(registry, &name, &fparams)?;
    let def = FunDef {
        name,
        kind: FunKind::Choice { boundvars },
        fparams,
        params,
        body: term(body)?,
        guard: Term::t(),
        measure: None,
        recursive: false,
    };
    check_exact_funvars(registry, &def)?;
    let admission = register(registry, def, out)?;
    out.admitted(admission);
    Ok(())
}

fn defun_sk(
    registry: &mut Registry,
    name: Symbol,
    fparams: Option<Vec<Symbol>>,
    args: &[Form],
    out: &mut EventOutcome,
) -> Result<()> {
    let [params, body, options @ ..] = args else {
        return Err(malformed(&name, "expected parameters and a quantified body"));
    };
    let params = symbol_list(&name, params, "parameters")?;
    let Term::Quant(quantifier, boundvars, matrix) = term(body)? else {
        return Err(malformed(&name, "the body must be a forall or exists form"));
    };
    let mut rewrite = RewriteMode::Default;
    let mut guard = Term::t();
    for (key, value) in keyword_options(
        &name,
        options,
        &[
            ":rewrite",
            ":witness-dcls",
            ":quant-ok",
            ":strengthen",
            ":skolem-name",
            ":thm-name",
        ],
    )? {
        match key {
            ":rewrite" if value.is_symbol(":direct") => rewrite = RewriteMode::Direct,
            ":rewrite" if value.is_symbol(":default") => rewrite = RewriteMode::Default,
            ":rewrite" => return Err(malformed(&name, "only :rewrite :default or :direct is supported")),
            ":skolem-name" | ":thm-name" => {
                return Err(malformed(&name, format!("{key} cannot rename generated functions")))
            }
            ":witness-dcls" => {
                let decls: Vec<Form> = if value.head().is_some_and(|h| h.as_str() == "declare") {
                    vec![value.clone()]
                } else {
                    value.as_list().unwrap_or_default().to_vec()
                };
                if let Some(g) = declarations(&name, &decls, out)?.guard {
                    guard = g;
                }
            }
            _ => {}
        }
    }
    if quantifier == Quantifier::Exists && rewrite == RewriteMode::Direct {
        out.diagnostics
            .push(":rewrite :direct has no effect on an existential".into());
    }
    if let Some(v) = boundvars.iter().find(|v| params.contains(v)) {
        return Err(malformed(&name, format!("bound variable `{v}` is also a parameter")));
    }
    let fparams = fparams.unwrap_or_default();
    check_fparams(registry, &name, &fparams)?;
    let info = QuantInfo::for_function(&name, quantifier, boundvars, rewrite);
    let rule = info.rule.clone();
    let def = FunDef {
        name,
        kind: FunKind::Quantifier(info),
        fparams,
        params,
        body: *matrix,
        guard,
        measure: None,
        recursive: false,
    };
    check_exact_funvars(registry, &def)?;
    let admission = register(registry, def, out)?;
    if admission == Admission::New {
        out.generated.push(rule);
    }
    out.admitted(admission);
    Ok(())
}

fn defun_inst(registry: &mut Registry, name: Symbol, args: &[Form], out: &mut EventOutcome) -> Result<()> {
    let (declared, spec, options) = match args {
        [fps, spec @ Form {
            kind: FormKind::List(_),
            ..
        }, options @ ..] => (Some(symbol_list(&name, fps, "function parameters")?), spec, options),
        [spec, options @ ..] => (None, spec, options),
        [] => return Err(malformed(&name, "expected (sofun (fv . f) ...)")),
    };
    if !options.is_empty() {
        return Err(malformed(
            &name,
            "defun-inst takes no options; derived attributes cannot be overridden",
        ));
    }
    let Some((sofun, pairs)) = spec.as_list().and_then(<[Form]>::split_first) else {
        return Err(malformed(&name, "expected (sofun (fv . f) ...)"));
    };
    let sofun = sofun
        .as_symbol()
        .cloned()
        .ok_or_else(|| malformed(&name, "expected a second-order function name"))?;
    let Some(target) = registry.sofun(&sofun).cloned() else {
        return Err(Error::NotSecondOrder(sofun));
    };
    let sigma = Instantiation::from_forms(pairs)?;
    if sigma.is_empty() {
        return Err(malformed(&name, "the instantiation is empty"));
    }
    sigma.validate(registry)?;
    if let Some(k) = sigma.keys().find(|k| !target.fparams.contains(k)) {
        return Err(Error::InvalidInstantiation {
            sigma: sigma.to_string(),
            message: format!("`{k}` is not a function parameter of `{sofun}`"),
        });
    }
    let key = InstanceKey {
        sofun: sofun.clone(),
        sigma: sigma.clone(),
    };
    if let Some(existing) = registry.lookup_instance(&sofun, &sigma).filter(|e| **e != name) {
        return Err(Error::InstanceClash {
            sofun,
            sigma,
            existing: existing.clone(),
        });
    }

    let kind = match &target.kind {
        FunKind::Quantifier(q) => FunKind::Quantifier(QuantInfo::for_function(
            &name,
            q.quantifier,
            q.boundvars.clone(),
            q.rewrite,
        )),
        other => other.clone(),
    };
    let pending = PendingInstance {
        key: key.clone(),
        name: name.clone(),
        witness: match &kind {
            FunKind::Quantifier(q) => Some(q.witness.clone()),
            _ => None,
        },
    };
    let inst = Instantiator::new(registry, &sigma).with_pending(&pending);
    let mut def = FunDef {
        name: name.clone(),
        kind,
        fparams: Vec::new(),
        params: target.params.clone(),
        body: inst.apply(&target.body)?,
        guard: inst.apply(&target.guard)?,
        measure: target.measure.as_ref().map(|m| inst.apply(m)).transpose()?,
        recursive: target.recursive,
    };
    let (depends, _) = dependencies(&def, registry)?;
    let declared = declared.unwrap_or_default();
    let declared_set: BTreeSet<Symbol> = declared.iter().cloned().collect();
    if declared_set != depends {
        return Err(Error::FunvarMismatch {
            name,
            extra: declared_set.difference(&depends).cloned().collect(),
            missing: depends.difference(&declared_set).cloned().collect(),
        });
    }
    def.fparams = declared;
    let rule = def.quant().map(|q| q.rule.clone());
    let admission = register(registry, def, out)?;
    if admission == Admission::New {
        out.generated.extend(rule);
    }
    registry.register_instance(key, name)?;
    out.admitted(admission);
    Ok(())
}

const THEOREM_OPTIONS: &[&str] = &[":rule-classes", ":hints", ":instructions", ":otf-flg"];

fn theorem_options(name: &Symbol, options: &[Form]) -> Result<Option<Form>> {
    Ok(keyword_options(name, options, THEOREM_OPTIONS)?
        .into_iter()
        .find(|(k, _)| *k == ":rule-classes")
        .map(|(_, v)| v.clone()))
}

/// Registers `rec`, checking it over the context universe first if there
/// is one.
fn admit_theorem(
    registry: &mut Registry,
    rec: TheoremRec,
    ctx: &EventContext<'_>,
    out: &mut EventOutcome,
) -> Result<()> {
    if let Some(universe) = ctx.universe {
        let verdict = check_bounded(&rec.formula, universe, registry, ctx.limits);
        match &verdict {
            Verdict::Fail(binding) => {
                return Err(Error::BoundedCheckFailed {
                    name: rec.name.clone(),
                    counterexample: binding.clone(),
                })
            }
            Verdict::Unknown(reason) => out.diagnostics.push(format!("bounded check inconclusive: {reason}")),
            Verdict::Pass => {}
        }
        out.verdict = Some(verdict);
    }
    let name = rec.name.clone();
    let admission = registry.register_theorem(rec)?;
    if admission == Admission::New {
        out.generated.push(name);
    }
    out.admitted(admission);
    Ok(())
}

fn defthm(
    registry: &mut Registry,
    name: Symbol,
    args: &[Form],
    ctx: &EventContext<'_>,
    out: &mut EventOutcome,
) -> Result<()> {
    let Some((formula, options)) = args.split_first() else {
        return Err(malformed(&name, "expected a formula"));
    };
    let rule_classes = theorem_options(&name, options)?;
    let mut rec = TheoremRec::new(name, term(formula)?, registry)?;
    rec.rule_classes = rule_classes;
    admit_theorem(registry, rec, ctx, out)
}

fn defthm_inst(
    registry: &mut Registry,
    name: Symbol,
    args: &[Form],
    ctx: &EventContext<'_>,
    out: &mut EventOutcome,
) -> Result<()> {
    let Some((spec, options)) = args.split_first() else {
        return Err(malformed(&name, "expected (theorem (fv . f) ...)"));
    };
    let rule_classes = theorem_options(&name, options)?;
    let Some((thm, pairs)) = spec.as_list().and_then(<[Form]>::split_first) else {
        return Err(malformed(&name, "expected (theorem (fv . f) ...)"));
    };
    let thm = thm
        .as_symbol()
        .cloned()
        .ok_or_else(|| malformed(&name, "expected a theorem name"))?;
    let Some(source) = registry.theorem(&thm).cloned() else {
        return Err(Error::UnknownTheorem(thm));
    };
    let sigma = Instantiation::from_forms(pairs)?;
    if sigma.is_empty() {
        return Err(malformed(&name, "the instantiation is empty"));
    }
    sigma.validate(registry)?;
    let formula = apply_instantiation(&source.formula, &sigma, registry)?;
    let closure = compute_more_pairs(&source, &sigma, registry)?;
    let obligations = discharge_obligations(&closure, &sigma, registry)?;
    if let Some(failed) = obligations.iter().find(|o| !o.discharged) {
        return Err(Error::ObligationFailed {
            replaced: failed.replaced.clone(),
            replacement: failed.replacement.clone(),
            kind: failed.kind,
        });
    }
    out.closure = Some(closure);
    out.obligations = obligations;
    let mut rec = TheoremRec::new(name, formula, registry)?;
    rec.rule_classes = rule_classes;
    admit_theorem(registry, rec, ctx, out)
}

/// Whether every recursive call passes `car`/`cdr` of some parameter in the
/// same argument position, under path conditions establishing that the
/// parameter is a cons.
fn structurally_recursive(def: &FunDef) -> bool {
    structural(&def.body, def, &BTreeSet::new())
}

fn consp_when(test: &Term, outcome: bool) -> BTreeSet<Symbol> {
    match test {
        Term::App(f, args) => match (f.as_str(), args.as_slice(), outcome) {
            ("consp", [Term::Var(v)], true) | ("atom" | "endp", [Term::Var(v)], false) => BTreeSet::from([v.clone()]),
            ("not", [inner], _) => consp_when(inner, !outcome),
            _ => BTreeSet::new(),
        },
        Term::And(ts) if outcome => ts.iter().flat_map(|t| consp_when(t, true)).collect(),
        Term::Or(ts) if !outcome => ts.iter().flat_map(|t| consp_when(t, false)).collect(),
        _ => BTreeSet::new(),
    }
}

fn with(known: &BTreeSet<Symbol>, more: BTreeSet<Symbol>) -> BTreeSet<Symbol> {
    known.union(&more).cloned().collect()
}

fn smaller_than(arg: &Term, param: &Symbol) -> bool {
    match arg {
        Term::App(f, args) if matches!(f.as_str(), "car" | "cdr") => match args.as_slice() {
            [Term::Var(v)] => v == param,
            [inner] => smaller_than(inner, param),
            _ => false,
        },
        _ => false,
    }
}

fn structural(term: &Term, def: &FunDef, consp: &BTreeSet<Symbol>) -> bool {
    match term {
        Term::App(f, args) => {
            let here = *f != def.name
                || args
                    .iter()
                    .zip(&def.params)
                    .any(|(a, p)| consp.contains(p) && smaller_than(a, p));
            here && args.iter().all(|a| structural(a, def, consp))
        }
        Term::If(c, a, b) => {
            structural(c, def, consp)
                && structural(a, def, &with(consp, consp_when(c, true)))
                && structural(b, def, &with(consp, consp_when(c, false)))
        }
        Term::Cond(clauses) => {
            let mut known = consp.clone();
            for (test, value) in clauses {
                if !structural(test, def, &known) || !structural(value, def, &with(&known, consp_when(test, true))) {
                    return false;
                }
                known.extend(consp_when(test, false));
            }
            true
        }
        Term::And(ts) | Term::Or(ts) => {
            let positive = matches!(term, Term::And(_));
            let mut known = consp.clone();
            for t in ts {
                if !structural(t, def, &known) {
                    return false;
                }
                known.extend(consp_when(t, positive));
            }
            true
        }
        Term::Implies(a, b) => structural(a, def, consp) && structural(b, def, &with(consp, consp_when(a, true))),
        _ => term.children().into_iter().all(|t| structural(t, def, consp)),
    }
}
