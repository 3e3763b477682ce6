//! Batch driver: runs event scripts together with tool directives and
//! produces per-form reports.
//!
//! Directives, interleaved with events:
//!
//! ```text
//! (universe <name> <value> ...)
//! (universe <name> :lists-over (<atom> ...) :max-length <n>)
//! (universe <name> :trees-over (<atom> ...) :max-depth <n>)
//! (check-bounded <formula | theorem | nullary function> [:universe <name>])
//! (chain <name> :specs (<spec> ...) :steps (<theorem> ...) [:implementation ((fv . f) ...)])
//! (verify-implementation <chain> [:universe <name>])
//! (eval <term>)
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::eval::{check_bounded, eval_term, Limits, Universe, Value, Verdict};
use crate::events::{describe, process_event, EventContext, EventOutcome, Status, EVENT_KINDS};
use crate::instantiate::Instantiation;
use crate::kernel::Term;
use crate::refine::{compose_chain, verify_implementation, RefinementChain};
use crate::registry::Registry;
use crate::sexpr::{read_forms, Form, FormKind};
use crate::symbol::Symbol;

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Check every theorem over the default universe.
    pub check_bounded: bool,
    pub universe_default: Option<String>,
    pub limits: Limits,
    pub keep_going: bool,
    pub dump_registry: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunReport {
    pub outcomes: Vec<EventOutcome>,
    pub registry: Registry,
    pub elapsed: Duration,
    pub exit_code: i32,
}

impl RunReport {
    /// One `event=... status=... detail=...` line per processed form, each
    /// followed by its obligation lines. Contains no timings.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let _ = writeln!(out, "event={} status={} detail={}", o.name, o.status, detail(o));
            for ob in &o.obligations {
                let _ = writeln!(
                    out,
                    "obligation event={} replaced={} replacement={} kind={} discharged={}",
                    o.name, ob.replaced, ob.replacement, ob.kind, ob.discharged
                );
            }
        }
        out
    }

    pub fn admitted(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.status == Status::Admitted && EVENT_KINDS.contains(&o.kind.as_str()))
            .count()
    }
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Human-readable one-line detail of an outcome.
pub fn detail(o: &EventOutcome) -> String {
    let mut parts = vec![o.kind.clone()];
    if let Some(e) = &o.error {
        parts.push(one_line(&e.to_string()));
    }
    if !o.generated.is_empty() {
        let names: Vec<&str> = o.generated.iter().map(Symbol::as_str).collect();
        parts.push(format!("generated=({})", names.join(" ")));
    }
    if let Some(c) = &o.closure {
        parts.push(format!("pairs={c}"));
    }
    if let Some(v) = &o.verdict {
        parts.push(format!("verdict={}", one_line(&v.to_string())));
    }
    parts.extend(o.diagnostics.iter().map(|d| format!("note={}", one_line(d))));
    parts.join(" ")
}

/// Script state beyond the registry.
pub struct Session {
    pub registry: Registry,
    pub universes: BTreeMap<Symbol, Universe>,
    pub chains: BTreeMap<Symbol, RefinementChain>,
    pub options: Options,
}

fn malformed(name: impl std::fmt::Display, message: impl Into<String>) -> Error {
    Error::MalformedEvent {
        name: name.to_string(),
        message: message.into(),
    }
}

/// Splits `:key value` pairs off the end of a directive.
fn directive_options<'f>(name: &str, forms: &'f [Form], allowed: &[&str]) -> Result<BTreeMap<&'f str, &'f Form>> {
    if !forms.len().is_multiple_of(2) {
        return Err(malformed(name, "options come in keyword/value pairs"));
    }
    let mut out = BTreeMap::new();
    for pair in forms.chunks(2) {
        let key = pair[0]
            .as_symbol()
            .filter(|k| allowed.contains(&k.as_str()))
            .ok_or_else(|| malformed(name, format!("unsupported option `{}`", pair[0])))?;
        out.insert(key.as_str(), &pair[1]);
    }
    Ok(out)
}

fn count(name: &str, form: &Form) -> Result<usize> {
    match form.kind {
        FormKind::Int(n) if n >= 0 => Ok(n as usize),
        _ => Err(malformed(name, format!("expected a natural number, found `{form}`"))),
    }
}

impl Session {
    pub fn new(options: Options) -> Self {
        Session {
            registry: Registry::new(),
            universes: BTreeMap::new(),
            chains: BTreeMap::new(),
            options,
        }
    }

    /// Processes one event or directive.
    pub fn process(&mut self, form: &Form) -> EventOutcome {
        let (_, kind) = describe(form);
        let result = match kind.as_str() {
            "universe" => self.universe(form),
            "check-bounded" => self.check(form),
            "chain" => self.chain(form),
            "verify-implementation" => self.verify(form),
            "eval" => self.eval(form),
            _ => {
                let universe = if self.options.check_bounded {
                    self.options
                        .universe_default
                        .as_deref()
                        .and_then(|u| self.universes.get(&Symbol::from(u)))
                } else {
                    None
                };
                let ctx = EventContext {
                    universe,
                    limits: self.options.limits,
                };
                process_event(&mut self.registry, form, &ctx)
            }
        };
        match result {
            Ok(mut out) => {
                if matches!(out.verdict, Some(Verdict::Fail(_))) {
                    out.status = Status::Rejected;
                }
                out
            }
            Err(e) => EventOutcome::rejected(form, e),
        }
    }

    fn args<'f>(form: &'f Form, name: &str) -> Result<&'f [Form]> {
        form.as_list()
            .map(|items| &items[1..])
            .ok_or_else(|| malformed(name, "a directive is a list"))
    }

    fn outcome(form: &Form) -> EventOutcome {
        let (name, kind) = describe(form);
        EventOutcome::new(name, kind)
    }

    fn universe_named(&self, name: &str, explicit: Option<&Form>) -> Result<&Universe> {
        let chosen = match explicit {
            Some(f) => f
                .as_symbol()
                .cloned()
                .ok_or_else(|| malformed(name, "expected a universe name"))?,
            None => self
                .options
                .universe_default
                .as_deref()
                .map(Symbol::from)
                .ok_or_else(|| malformed(name, "no :universe given and no default universe"))?,
        };
        self.universes
            .get(&chosen)
            .ok_or_else(|| malformed(name, format!("unknown universe `{chosen}`")))
    }

    fn universe(&mut self, form: &Form) -> Result<EventOutcome> {
        let args = Self::args(form, "universe")?;
        let Some((name, values)) = args.split_first() else {
            return Err(malformed("universe", "expected a name"));
        };
        let name = name
            .as_symbol()
            .cloned()
            .ok_or_else(|| malformed("universe", "expected a name"))?;
        if self.universes.contains_key(&name) {
            return Err(Error::NameClash {
                name,
                existing: "a universe".into(),
            });
        }
        let atoms = |f: &Form| -> Result<Vec<Value>> {
            Ok(f.as_list()
                .ok_or_else(|| malformed(&name, "expected a list of atoms"))?
                .iter()
                .map(Value::from_form)
                .collect())
        };
        let universe = match values.first() {
            Some(k) if k.is_keyword() => {
                let opts = directive_options(
                    name.as_str(),
                    values,
                    &[":lists-over", ":max-length", ":trees-over", ":max-depth"],
                )?;
                match (
                    opts.get(":lists-over"),
                    opts.get(":max-length"),
                    opts.get(":trees-over"),
                    opts.get(":max-depth"),
                ) {
                    (Some(a), Some(n), None, None) => {
                        Universe::lists_over(name.clone(), &atoms(a)?, count(name.as_str(), n)?)
                    }
                    (None, None, Some(a), Some(n)) => {
                        Universe::trees_over(name.clone(), &atoms(a)?, count(name.as_str(), n)?)
                    }
                    _ => {
                        return Err(malformed(
                            &name,
                            "use :lists-over with :max-length, or :trees-over with :max-depth",
                        ))
                    }
                }
            }
            _ => Universe::new(name.clone(), values.iter().map(Value::from_form).collect()),
        }
        .map_err(|e| malformed(&name, e.to_string()))?;
        let mut out = Self::outcome(form);
        out.diagnostics.push(format!("{} values", universe.len()));
        self.universes.insert(name, universe);
        Ok(out)
    }

    fn check(&mut self, form: &Form) -> Result<EventOutcome> {
        let args = Self::args(form, "check-bounded")?;
        let Some((target, options)) = args.split_first() else {
            return Err(malformed("check-bounded", "expected a formula"));
        };
        let opts = directive_options("check-bounded", options, &[":universe"])?;
        let universe = self.universe_named("check-bounded", opts.get(":universe").copied())?;
        let formula = match target.as_symbol() {
            Some(s) if self.registry.theorem(s).is_some() => self.registry.theorem(s).unwrap().formula.clone(),
            Some(s) if self.registry.function(s).is_some_and(|d| d.arity() == 0) => Term::App(s.clone(), vec![]),
            _ => Term::from_form(target)?,
        };
        let verdict = check_bounded(&formula, universe, &self.registry, self.options.limits);
        let mut out = Self::outcome(form);
        out.diagnostics
            .push(format!("universe={} ({} values)", universe.name, universe.len()));
        if let Verdict::Unknown(_) = verdict {
            out.diagnostics.push("inconclusive".into());
        }
        out.verdict = Some(verdict);
        Ok(out)
    }

    fn chain(&mut self, form: &Form) -> Result<EventOutcome> {
        let args = Self::args(form, "chain")?;
        let Some((name, options)) = args.split_first() else {
            return Err(malformed("chain", "expected a name"));
        };
        let name = name
            .as_symbol()
            .cloned()
            .ok_or_else(|| malformed("chain", "expected a name"))?;
        let opts = directive_options(name.as_str(), options, &[":specs", ":steps", ":implementation"])?;
        let specs = opts
            .get(":specs")
            .and_then(|f| f.as_list())
            .ok_or_else(|| malformed(&name, ":specs must be a list"))?
            .iter()
            .map(|f| match f.as_symbol() {
                Some(s) => Ok(Term::App(s.clone(), vec![])),
                None => Ok(Term::from_form(f)?),
            })
            .collect::<Result<Vec<_>>>()?;
        let steps = opts
            .get(":steps")
            .and_then(|f| f.as_list())
            .unwrap_or_default()
            .iter()
            .map(|f| {
                f.as_symbol()
                    .cloned()
                    .ok_or_else(|| malformed(&name, "steps are theorem names"))
            })
            .collect::<Result<Vec<_>>>()?;
        let implementation = match opts.get(":implementation") {
            Some(f) => {
                let pairs = f
                    .as_list()
                    .ok_or_else(|| malformed(&name, ":implementation must be a list of pairs"))?;
                let sigma = Instantiation::from_forms(pairs)?;
                sigma.validate(&self.registry)?;
                sigma
            }
            None => Instantiation::new(),
        };
        let chain = RefinementChain {
            name: name.clone(),
            specs,
            steps,
            implementation,
        };
        let had = self.registry.theorem(&name).is_some();
        let rec = self.registry.atomically(|r| compose_chain(&chain, r))?;
        let mut out = Self::outcome(form);
        if had {
            out.status = Status::Redundant;
        } else {
            out.generated.push(rec.name.clone());
        }
        self.chains.insert(name, chain);
        Ok(out)
    }

    fn verify(&mut self, form: &Form) -> Result<EventOutcome> {
        let args = Self::args(form, "verify-implementation")?;
        let Some((name, options)) = args.split_first() else {
            return Err(malformed("verify-implementation", "expected a chain name"));
        };
        let chain = name
            .as_symbol()
            .and_then(|n| self.chains.get(n))
            .ok_or_else(|| malformed("verify-implementation", format!("unknown chain `{name}`")))?;
        let opts = directive_options("verify-implementation", options, &[":universe"])?;
        let universe = self.universe_named("verify-implementation", opts.get(":universe").copied())?;
        let verdict = verify_implementation(chain, universe, &self.registry, self.options.limits)?;
        let mut out = Self::outcome(form);
        out.diagnostics
            .push(format!("universe={} ({} values)", universe.name, universe.len()));
        out.verdict = Some(verdict);
        Ok(out)
    }

    fn eval(&mut self, form: &Form) -> Result<EventOutcome> {
        let args = Self::args(form, "eval")?;
        let [expr] = args else {
            return Err(malformed("eval", "expected one term"));
        };
        let term = Term::from_form(expr)?;
        let mut out = Self::outcome(form);
        out.name = write_name(expr);
        match eval_term(&term, &[], &self.registry, self.options.limits) {
            Ok(v) => out.diagnostics.push(format!("value={v}")),
            Err(e) => {
                out.status = Status::Rejected;
                out.diagnostics.push(format!("error={e}"));
            }
        }
        Ok(out)
    }
}

fn write_name(form: &Form) -> String {
    one_line(&form.to_string())
}

/// Runs every form of `text`.
pub fn run_source(text: &str, options: Options) -> Result<RunReport> {
    let started = Instant::now();
    let forms = read_forms(text)?;
    let mut session = Session::new(options);
    let mut outcomes = Vec::new();
    for form in &forms {
        let out = session.process(form);
        let stop = out.status == Status::Rejected && !session.options.keep_going;
        outcomes.push(out);
        if stop {
            break;
        }
    }
    let exit_code = if outcomes.iter().any(|o| o.status == Status::Rejected) {
        EXIT_REJECTED
    } else {
        EXIT_OK
    };
    Ok(RunReport {
        outcomes,
        registry: session.registry,
        elapsed: started.elapsed(),
        exit_code,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Script(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Script(_) => EXIT_REJECTED,
            _ => EXIT_USAGE,
        }
    }
}

/// Reads and runs a script, then writes the requested summary and registry
/// dump files.
pub fn run_script(path: &Path, options: Options) -> std::result::Result<RunReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let summary = options.summary.clone();
    let dump = options.dump_registry.clone();
    let report = run_source(&text, options)?;
    let write = |path: &PathBuf, contents: String| {
        std::fs::write(path, contents).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })
    };
    if let Some(p) = &summary {
        write(p, report.summary())?;
    }
    if let Some(p) = &dump {
        write(p, report.registry.dump())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> RunReport {
        run_source(text, Options::default()).unwrap()
    }

    #[test]
    fn eval_directive_prints_value() {
        let report = run("(defun wrap (x) (list x)) (eval (wrap (wrap 5)))");
        assert_eq!(report.exit_code, EXIT_OK);
        assert!(report
            .summary()
            .contains("event=(wrap (wrap 5)) status=admitted detail=eval note=value=((5))"));
    }

    #[test]
    fn stops_at_first_rejection() {
        let text = "(defun f (x) (g x)) (defun h (x) x)";
        let report = run(text);
        assert_eq!(report.exit_code, EXIT_REJECTED);
        assert_eq!(report.outcomes.len(), 1);
        let report = run_source(
            text,
            Options {
                keep_going: true,
                ..Options::default()
            },
        )
        .unwrap();
        assert_eq!(report.outcomes.len(), 2);
        assert_eq!(report.exit_code, EXIT_REJECTED);
    }

    #[test]
    fn check_directive() {
        let report = run("(universe u 0 1) (check-bounded (forall x (equal x 0)) :universe u)");
        assert_eq!(report.exit_code, EXIT_REJECTED);
        assert!(report.summary().contains("verdict=fail: x=1"));
        let report = run("(universe l :lists-over (0 1 65) :max-length 3) (check-bounded (true-listp x) :universe l)");
        assert_eq!(report.exit_code, EXIT_OK);
        assert!(report.summary().contains("40 values"));
    }

    #[test]
    fn theorems_checked_with_default_universe() {
        let options = Options {
            check_bounded: true,
            universe_default: Some("u".into()),
            ..Options::default()
        };
        let report = run_source(
            "(universe u 0 1) (defthm ok (equal (car (cons x y)) x)) (defthm bad (equal x 0))",
            options,
        )
        .unwrap();
        assert_eq!(report.exit_code, EXIT_REJECTED);
        assert_eq!(report.outcomes[1].status, Status::Admitted);
        assert!(report.registry.theorem(&"bad".into()).is_none());
    }

    #[test]
    fn missing_file_is_usage_error() {
        let err = run_script(Path::new("/nonexistent/script.soft"), Options::default()).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }
}
