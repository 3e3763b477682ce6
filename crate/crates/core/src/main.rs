use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use softk::cli::{detail, run_script, Options, EXIT_REJECTED, EXIT_USAGE};
use softk::eval::{eval_term, Limits};
use softk::events::Status;
use softk::kernel::Term;
use softk::sexpr::read_form;

#[derive(Parser)]
#[command(name = "softk", version, about = "Second-order functions and theorems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process an event script.
    Run {
        script: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Evaluate a term after loading a script.
    Eval {
        expr: String,
        #[arg(long)]
        load: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// Check theorems over the default universe; a failing check rejects.
    #[arg(long)]
    check_bounded: bool,
    #[arg(long, value_name = "NAME")]
    universe_default: Option<String>,
    #[arg(long, value_name = "N", default_value_t = Limits::default().depth)]
    depth_limit: usize,
    #[arg(long, value_name = "N", default_value_t = Limits::default().budget)]
    enum_budget: u64,
    /// Evaluate guards on entry to user functions.
    #[arg(long)]
    check_guards: bool,
    #[arg(long)]
    keep_going: bool,
    #[arg(long, value_name = "PATH")]
    dump_registry: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
}

impl Flags {
    fn options(self) -> Options {
        Options {
            check_bounded: self.check_bounded,
            universe_default: self.universe_default,
            limits: Limits {
                depth: self.depth_limit,
                budget: self.enum_budget,
                check_guards: self.check_guards,
            },
            keep_going: self.keep_going,
            dump_registry: self.dump_registry,
            summary: self.summary,
        }
    }
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return exit(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match cli.command {
        Command::Run { script, flags } => match run_script(&script, flags.options()) {
            Ok(report) => {
                for o in &report.outcomes {
                    println!("{:<9} {} ({})", o.status, o.name, detail(o));
                }
                eprintln!(
                    "{} forms, {} admitted events, {:.3}s",
                    report.outcomes.len(),
                    report.admitted(),
                    report.elapsed.as_secs_f64()
                );
                exit(report.exit_code)
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit(e.exit_code())
            }
        },
        Command::Eval { expr, load, flags } => {
            let options = flags.options();
            let limits = options.limits;
            let registry = match load {
                Some(path) => match run_script(&path, options) {
                    Ok(report) if report.outcomes.iter().all(|o| o.status != Status::Rejected) => report.registry,
                    Ok(report) => {
                        for o in report.outcomes.iter().filter(|o| o.status == Status::Rejected) {
                            eprintln!("rejected {} ({})", o.name, detail(o));
                        }
                        return exit(EXIT_REJECTED);
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        return exit(e.exit_code());
                    }
                },
                None => Default::default(),
            };
            let term = match read_form(&expr)
                .map_err(softk::Error::from)
                .and_then(|f| Ok(Term::from_form(&f)?))
            {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit(EXIT_USAGE);
                }
            };
            match eval_term(&term, &[], &registry, limits) {
                Ok(v) => {
                    println!("{v}");
                    exit(0)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit(EXIT_REJECTED)
                }
            }
        }
    }
}
