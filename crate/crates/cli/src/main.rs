//! `micropol`: check, compile, link, run, trace and diff programs built from
//! `.src`, `.ic` and `.tgt` units, and run the attack suite.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use micropol_core::harness::attacks::run_attack_suite;
use micropol_core::harness::{
    run_differential_build, run_interm, run_source, run_state, target_observable, trace, Observable, TargetRunOptions,
};
use micropol_core::i2t::DEFAULT_STACK_CAPACITY;
use micropol_core::loader::{boot_state, dump_image, LoadError};
use micropol_core::pipeline::{check_build, link_build_interm, link_build_source, link_build_target, PipelineError};
use micropol_core::syntax::{load_units, print_ic, print_tgt, Build, Entry};
use micropol_core::target::TargetOutcome;

/// `println!` that ignores a closed standard output.
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(io::stdout().lock(), $($t)*);
    }};
}

const EXIT_PARSE: u8 = 2;
const EXIT_LINK: u8 = 3;
const EXIT_FAILSTOP: u8 = 4;
const EXIT_FUEL: u8 = 5;
const EXIT_MISMATCH: u8 = 6;

#[derive(Parser)]
#[command(
    name = "micropol",
    version,
    about = "Secure compilation toolchain for a tagged machine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Unit files, or directories holding units and an optional `deps` list.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    /// Entry point as `Class.method object`; defaults to the class defining `main`.
    #[arg(long, num_args = 2, value_names = ["CLASS.METHOD", "OBJECT"])]
    entry: Option<Vec<String>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Src,
    Ic,
    Tgt,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lowered {
    Ic,
    Tgt,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, resolve and typecheck every unit.
    Check(Input),
    /// Compile and link to a lower level and print the result.
    Compile {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        to: Lowered,
        /// Write to a file instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Stack capacity per compartment, in cells.
        #[arg(long, default_value_t = DEFAULT_STACK_CAPACITY)]
        stack: usize,
    },
    /// Link at the target level and check the result loads.
    Link {
        #[command(flatten)]
        input: Input,
        /// Print the tagged memory image instead of the program.
        #[arg(long)]
        image: bool,
        #[arg(long, default_value_t = DEFAULT_STACK_CAPACITY)]
        stack: usize,
    },
    /// Run at one level and print the observable outcome.
    Run {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "tgt")]
        level: Level,
        #[arg(long, env = "MICROPOL_FUEL", default_value_t = 1_000_000)]
        fuel: u64,
        #[arg(long, default_value_t = DEFAULT_STACK_CAPACITY)]
        stack: usize,
    },
    /// Run at the target level, printing every step.
    Trace {
        #[command(flatten)]
        input: Input,
        #[arg(long, env = "MICROPOL_FUEL", default_value_t = 1_000_000)]
        fuel: u64,
        #[arg(long, default_value_t = DEFAULT_STACK_CAPACITY)]
        stack: usize,
    },
    /// Run at all three levels and compare the outcomes.
    Diff {
        #[command(flatten)]
        input: Input,
        /// Treat every subdirectory with a `deps` file as its own program.
        #[arg(long)]
        each: bool,
        #[arg(long, env = "MICROPOL_FUEL", default_value_t = 1_000_000)]
        fuel: u64,
    },
    /// Run the built-in attack scenarios.
    Attacks,
}

/// A failed command: what to print and the exit code.
struct Failure(u8, String);

impl Failure {
    fn all<E: Display>(code: u8, es: &[E]) -> Failure {
        let lines: Vec<String> = es.iter().map(E::to_string).collect();
        Failure(code, lines.join("\n"))
    }
}

fn pipeline(es: Vec<PipelineError>) -> Failure {
    let code = if es.iter().any(PipelineError::is_link) {
        EXIT_LINK
    } else {
        EXIT_PARSE
    };
    Failure::all(code, &es)
}

fn load(es: Vec<LoadError>) -> Failure {
    Failure::all(EXIT_LINK, &es)
}

fn build(input: &Input) -> Result<Build, Failure> {
    let entry = match &input.entry {
        Some(v) => Entry::parse(&v[0], &v[1]).map_err(|e| Failure(EXIT_PARSE, e))?,
        None => Entry::Auto,
    };
    build_paths(&input.paths, &entry)
}

fn build_paths(paths: &[PathBuf], entry: &Entry) -> Result<Build, Failure> {
    let units = load_units(paths).map_err(|e| Failure(EXIT_PARSE, e.to_string()))?;
    let b = Build::new(&units, entry).map_err(|es| Failure::all(EXIT_PARSE, &es))?;
    Ok(b)
}

fn exit_for(o: &Observable) -> u8 {
    match o {
        Observable::Terminated(_) | Observable::HaltedNoResult => 0,
        Observable::Failstop(_) | Observable::ResourceExhaustion => EXIT_FAILSTOP,
        Observable::OutOfFuel => EXIT_FUEL,
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Failure(1, format!("{}: {e}", p.display()))),
        None => {
            let _ = io::stdout().lock().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn run(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Check(input) => {
            let b = build(&input)?;
            check_build(&b).map_err(pipeline)?;
            out!("ok: {} unit(s)", b.components.len());
            Ok(0)
        }
        Command::Compile {
            input,
            to,
            output,
            stack,
        } => {
            let b = build(&input)?;
            check_build(&b).map_err(pipeline)?;
            let text = match to {
                Lowered::Ic => print_ic(&link_build_interm(&b).map_err(pipeline)?, Some(&b.names)),
                Lowered::Tgt => print_tgt(&link_build_target(&b, stack).map_err(pipeline)?, Some(&b.names)),
            };
            emit(&text, output.as_deref())?;
            Ok(0)
        }
        Command::Link { input, image, stack } => {
            let b = build(&input)?;
            check_build(&b).map_err(pipeline)?;
            let p = link_build_target(&b, stack).map_err(pipeline)?;
            let state = boot_state(&p).map_err(load)?;
            let text = if image {
                dump_image(&state.memory)
            } else {
                print_tgt(&p, Some(&b.names))
            };
            emit(&text, None)?;
            Ok(0)
        }
        Command::Run {
            input,
            level,
            fuel,
            stack,
        } => {
            let b = build(&input)?;
            check_build(&b).map_err(pipeline)?;
            let (shown, code) = match level {
                Level::Src => {
                    let p = link_build_source(&b).map_err(pipeline)?;
                    let o = run_source(&p, fuel).map_err(|e| Failure(EXIT_LINK, e.to_string()))?;
                    (o.named(&b.names), exit_for(&o))
                }
                Level::Ic => {
                    let p = link_build_interm(&b).map_err(pipeline)?;
                    let o = run_interm(&p, fuel).map_err(|e| Failure(EXIT_LINK, e.to_string()))?;
                    (o.named(&b.names), exit_for(&o))
                }
                Level::Tgt => {
                    let p = link_build_target(&b, stack).map_err(pipeline)?;
                    let r = run_state(boot_state(&p).map_err(load)?, fuel, TargetRunOptions::default());
                    match &r.outcome {
                        TargetOutcome::Failstop(f) => (format!("Failstop {}", f.class()), EXIT_FAILSTOP),
                        _ => (r.observable.named(&b.names), exit_for(&r.observable)),
                    }
                }
            };
            out!("{shown}");
            Ok(code)
        }
        Command::Trace { input, fuel, stack } => {
            let b = build(&input)?;
            check_build(&b).map_err(pipeline)?;
            let p = link_build_target(&b, stack).map_err(pipeline)?;
            let mut state = boot_state(&p).map_err(load)?;
            let mut out = io::BufWriter::new(io::stdout().lock());
            let (outcome, _) = trace(&mut state, fuel, |line| {
                let _ = writeln!(out, "{line}");
            });
            let _ = out.flush();
            drop(out);
            let o = target_observable(&outcome, &state);
            match &outcome {
                TargetOutcome::Failstop(f) => {
                    out!("Failstop {}", f.class());
                    Ok(EXIT_FAILSTOP)
                }
                _ => {
                    out!("{}", o.named(&b.names));
                    Ok(exit_for(&o))
                }
            }
        }
        Command::Diff { input, each, fuel } => {
            let programs = if each {
                let mut dirs = Vec::new();
                for root in &input.paths {
                    let entries =
                        fs::read_dir(root).map_err(|e| Failure(EXIT_PARSE, format!("{}: {e}", root.display())))?;
                    for e in entries.flatten() {
                        if e.path().join("deps").is_file() {
                            dirs.push(e.path());
                        }
                    }
                }
                dirs.sort();
                dirs.into_iter().map(|d| vec![d]).collect()
            } else {
                vec![input.paths.clone()]
            };
            let entry = match &input.entry {
                Some(v) => Entry::parse(&v[0], &v[1]).map_err(|e| Failure(EXIT_PARSE, e))?,
                None => Entry::Auto,
            };
            let mut code = 0;
            for paths in programs {
                let label: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                let label = label.join(" ");
                let b = build_paths(&paths, &entry)?;
                check_build(&b).map_err(pipeline)?;
                let r = run_differential_build(&b, fuel).map_err(|e| Failure(EXIT_LINK, format!("{label}: {e}")))?;
                let verdict = if r.agree() {
                    "agree"
                } else {
                    code = EXIT_MISMATCH;
                    "MISMATCH"
                };
                out!(
                    "{label}: {verdict}; src: {}; ic: {}; tgt: {}",
                    r.source.named(&b.names),
                    r.interm.named(&b.names),
                    r.target.named(&b.names)
                );
            }
            Ok(code)
        }
        Command::Attacks => {
            let results = run_attack_suite();
            for r in &results {
                out!("{r}");
            }
            Ok(if results.iter().all(|r| r.passed()) {
                0
            } else {
                EXIT_MISMATCH
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
