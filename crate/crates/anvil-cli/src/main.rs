//! `anvil`: type-check, compile, draw and verify Anvil programs.
//!
//! Exit codes: 0 success, 1 diagnostics or an unsafe log, 2 usage error,
//! 3 internal error.

use anvil_core::codegen::{emit_program, gen_fsm};
use anvil_core::diagnostics::to_json_list;
use anvil_core::driver::{compile_sources, Compilation};
use anvil_core::event_graph::dump_dot;
use anvil_core::optimizer::PassConfig;
use anvil_core::semantics::{verify_program, Bounds, Mode};
use anvil_core::typecheck::CheckOptions;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "anvil", version, about = "Timing-safe hardware description compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check.
    Check {
        #[command(flatten)]
        input: Input,
        /// Loop iterations unrolled by the checker (at least 2).
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=8))]
        iters: u32,
    },
    /// Type-check, optimize and emit SystemVerilog.
    Build {
        #[command(flatten)]
        input: Input,
        /// Process to emit, together with the processes it spawns.
        #[arg(long)]
        top: String,
        /// Output file; standard output if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        opt_level: u8,
    },
    /// Write the event graph of every thread.
    Graph {
        #[command(flatten)]
        input: Input,
        /// Only processes reachable from this one.
        #[arg(long)]
        top: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Before or after optimization.
        #[arg(long, value_enum, default_value_t = Stage::Post)]
        dump_graph: Stage,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        opt_level: u8,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        emit: GraphFormat,
    },
    /// Search bounded execution logs for a timing violation.
    Verify {
        #[command(flatten)]
        input: Input,
        /// Root of the process tree; in composed mode, defaults to the last process.
        #[arg(long)]
        top: Option<String>,
        /// Largest number of cycles a send or receive may wait.
        #[arg(long, default_value_t = 3)]
        slack: u32,
        /// Largest number of loop iterations unrolled.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        iters: u32,
        /// Largest number of logs explored.
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        /// Verify the whole instance tree with matched messages composed away.
        #[arg(long)]
        composed: bool,
    },
}

#[derive(Args)]
struct Input {
    /// Source files, combined in order into one program.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Stage {
    Pre,
    Post,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

/// A failed run and the exit code it maps to.
enum Failure {
    /// Diagnostics or an unsafe log; already reported.
    Reported,
    Usage(String),
    Internal(String),
}

type Outcome = Result<(), Failure>;

fn load(input: &Input) -> Result<Compilation, Failure> {
    let mut files = Vec::new();
    for p in &input.files {
        let text =
            std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
        files.push((p.display().to_string(), text));
    }
    compile_sources(&files).map_err(|f| {
        report(input.format, &f.diagnostics, || f.render(), &f.sources);
        Failure::Reported
    })
}

fn report(
    format: Format,
    ds: &[anvil_core::diagnostics::Diagnostic],
    human: impl FnOnce() -> String,
    sm: &anvil_core::frontend::span::SourceMap,
) {
    match format {
        Format::Human => eprint!("{}", human()),
        Format::Json => stdout(&format!("{}\n", to_json_list(ds, sm))),
    }
}

/// Type-checks and reports; fails if any error was found.
fn checked(input: &Input, iters: u32) -> Result<Compilation, Failure> {
    let c = load(input)?;
    let pc = c.check(CheckOptions { iters: iters as usize });
    report(input.format, &pc.diagnostics, || c.render(&pc.diagnostics), &c.sources);
    if pc.ok() {
        Ok(c)
    } else {
        Err(Failure::Reported)
    }
}

fn write_out(path: &Option<PathBuf>, text: &str) -> Outcome {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Internal(format!("cannot write {}: {e}", p.display()))),
        None => {
            stdout(text);
            Ok(())
        }
    }
}

/// Writes to standard output; a closed pipe is not an error.
fn stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Check { input, iters } => checked(&input, iters).map(|_| ()),
        Command::Build { input, top, output, opt_level } => {
            let c = checked(&input, 2)?;
            if c.program.procs.iter().all(|p| p.name != top) {
                return Err(Failure::Usage(format!("unknown process `{top}`")));
            }
            let sv = emit_program(&c.program, Some(&top), PassConfig::for_level(opt_level))
                .map_err(|e| Failure::Internal(e.to_string()))?;
            write_out(&output, &sv)
        }
        Command::Graph { input, top, output, dump_graph, opt_level, emit } => {
            let c = load(&input)?;
            let cfg = match dump_graph {
                Stage::Pre => PassConfig::none(),
                Stage::Post => PassConfig::for_level(opt_level),
            };
            let procs: Vec<usize> = match &top {
                Some(t) => {
                    let reach = reachable(&c, t).ok_or_else(|| Failure::Usage(format!("unknown process `{t}`")))?;
                    (0..c.program.procs.len()).filter(|i| reach[*i]).collect()
                }
                None => (0..c.program.procs.len()).collect(),
            };
            let mut dot = String::new();
            let mut graphs = Vec::new();
            for pi in procs {
                let p = &c.program.procs[pi];
                for th in 0..p.threads.len() {
                    let plan = gen_fsm(&c.program, pi, th, cfg).map_err(|e| Failure::Internal(e.to_string()))?;
                    let name = format!("{}_t{th}", p.name);
                    dot.push_str(&dump_dot(&plan.graph, &name));
                    graphs.push(serde_json::json!({ "process": p.name, "thread": th, "graph": plan.graph.to_json() }));
                }
            }
            let text = match emit {
                GraphFormat::Dot => dot,
                GraphFormat::Json => {
                    let v = serde_json::json!({ "schema": "anvil-graphs/1", "graphs": graphs });
                    format!("{}\n", serde_json::to_string_pretty(&v).map_err(|e| Failure::Internal(e.to_string()))?)
                }
            };
            write_out(&output, &text)
        }
        Command::Verify { input, top, slack, iters, budget, composed } => {
            let c = load(&input)?;
            let bounds = Bounds { slack, iters: iters as usize, budget };
            let mode = if composed { Mode::Composed } else { Mode::Local };
            let r =
                verify_program(&c.program, top.as_deref(), bounds, mode).map_err(|e| Failure::Usage(e.to_string()))?;
            match input.format {
                Format::Human => {
                    let text = r.render();
                    if r.is_safe() {
                        stdout(&text);
                    } else {
                        eprint!("{text}");
                    }
                }
                Format::Json => {
                    let json = serde_json::to_string_pretty(&r).map_err(|e| Failure::Internal(e.to_string()))?;
                    stdout(&format!("{json}\n"));
                }
            }
            if r.is_safe() {
                Ok(())
            } else {
                Err(Failure::Reported)
            }
        }
    }
}

/// Processes instantiated under `top`, including itself.
fn reachable(c: &Compilation, top: &str) -> Option<Vec<bool>> {
    let procs = &c.program.procs;
    let root = procs.iter().position(|p| p.name == top)?;
    let mut seen = vec![false; procs.len()];
    let mut stack = vec![root];
    while let Some(p) = stack.pop() {
        if !std::mem::replace(&mut seen[p], true) {
            stack.extend(procs[p].spawns.iter().map(|s| s.proc));
        }
    }
    Some(seen)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = std::panic::catch_unwind(|| run(cli));
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Reported)) => ExitCode::from(1),
        Ok(Err(Failure::Usage(m))) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Ok(Err(Failure::Internal(m))) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
        // The panic message has already been printed by the default hook.
        Err(_) => ExitCode::from(3),
    }
}
