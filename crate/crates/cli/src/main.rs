//! `c2o`: compiles assume-guarantee contracts to observers, checks design
//! models against them, and compares compiled observers with the reference
//! evaluator.
//!
//! Exit codes: 0 success, 1 usage or I/O, 2 parse or type error,
//! 3 well-formedness, 4 internal error, 5 interface mismatch,
//! 6 translation bug found by `diff`, 10 counterexample.

mod commands;
mod manifest;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use c2o_core::emit::EmitTarget;
use c2o_core::types::{FloatPrecision, TypeConfig};

#[derive(Parser)]
#[command(
    name = "c2o",
    version,
    about = "Contract-to-observer compiler and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a contract and emit the observer program.
    Compile(CompileArgs),
    /// Check a design model against a contract.
    Verify(VerifyArgs),
    /// Compare compiled observers with the reference evaluator.
    Diff(DiffArgs),
    /// Execute an observer over a trace file.
    Run(RunArgs),
    /// Re-execute a contract and model over a saved input trace.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Real {
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Osl,
    Json,
    Matlab,
}

impl From<Target> for EmitTarget {
    fn from(t: Target) -> EmitTarget {
        match t {
            Target::Osl => EmitTarget::Osl,
            Target::Json => EmitTarget::Json,
            Target::Matlab => EmitTarget::Matlab,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Bounded,
    Random,
}

#[derive(Args, Debug, Clone)]
struct TypeArgs {
    /// Bit width of every `int`.
    #[arg(long, default_value_t = 32, value_parser = parse_width)]
    int_width: u32,
    /// Lower `int` to an unsigned type.
    #[arg(long)]
    unsigned: bool,
    /// Float precision of every `real`.
    #[arg(long, value_enum, default_value_t = Real::Double)]
    real: Real,
}

impl TypeArgs {
    fn config(&self) -> TypeConfig {
        let prec = match self.real {
            Real::Single => FloatPrecision::Single,
            Real::Double => FloatPrecision::Double,
        };
        TypeConfig::new(self.int_width, !self.unsigned, prec)
    }
}

fn parse_width(s: &str) -> Result<u32, String> {
    match s {
        "8" | "16" | "32" => Ok(s.parse().expect("digits")),
        _ => Err(format!("`{s}` is not one of 8, 16, 32")),
    }
}

#[derive(Args, Debug)]
struct CompileArgs {
    /// Contract source file.
    file: PathBuf,
    #[command(flatten)]
    types: TypeArgs,
    /// Output format; repeat for several.
    #[arg(long, value_enum)]
    emit: Vec<Target>,
    /// Also write the normalized dataflow IR as JSON.
    #[arg(long)]
    dump_ir: bool,
    /// Directory for output files; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Trace length.
    #[arg(long)]
    depth: Option<usize>,
    /// Input domain as NAME=v1,v2,.. or NAME=lo..hi; repeatable.
    #[arg(long = "domain")]
    domains: Vec<String>,
    /// Worker threads; 1 runs sequentially. Defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory for the JSON report and trace files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Contract source file.
    contract: PathBuf,
    /// Design model: a model source file or a built-in model name.
    #[arg(long)]
    model: String,
    #[command(flatten)]
    types: TypeArgs,
    #[arg(long, value_enum, default_value_t = Mode::Bounded)]
    mode: Mode,
    /// Random traces to try (random mode).
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Upper limit on complete traces in bounded mode.
    #[arg(long, default_value_t = 10_000_000)]
    max_traces: u64,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args, Debug)]
struct DiffArgs {
    /// Contract source files.
    #[arg(required = true)]
    contracts: Vec<PathBuf>,
    #[command(flatten)]
    types: TypeArgs,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Contract source, OSL program (.osl) or JSON program (.json).
    program: PathBuf,
    /// CSV trace binding every observer parameter.
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    types: TypeArgs,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Contract source file.
    contract: PathBuf,
    /// Design model: a model source file or a built-in model name.
    #[arg(long)]
    model: String,
    /// CSV trace of the model inputs, as written by `verify --out`.
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    types: TypeArgs,
}

fn color_enabled() -> bool {
    match std::env::var("C2O_COLOR").as_deref() {
        Ok("always" | "1") => true,
        Ok("never" | "0") => false,
        _ => std::io::stderr().is_terminal(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Compile(a) => commands::compile(a),
        Command::Verify(a) => commands::verify(a),
        Command::Diff(a) => commands::diff(a),
        Command::Run(a) => commands::run(a),
        Command::Replay(a) => commands::replay(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let label = if color_enabled() {
                "\x1b[1;31merror\x1b[0m"
            } else {
                "error"
            };
            eprintln!("{label}: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
