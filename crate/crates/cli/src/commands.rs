//! Subcommand implementations. Each returns the process exit code on
//! completion or a [`CliError`] carrying its own code.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use c2o_core::contract::{lints, parse, Contract, FrontendError};
use c2o_core::emit::{emit, parse_json, parse_osl, EmitTarget};
use c2o_core::exec::Exec;
use c2o_core::harness::{
    self, builtin, check_bounded, check_random, BoundedConfig, CheckOutcome, CompiledModel,
    DesignModel, DiffConfig, DiffReport, Domains, Harness, HarnessError, Mismatch, ModelLoadError,
    RandomConfig, BUILTIN_MODELS,
};
use c2o_core::interp::run_outcome;
use c2o_core::ir::{normalize, IrError};
use c2o_core::observer::{lower, ObserverProgram, Param};
use c2o_core::trace::Trace;
use c2o_core::types::TypeConfig;
use c2o_core::CompileError;

use crate::manifest::{InputFile, Report, RunManifest};
use crate::{CheckArgs, CompileArgs, DiffArgs, Mode, ReplayArgs, RunArgs, VerifyArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_TRANSLATION_BUG: u8 = 6;
pub const EXIT_COUNTEREXAMPLE: u8 = 10;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Frontend(String),
    WellFormedness(String),
    Internal(String),
    Interface(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Frontend(_) => 2,
            CliError::WellFormedness(_) => 3,
            CliError::Internal(_) => 4,
            CliError::Interface(_) => 5,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Frontend(m)
            | CliError::WellFormedness(m)
            | CliError::Internal(m)
            | CliError::Interface(m) => m,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn warn(msg: &str) {
    let label = if crate::color_enabled() {
        "\x1b[1;33mwarning\x1b[0m"
    } else {
        "warning"
    };
    eprintln!("{label}: {msg}");
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn frontend_error(path: &Path, e: FrontendError) -> CliError {
    CliError::Frontend(format!("{}:{e}", path.display()))
}

fn ir_error(path: &Path, e: IrError) -> CliError {
    CliError::WellFormedness(format!("{}: {e}", path.display()))
}

fn compile_error(path: &Path, e: CompileError) -> CliError {
    match e {
        CompileError::Ir(e) => ir_error(path, e),
        CompileError::Lower(e) => CliError::Frontend(format!("{}: {e}", path.display())),
    }
}

/// A checked contract and the manifest entry for its source.
fn load_contract(path: &Path) -> CliResult<(Contract, InputFile)> {
    let src = read(path)?;
    let c = parse(&src).map_err(|e| frontend_error(path, e))?;
    for l in lints(&c) {
        warn(&format!("{}:{}: {}", path.display(), l.span, l.message));
    }
    Ok((
        c,
        InputFile::new(&path.display().to_string(), src.as_bytes()),
    ))
}

fn compile_contract(
    path: &Path,
    cfg: &TypeConfig,
) -> CliResult<(Contract, ObserverProgram, InputFile)> {
    let (c, input) = load_contract(path)?;
    let p = c2o_core::compile(&c, cfg).map_err(|e| compile_error(path, e))?;
    Ok((c, p, input))
}

fn load_model(
    spec: &str,
    cfg: &TypeConfig,
) -> CliResult<(Arc<dyn DesignModel>, Option<InputFile>)> {
    if BUILTIN_MODELS.contains(&spec) {
        let m = builtin(spec).map_err(|e| CliError::Internal(e.to_string()))?;
        return Ok((m, None));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "model `{spec}` is neither a file nor a built-in model ({})",
            BUILTIN_MODELS.join(", ")
        )));
    }
    let src = read(path)?;
    let model = CompiledModel::from_source(&src, cfg).map_err(|e| match e {
        ModelLoadError::Frontend(e) => frontend_error(path, e),
        ModelLoadError::Compile(e) => compile_error(path, e),
        other => CliError::Frontend(format!("{}: {other}", path.display())),
    })?;
    Ok((Arc::new(model), Some(InputFile::new(spec, src.as_bytes()))))
}

fn harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Interface(m) => {
            let lines: Vec<String> = m.0.iter().map(|x| format!("  {x}")).collect();
            CliError::Interface(format!("interface mismatch:\n{}", lines.join("\n")))
        }
        HarnessError::Binding(_) => CliError::Interface(e.to_string()),
        HarnessError::Domain(e) => CliError::Usage(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

fn domains(specs: &[String], params: &[Param]) -> CliResult<Domains> {
    let mut d = Domains::new();
    for s in specs {
        d.parse_assignment(s, params)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(d)
}

/// Callers produce every file's contents first, so a failing command
/// writes nothing.
fn write_all(dir: &Path, files: &[(String, String)]) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Usage(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    for (name, text) in files {
        fs::write(dir.join(name), text).map_err(io)?;
    }
    Ok(())
}

fn exec(check: &CheckArgs) -> CliResult<Exec> {
    if check.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok(Exec::with_jobs(check.jobs))
}

pub fn compile(a: CompileArgs) -> CliResult<u8> {
    let cfg = a.types.config();
    let (c, _) = load_contract(&a.file)?;
    let ir = normalize(&c).map_err(|e| ir_error(&a.file, e))?;
    let p = lower(&ir, &cfg).map_err(|e| compile_error(&a.file, e.into()))?;
    let targets: Vec<EmitTarget> = if a.emit.is_empty() {
        vec![EmitTarget::Osl]
    } else {
        a.emit.iter().map(|&t| t.into()).collect()
    };
    let mut files = Vec::new();
    if a.dump_ir {
        let mut json = ir.to_json();
        json.push('\n');
        files.push((format!("{}.ir.json", p.name), json));
    }
    for t in targets {
        files.push((format!("{}.{}", p.name, t.extension()), emit(&p, t)));
    }
    match &a.out {
        Some(dir) => write_all(dir, &files)?,
        None => {
            for (_, text) in &files {
                print!("{text}");
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerifyBody<'a> {
    contract: &'a str,
    model: &'a str,
    mode: &'static str,
    depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<u64>,
    outcome: &'a CheckOutcome,
    warnings: Vec<String>,
}

pub fn verify(a: VerifyArgs) -> CliResult<u8> {
    let cfg = a.types.config();
    let (_, observer, contract_file) = compile_contract(&a.contract, &cfg)?;
    let (model, model_file) = load_model(&a.model, &cfg)?;
    let h = Harness::new(observer, model).map_err(harness_error)?;
    let doms = domains(&a.check.domains, &h.input_params())?;
    let ex = exec(&a.check)?;
    let (depth, outcome) = match a.mode {
        Mode::Bounded => {
            let cfg = BoundedConfig {
                depth: a.check.depth.unwrap_or(BoundedConfig::default().depth),
                max_traces: a.max_traces,
            };
            (
                cfg.depth,
                check_bounded(&h, &doms, &cfg, &ex).map_err(harness_error)?,
            )
        }
        Mode::Random => {
            let cfg = RandomConfig {
                trials: a.trials,
                depth: a.check.depth.unwrap_or(DiffConfig::default().depth),
                seed: a.seed,
            };
            (
                cfg.depth,
                check_random(&h, &doms, &cfg, &ex).map_err(harness_error)?,
            )
        }
    };
    let random = a.mode == Mode::Random;
    let mut inputs = vec![contract_file];
    inputs.extend(model_file);
    let report = Report {
        manifest: RunManifest::new(cfg, inputs, random.then_some(a.seed)),
        body: VerifyBody {
            contract: &h.observer().name,
            model: h.model().name(),
            mode: if random { "random" } else { "bounded" },
            depth,
            trials: random.then_some(a.trials),
            outcome: &outcome,
            warnings: h.warnings().iter().map(Mismatch::to_string).collect(),
        },
    };
    if let Some(dir) = &a.check.out {
        let mut files = vec![("report.json".to_string(), report.to_json())];
        if let Some(cex) = outcome.counterexample() {
            files.push((
                "counterexample.csv".into(),
                cex.inputs.to_csv(&h.input_params()),
            ));
        }
        write_all(dir, &files)?;
    }
    if a.check.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", outcome.render(&h));
    }
    Ok(if outcome.is_pass() {
        EXIT_OK
    } else {
        EXIT_COUNTEREXAMPLE
    })
}

#[derive(Serialize)]
struct DiffBody {
    reports: Vec<DiffReport>,
}

pub fn diff(a: DiffArgs) -> CliResult<u8> {
    let cfg = a.types.config();
    let ex = exec(&a.check)?;
    let mut inputs = Vec::new();
    let mut reports = Vec::new();
    let mut params = Vec::new();
    for path in &a.contracts {
        let (c, p, input) = compile_contract(path, &cfg)?;
        inputs.push(input);
        let dc = DiffConfig {
            trials: a.trials,
            depth: a.check.depth.unwrap_or(DiffConfig::default().depth),
            seed: a.seed,
            domains: domains(&a.check.domains, &p.params)?,
        };
        let r = harness::diff(&c, &cfg, &dc, &ex)
            .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
        if !a.check.json {
            print!("{}", r.render());
        }
        reports.push(r);
        params.push(p.params);
    }
    let bugs: u64 = reports.iter().map(DiffReport::translation_bugs).sum();
    let report = Report {
        manifest: RunManifest::new(cfg, inputs, Some(a.seed)),
        body: DiffBody { reports },
    };
    if let Some(dir) = &a.check.out {
        let mut files = vec![("diff.json".to_string(), report.to_json())];
        for (r, params) in report.body.reports.iter().zip(&params) {
            for d in &r.examples {
                files.push((
                    format!("{}-{}-trial{}.csv", r.contract, d.class, d.trial),
                    d.trace.to_csv(params),
                ));
            }
        }
        write_all(dir, &files)?;
    }
    if a.check.json {
        print!("{}", report.to_json());
    }
    Ok(if bugs == 0 {
        EXIT_OK
    } else {
        EXIT_TRANSLATION_BUG
    })
}

fn load_program(path: &Path, cfg: &TypeConfig) -> CliResult<ObserverProgram> {
    let name = path.to_string_lossy();
    if name.ends_with(".json") {
        parse_json(&read(path)?).map_err(|e| CliError::Frontend(format!("{}: {e}", path.display())))
    } else if name.ends_with(".osl") {
        parse_osl(&read(path)?).map_err(|e| CliError::Frontend(format!("{}: {e}", path.display())))
    } else {
        Ok(compile_contract(path, cfg)?.1)
    }
}

fn load_trace(path: &Path, params: &[Param]) -> CliResult<Trace> {
    Trace::from_csv(&read(path)?, params)
        .map_err(|e| CliError::Frontend(format!("{}: {e}", path.display())))
}

pub fn run(a: RunArgs) -> CliResult<u8> {
    let cfg = a.types.config();
    let p = load_program(&a.program, &cfg)?;
    let trace = load_trace(&a.trace, &p.params)?;
    let out = run_outcome(&p, &trace);
    let mut violated = false;
    for (t, v) in out.verdicts.iter().enumerate() {
        let fmt = |m: &std::collections::BTreeMap<String, bool>| {
            m.iter()
                .map(|(k, b)| format!("\"{k}\"={b}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let bad = v.violations();
        violated |= !bad.is_empty();
        println!(
            "step {t}: assume [{}] prove [{}]{}{}",
            fmt(&v.assumes),
            fmt(&v.proves),
            if v.vacuous { " vacuous" } else { "" },
            if bad.is_empty() {
                String::new()
            } else {
                format!(" VIOLATED {}", bad.join(", "))
            }
        );
    }
    match out.error {
        Some(e) if e.is_trap() => {
            println!("step {}: {e}", e.step());
            Ok(EXIT_COUNTEREXAMPLE)
        }
        Some(e) => Err(CliError::Internal(e.to_string())),
        None if violated => Ok(EXIT_COUNTEREXAMPLE),
        None => Ok(EXIT_OK),
    }
}

pub fn replay(a: ReplayArgs) -> CliResult<u8> {
    let cfg = a.types.config();
    let (_, observer, _) = compile_contract(&a.contract, &cfg)?;
    let (model, _) = load_model(&a.model, &cfg)?;
    let h = Harness::new(observer, model).map_err(harness_error)?;
    let trace = load_trace(&a.trace, &h.input_params())?;
    match h.counterexample(trace.clone()).map_err(harness_error)? {
        Some(cex) => {
            print!("{}", cex.render());
            Ok(EXIT_COUNTEREXAMPLE)
        }
        None => {
            println!("no failure in {} steps", trace.len());
            Ok(EXIT_OK)
        }
    }
}
