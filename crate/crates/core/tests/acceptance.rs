//! End-to-end acceptance criteria. Runs without the libtest harness so
//! that every criterion prints one PASS or FAIL line.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use c2o_core::compile;
use c2o_core::contract::{check_temporal_wellformedness, parse, Contract};
use c2o_core::emit::emit_matlab;
use c2o_core::exec::Exec;
use c2o_core::gen::{random_contract, GenConfig};
use c2o_core::harness::{
    builtin, check_bounded, default_domain, diff, BindingViolation, BoundedConfig, CompiledModel,
    DiffConfig, DivergenceClass, Domains, FailureKind, Harness, HarnessError, MismatchKind,
    Severity,
};
use c2o_core::interp::Interpreter;
use c2o_core::observer::{ObserverProgram, PersistentKind};
use c2o_core::oracle::{self, OValue};
use c2o_core::trace::{Trace, Valuation};
use c2o_core::types::{FloatPrecision, IntType, TypeConfig};
use c2o_core::value::Value;

type Outcome = Result<String, String>;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name]
        .iter()
        .collect();
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn contract(name: &str) -> Contract {
    parse(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn observer(name: &str) -> ObserverProgram {
    compile(&contract(name), &TypeConfig::default()).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn int(v: i64) -> Value {
    Value::int(v, IntType::INT32)
}

/// One single-construct contract per row of the construct mapping, the
/// fragment its MATLAB emission must contain, and the type configuration.
fn mapping_rows() -> Vec<(&'static str, String, TypeConfig, Vec<&'static str>)> {
    let dflt = TypeConfig::default();
    let row = |name: &'static str, decls: &str, cfg: TypeConfig, frags: Vec<&'static str>| {
        (name, format!("component Row {{ {decls} }}"), cfg, frags)
    };
    vec![
        row("component contract", "input X : bool; guarantee \"g\" : X;", dflt, vec!["function Row("]),
        row(
            "inputs and outputs",
            "input Input : int; output Output : int; guarantee \"g\" : Output = Input;",
            dflt,
            vec!["function Row(Input, Output)"],
        ),
        row(
            "assume",
            "input Input : int; assume \"B input range\" : Input < 20; guarantee \"g\" : true;",
            dflt,
            vec!["sldv.assume(Input < 20)"],
        ),
        row(
            "guarantee",
            "input Input : int; output Output : int; guarantee \"B output range\" : Output < Input + 15;",
            dflt,
            vec!["sldv.prove(Output < (Input + 15))"],
        ),
        row(
            "eq",
            "record SyncBus { Active : bool; } input Sync : SyncBus; eq Active : bool = not Sync.Active; guarantee \"g\" : Active;",
            dflt,
            vec!["Active = not(Sync.Active)"],
        ),
        row(
            "if-then-else",
            "input Error : bool; input Active : bool; guarantee \"g\" : if Error then false else Active;",
            dflt,
            vec!["ifFunction(Error, false, Active)"],
        ),
        row(
            "int types",
            "input X : int; guarantee \"g\" : true -> pre(X) >= X;",
            TypeConfig::new(16, false, FloatPrecision::Double),
            vec!["pre_X = uint16(0);"],
        ),
        row(
            "real types",
            "input R : real; guarantee \"g\" : true -> pre(R) <= R;",
            TypeConfig::new(32, true, FloatPrecision::Single),
            vec!["pre_R = single(0"],
        ),
        row("bool type", "input B : bool; guarantee \"g\" : B or true;", dflt, vec!["B || true"]),
        row(
            "record types",
            "record Bus { A : bool; N : int; } input S : Bus; guarantee \"g\" : S.A;",
            dflt,
            vec!["sldv.prove(S.A)"],
        ),
        row(
            "- not <> and or",
            "input A : int; input P : bool; input Q : bool; guarantee \"g\" : (-A <> A) and (not P or Q);",
            dflt,
            vec!["(-A) ~= A", "&&", "not(P) || Q"],
        ),
        row(
            "+ - * / > < >= <=",
            "input A : int; input R : real; guarantee \"g\" : (A + 1 > A - 1) and (A * 2 >= A) and (R / 2.0 <= R) and (A < 9);",
            dflt,
            vec!["A + 1", "A - 1", "A * 2", "R / 2", ">", ">=", "<=", "A < 9"],
        ),
        row("mod", "input A : int; guarantee \"g\" : A mod 4 >= 0;", dflt, vec!["mod(A, int32(4))"]),
        row(
            "= on records",
            "record Bus { A : bool; } input S : Bus; input T : Bus; guarantee \"g\" : S = T;",
            dflt,
            vec!["isequal(S, T)"],
        ),
        row("div", "input A : int; guarantee \"g\" : A div 3 <= A;", dflt, vec!["idivide(int32(A), int32(3))"]),
        row("=>", "input P : bool; input Q : bool; guarantee \"g\" : P => Q;", dflt, vec!["impliesFunction(P, Q)"]),
        row(
            "->",
            "input P : bool; guarantee \"g\" : P -> true;",
            dflt,
            vec!["arrowFunction(first_time, P, true)", "persistent first_time;"],
        ),
        row(
            "pre",
            "input X : int; guarantee \"g\" : true -> pre(X) < X;",
            dflt,
            vec!["persistent pre_X;", "pre_X < X", "pre_X = X;"],
        ),
    ]
}

/// Every construct-mapping row compiles alone and emits its MATLAB form;
/// the combined fixtures match their goldens.
fn construct_mapping() -> Outcome {
    let start = Instant::now();
    let rows = mapping_rows();
    for (name, src, cfg, frags) in &rows {
        let c = parse(src).map_err(|e| format!("{name}: {e}"))?;
        let m = emit_matlab(&compile(&c, cfg).map_err(|e| format!("{name}: {e}"))?);
        for f in frags {
            ensure(m.contains(f), || {
                format!("row `{name}`: missing `{f}` in\n{m}")
            })?;
        }
    }
    for (src, golden) in [
        ("constructs.agc", "golden/constructs.m"),
        ("ops.agc", "golden/ops.m"),
    ] {
        let got = emit_matlab(&observer(src));
        ensure(got == fixture(golden), || {
            format!("{src} differs from {golden}:\n{got}")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} of {} rows, 2 goldens, {} ms; `div` uses truncating idivide on int-cast operands",
        rows.len(),
        rows.len(),
        elapsed.as_millis()
    ))
}

fn run_bools(p: &ObserverProgram, n: usize) -> Result<Vec<c2o_core::interp::StepVerdict>, String> {
    let mut it = Interpreter::new(p).map_err(|e| e.0)?;
    (0..n)
        .map(|_| it.step(&Valuation::new()).map_err(|e| e.to_string()))
        .collect()
}

/// Step semantics of arrow and pre over N = 10, plus the guardedness rule.
fn temporal_semantics() -> Outcome {
    const N: usize = 10;
    let c = parse(r#"component Counter { eq x : int = 0 -> pre(x) + 1; guarantee "g" : x >= 0; }"#)
        .map_err(|e| e.to_string())?;
    let p = compile(&c, &TypeConfig::default()).map_err(|e| e.to_string())?;
    let mut it = Interpreter::new(&p).map_err(|e| e.0)?;
    let run = oracle::eval(
        &c,
        &Trace::new(vec![Valuation::new(); N]),
        &TypeConfig::default(),
    );
    for t in 0..N {
        it.step(&Valuation::new()).map_err(|e| e.to_string())?;
        ensure(it.lookup("x") == Some(&int(t as i64)), || {
            format!("observer x at step {t} is {:?}", it.lookup("x"))
        })?;
        ensure(run.steps[t].eqs["x"] == OValue::Int(t.into()), || {
            format!("reference x at step {t} is {:?}", run.steps[t].eqs["x"])
        })?;
    }

    let c =
        parse(r#"component Init { guarantee "g" : true -> false; }"#).map_err(|e| e.to_string())?;
    let p = compile(&c, &TypeConfig::default()).map_err(|e| e.to_string())?;
    let verdicts = run_bools(&p, N)?;
    for (t, v) in verdicts.iter().enumerate() {
        ensure(v.proves["g"] == (t == 0), || {
            format!("`true -> false` at step {t}")
        })?;
    }

    let accepted = [
        "true -> pre(B -> pre(B))",
        "0 -> pre(X)",
        "true -> pre(0 -> pre(X)) > 0",
        "(0 -> pre(X)) + (1 -> pre(X + 1)) > 0",
        "if B then (0 -> pre(X)) > 0 else true",
    ];
    let rejected = [
        "pre(X) > 0",
        "true -> pre(pre(B))",
        "pre(0 -> pre(X)) > 0",
        "true -> pre(pre(X) -> X) > 0",
        "X + pre(X) > 0",
    ];
    let wellformed = |body: &str| {
        let ty = if body.starts_with("0 ->") {
            "int"
        } else {
            "bool"
        };
        let src = format!(
            "component W {{ input X : int; input B : bool; eq e : {ty} = {body}; guarantee \"g\" : true; }}"
        );
        let c = parse(&src).unwrap_or_else(|e| panic!("{body}: {e}"));
        check_temporal_wellformedness(&c).is_ok()
    };
    for b in accepted {
        ensure(wellformed(b), || format!("rejected well-formed `{b}`"))?;
    }
    for b in rejected {
        ensure(!wellformed(b), || format!("accepted ill-formed `{b}`"))?;
    }
    Ok(format!(
        "counter 0..{} and `true -> false` exact; {} accepted, {} rejected",
        N - 1,
        accepted.len(),
        rejected.len()
    ))
}

/// One delayed value per distinct `pre` operand, however often it is used.
fn shared_persistents() -> Outcome {
    let c = parse(
        r#"component P {
             input x : int;
             eq d : int = 0 -> pre(x);
             guarantee "a" : true -> pre(x) > 0;
             guarantee "b" : true -> pre(x) < d + 5;
             guarantee "c" : (true -> pre(x) = 3) or d = 0;
           }"#,
    )
    .map_err(|e| e.to_string())?;
    let p = compile(&c, &TypeConfig::default()).map_err(|e| e.to_string())?;
    let firsts = p
        .persistents
        .iter()
        .filter(|x| x.kind == PersistentKind::FirstTime)
        .count();
    let pres: Vec<&str> = p.pre_persistents().map(|x| x.name.as_str()).collect();
    ensure(firsts == 1 && pres == ["pre_x"], || {
        format!(
            "persistents: {:?}",
            p.persistents.iter().map(|x| &x.name).collect::<Vec<_>>()
        )
    })?;
    Ok(format!(
        "4 occurrences of pre(x) give {} persistents",
        p.persistents.len()
    ))
}

/// The compiled observer agrees with the exact reference on generated
/// contracts and traces.
fn differential() -> Outcome {
    const CONTRACTS: u64 = 1000;
    const TRIALS: u64 = 10;
    const DEPTH: usize = 20;
    let start = Instant::now();
    let exec = Exec::parallel();
    let mut pairs = 0;
    let mut counts: BTreeMap<DivergenceClass, u64> = BTreeMap::new();
    let mut first_bug = None;
    for seed in 0..CONTRACTS {
        let c = random_contract(seed, &GenConfig::default());
        let dc = DiffConfig {
            trials: TRIALS,
            depth: DEPTH,
            seed,
            domains: Domains::new(),
        };
        let r = diff(&c, &TypeConfig::default(), &dc, &exec)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        pairs += r.trials;
        for (k, n) in &r.counts {
            *counts.entry(*k).or_default() += n;
        }
        if first_bug.is_none() && r.translation_bugs() > 0 {
            first_bug = Some(format!("seed {seed}:\n{c}\n{}", r.render()));
        }
    }
    let elapsed = start.elapsed();
    let bugs = counts
        .get(&DivergenceClass::TranslationBug)
        .copied()
        .unwrap_or(0);
    ensure(bugs == 0, || {
        format!(
            "{bugs} translation bugs; first at {}",
            first_bug.unwrap_or_default()
        )
    })?;
    ensure(pairs >= 10_000, || format!("only {pairs} pairs"))?;
    ensure(elapsed < Duration::from_secs(120), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{pairs} pairs at depth {DEPTH}, 0 translation bugs, other divergences {counts:?}, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

/// The mode-toggle contract holds for the correct model at depth 6 and the
/// defective model yields a replayable counterexample at step 0.
fn bscu_com() -> Outcome {
    let start = Instant::now();
    let exec = Exec::parallel();
    let cfg = BoundedConfig {
        depth: 6,
        ..BoundedConfig::default()
    };
    let models: [(&str, Arc<dyn c2o_core::harness::DesignModel>, bool); 4] = [
        (
            "bscu-com",
            builtin("bscu-com").map_err(|e| e.to_string())?,
            true,
        ),
        (
            "bscu_com_model.agc",
            Arc::new(
                CompiledModel::from_source(&fixture("bscu_com_model.agc"), &TypeConfig::default())
                    .map_err(|e| e.to_string())?,
            ),
            true,
        ),
        (
            "bscu-com-defect",
            builtin("bscu-com-defect").map_err(|e| e.to_string())?,
            false,
        ),
        (
            "bscu_com_defect.agc",
            Arc::new(
                CompiledModel::from_source(&fixture("bscu_com_defect.agc"), &TypeConfig::default())
                    .map_err(|e| e.to_string())?,
            ),
            false,
        ),
    ];
    let mut explored = 0;
    for (name, model, correct) in models {
        let h =
            Harness::new(observer("bscu_com.agc"), model).map_err(|e| format!("{name}: {e}"))?;
        let out =
            check_bounded(&h, &Domains::new(), &cfg, &exec).map_err(|e| format!("{name}: {e}"))?;
        match (out.counterexample(), correct) {
            (None, true) => {
                if let c2o_core::harness::CheckOutcome::Pass(p) = &out {
                    ensure(p.complete && p.depth == 6, || {
                        format!("{name}: incomplete {p:?}")
                    })?;
                    explored = p.explored;
                }
            }
            (Some(cex), false) => {
                ensure(cex.failure.step == 0, || {
                    format!("{name}: failure at step {}", cex.failure.step)
                })?;
                ensure(
                    matches!(&cex.failure.kind, FailureKind::Violation { label } if label == "starts in MANUAL"),
                    || format!("{name}: {}", cex.failure),
                )?;
                h.replay(cex).map_err(|e| format!("{name}: replay: {e}"))?;
            }
            (Some(cex), true) => {
                return Err(format!(
                    "{name}: unexpected counterexample\n{}",
                    cex.render()
                ))
            }
            (None, false) => return Err(format!("{name}: defect not found")),
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "correct models pass ({explored} traces at depth 6), defects fail at step 0 and replay, {:.1} s",
        elapsed.as_secs_f64()
    ))
}

/// Bounded-integer wraparound is classified as such and disappears when
/// values stay in range.
fn overflow_classification() -> Outcome {
    let c = contract("wrap.agc");
    let exec = Exec::parallel();
    let int8 = TypeConfig::new(8, true, FloatPrecision::Double);
    let edge: Vec<Value> = [-128, -1, 0, 1, 126, 127]
        .iter()
        .map(|&v| Value::int(v, int8.int_type()))
        .collect();
    let narrow = diff(
        &c,
        &int8,
        &DiffConfig {
            trials: 200,
            depth: 5,
            seed: 1,
            domains: Domains::new().with("X", edge),
        },
        &exec,
    )
    .map_err(|e| e.to_string())?;
    let overflows = narrow.count(DivergenceClass::OverflowDivergence);
    ensure(overflows > 0 && overflows == narrow.divergences(), || {
        narrow.render()
    })?;

    let wide_values: Vec<Value> = (-100..=100).map(int).collect();
    let wide = diff(
        &c,
        &TypeConfig::default(),
        &DiffConfig {
            trials: 200,
            depth: 5,
            seed: 1,
            domains: Domains::new().with("X", wide_values),
        },
        &exec,
    )
    .map_err(|e| e.to_string())?;
    ensure(wide.divergences() == 0, || wide.render())?;
    Ok(format!(
        "int8: {overflows} of 200 traces OverflowDivergence, nothing else; int32 in [-100, 100]: 0 divergences"
    ))
}

/// Initial values of delayed persistents are never observable.
fn defaults_unobservable() -> Outcome {
    const CONTRACTS: u64 = 1000;
    const DEPTH: usize = 8;
    let mut overridden = 0;
    for seed in 0..CONTRACTS {
        let c = random_contract(seed, &GenConfig::default());
        let p = compile(&c, &TypeConfig::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let trace = Domains::new()
            .random_trace(&p.params, DEPTH, &mut rng)
            .map_err(|e| e.to_string())?;
        let defaults: BTreeMap<String, Value> = p
            .pre_persistents()
            .map(|x| {
                let dom = default_domain(&x.ty);
                (
                    x.name.clone(),
                    dom.choose(&mut rng).expect("nonempty domain").clone(),
                )
            })
            .collect();
        overridden += defaults.len();
        let mut plain = Interpreter::new(&p).map_err(|e| e.0)?;
        let mut fuzzed = Interpreter::with_defaults(&p, &defaults).map_err(|e| e.0)?;
        for (t, inputs) in trace.steps.iter().enumerate() {
            match (plain.step(inputs), fuzzed.step(inputs)) {
                (Ok(a), Ok(b)) => {
                    ensure(
                        a.assumes == b.assumes && a.proves == b.proves && a.vacuous == b.vacuous,
                        || {
                            format!("seed {seed}, step {t}: defaults {defaults:?} changed the verdict\n{c}")
                        },
                    )?
                }
                (Err(a), Err(b)) if a.to_string() == b.to_string() => break,
                (a, b) => return Err(format!("seed {seed}, step {t}: {a:?} vs {b:?}\n{c}")),
            }
        }
    }
    Ok(format!(
        "{CONTRACTS} contracts, {overridden} randomized initial values, verdicts unchanged"
    ))
}

/// Interface drift is reported field by field, and a binding that reuses a
/// signal name is rejected.
fn binding_checks() -> Outcome {
    let model =
        CompiledModel::from_source(&fixture("sync_bus_drift_model.agc"), &TypeConfig::default())
            .map_err(|e| e.to_string())?;
    let errors = match Harness::new(observer("sync_bus.agc"), Arc::new(model)) {
        Err(HarnessError::Interface(m)) => m.0,
        Err(e) => return Err(format!("unexpected error: {e}")),
        Ok(_) => return Err("drifted model was accepted".into()),
    };
    let has = |kind: MismatchKind, path: &str| {
        errors
            .iter()
            .any(|m| m.kind == kind && m.path == path && m.severity == Severity::Error)
    };
    ensure(has(MismatchKind::FieldMissing, "Sync.Mode"), || {
        format!("{errors:?}")
    })?;
    ensure(has(MismatchKind::FieldExtra, "Sync.ModeCmd"), || {
        format!("{errors:?}")
    })?;
    ensure(has(MismatchKind::FieldExtra, "Sync.Spare"), || {
        format!("{errors:?}")
    })?;

    let model: Arc<dyn c2o_core::harness::DesignModel> = Arc::new(
        CompiledModel::from_source(&fixture("range_identity_model.agc"), &TypeConfig::default())
            .map_err(|e| e.to_string())?,
    );
    let good = Harness::new(observer("range.agc"), model.clone()).map_err(|e| e.to_string())?;
    let mut binding = good.binding().clone();
    let (port, id) = binding.model_inputs[0].clone();
    let mut dup = binding.signals[id].clone();
    dup.id = binding.signals.len();
    binding.signals.push(dup.clone());
    binding.model_inputs[0] = (port, dup.id);
    match Harness::with_binding(observer("range.agc"), model, binding, vec![]) {
        Err(HarnessError::Binding(v))
            if v.iter()
                .any(|x| matches!(x, BindingViolation::DuplicateSignal(n) if *n == dup.name)) => {}
        Err(e) => return Err(format!("duplicate binding: unexpected {e}")),
        Ok(_) => return Err("duplicate binding accepted".into()),
    }
    Ok(format!(
        "{} field-level errors on drift; duplicate port binding rejected",
        errors.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("construct mapping", construct_mapping),
        ("temporal semantics", temporal_semantics),
        ("shared pre persistents", shared_persistents),
        ("differential soundness", differential),
        ("mode-toggle verification", bscu_com),
        ("overflow classification", overflow_classification),
        ("initial values unobservable", defaults_unobservable),
        ("interface and binding checks", binding_checks),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match res {
            Ok(detail) => println!("criterion {}: {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: {name}: FAIL\n{why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
