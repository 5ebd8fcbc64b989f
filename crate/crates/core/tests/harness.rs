//! Harness behaviour on the fixture contracts and models.

use std::path::PathBuf;
use std::sync::Arc;

use proptest::prelude::*;

use c2o_core::compile;
use c2o_core::contract::parse;
use c2o_core::exec::Exec;
use c2o_core::gen::{random_contract, GenConfig};
use c2o_core::harness::{
    builtin, check_bounded, check_random, diff, BoundedConfig, CheckOutcome, CompiledModel,
    DesignModel, DiffConfig, Domains, FailureKind, Harness, RandomConfig,
};
use c2o_core::observer::ObserverProgram;
use c2o_core::trace::Trace;
use c2o_core::types::{IntType, TypeConfig};
use c2o_core::value::Value;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "fixtures", name]
        .iter()
        .collect();
    std::fs::read_to_string(p).unwrap()
}

fn observer(name: &str) -> ObserverProgram {
    compile(&parse(&fixture(name)).unwrap(), &TypeConfig::default()).unwrap()
}

fn model(name: &str) -> Arc<dyn DesignModel> {
    Arc::new(CompiledModel::from_source(&fixture(name), &TypeConfig::default()).unwrap())
}

fn range_harness(model_file: &str) -> Harness {
    Harness::new(observer("range.agc"), model(model_file)).unwrap()
}

fn input_domain(values: &[i64]) -> Domains {
    Domains::new().with(
        "Input",
        values
            .iter()
            .map(|&v| Value::int(v, IntType::INT32))
            .collect(),
    )
}

fn sequential() -> Exec {
    Exec::with_jobs(Some(1))
}

#[test]
fn identity_model_passes_every_trace_of_depth_three() {
    let h = range_harness("range_identity_model.agc");
    let out = check_bounded(
        &h,
        &input_domain(&[0, 19]),
        &BoundedConfig {
            depth: 3,
            ..BoundedConfig::default()
        },
        &sequential(),
    )
    .unwrap();
    match out {
        CheckOutcome::Pass(p) => {
            assert_eq!(p.explored, 8);
            assert!(p.complete);
        }
        CheckOutcome::Counterexample(c) => panic!("{}", c.render()),
    }
}

#[test]
fn offset_model_fails_at_the_first_step() {
    let h = range_harness("range_offset_model.agc");
    let out = check_bounded(
        &h,
        &input_domain(&[0, 19]),
        &BoundedConfig::default(),
        &sequential(),
    )
    .unwrap();
    let cex = out
        .counterexample()
        .expect("offset model violates the range");
    assert_eq!(cex.failure.step, 0);
    assert_eq!(
        cex.failure.kind,
        FailureKind::Violation {
            label: "B output range".into()
        }
    );
    assert_eq!(cex.inputs.len(), 1);
    assert_eq!(cex.inputs.steps[0]["Input"], Value::int(0, IntType::INT32));
    h.replay(cex).unwrap();
    let rendered = out.render(&h);
    assert!(rendered.contains("COUNTEREXAMPLE"));
    assert!(rendered.contains("FAIL  \"B output range\""));
}

#[test]
fn violated_assumption_makes_the_rest_of_the_trace_vacuous() {
    // Input 20 breaks the assumption, so the offset model's Output 40 is
    // never checked after it.
    let h = range_harness("range_offset_model.agc");
    let out = check_bounded(
        &h,
        &input_domain(&[20]),
        &BoundedConfig {
            depth: 4,
            ..BoundedConfig::default()
        },
        &sequential(),
    )
    .unwrap();
    assert!(out.is_pass(), "{out:?}");
}

#[test]
fn budget_reduces_the_depth() {
    let h = range_harness("range_identity_model.agc");
    let out = check_bounded(
        &h,
        &input_domain(&[0, 1, 2, 3]),
        &BoundedConfig {
            depth: 10,
            max_traces: 100,
        },
        &sequential(),
    )
    .unwrap();
    match out {
        CheckOutcome::Pass(p) => {
            assert_eq!(
                (p.depth, p.requested_depth, p.complete, p.explored),
                (3, 10, false, 64)
            );
        }
        CheckOutcome::Counterexample(c) => panic!("{}", c.render()),
    }
}

#[test]
fn random_search_is_deterministic_and_shrinks() {
    let h = range_harness("range_offset_model.agc");
    let doms = input_domain(&[25, 30, 3, 0]);
    let cfg = RandomConfig {
        trials: 50,
        depth: 8,
        seed: 42,
    };
    let a = check_random(&h, &doms, &cfg, &sequential()).unwrap();
    let b = check_random(&h, &doms, &cfg, &Exec::with_jobs(Some(4))).unwrap();
    assert_eq!(a, b);
    let cex = a.counterexample().expect("offset model fails");
    assert_eq!(cex.inputs.len(), 1, "{}", cex.render());
    // The earliest failing domain value is 3 since 25 and 30 are excluded
    // by the assumption.
    assert_eq!(cex.inputs.steps[0]["Input"], Value::int(3, IntType::INT32));
    assert!(cex.shrunk_from.is_some_and(|n| n >= 1));
    assert!(cex.trial.is_some());
    h.replay(cex).unwrap();
}

#[test]
fn zero_trials_pass_trivially() {
    let h = range_harness("range_offset_model.agc");
    let cfg = RandomConfig {
        trials: 0,
        depth: 5,
        seed: 0,
    };
    match check_random(&h, &Domains::new(), &cfg, &sequential()).unwrap() {
        CheckOutcome::Pass(p) => assert_eq!(p.explored, 0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn replay_detects_a_changed_model() {
    let failing = range_harness("range_offset_model.agc");
    let out = check_bounded(
        &failing,
        &input_domain(&[0]),
        &BoundedConfig::default(),
        &sequential(),
    )
    .unwrap();
    let cex = out.counterexample().unwrap();
    let fixed = range_harness("range_identity_model.agc");
    assert!(fixed.replay(cex).is_err());
}

#[test]
fn counterexample_serializes_with_its_signal_table() {
    let h = range_harness("range_offset_model.agc");
    let out = check_bounded(
        &h,
        &input_domain(&[0]),
        &BoundedConfig::default(),
        &sequential(),
    )
    .unwrap();
    let json: serde_json::Value = serde_json::to_value(&out).unwrap();
    assert_eq!(json["result"], "counterexample");
    assert_eq!(json["step"], 0);
    assert_eq!(json["kind"], "violation");
    assert_eq!(json["label"], "B output range");
    let cols: Vec<&str> = json["table"]["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert!(
        cols.contains(&"Input") && cols.contains(&"Output"),
        "{cols:?}"
    );
}

#[test]
fn native_and_compiled_mode_toggle_models_agree_on_the_contract() {
    let cfg = BoundedConfig {
        depth: 5,
        ..BoundedConfig::default()
    };
    for (native, compiled) in [
        ("bscu-com", "bscu_com_model.agc"),
        ("bscu-com-defect", "bscu_com_defect.agc"),
    ] {
        let a = Harness::new(observer("bscu_com.agc"), builtin(native).unwrap()).unwrap();
        let b = Harness::new(observer("bscu_com.agc"), model(compiled)).unwrap();
        let ra = check_bounded(&a, &Domains::new(), &cfg, &sequential()).unwrap();
        let rb = check_bounded(&b, &Domains::new(), &cfg, &sequential()).unwrap();
        assert_eq!(ra.is_pass(), rb.is_pass(), "{native}");
        assert_eq!(
            ra.counterexample().map(|c| &c.inputs),
            rb.counterexample().map(|c| &c.inputs),
            "{native}"
        );
    }
}

#[test]
fn trap_in_the_observer_is_a_failure() {
    let c =
        parse(r#"component T { input D : int; output O : int; guarantee "g" : 10 div D > O; }"#)
            .unwrap();
    let p = compile(&c, &TypeConfig::default()).unwrap();
    let m = CompiledModel::from_source(
        "component M { input D : int; output O : int; eq O : int = 0 - 100; }",
        &TypeConfig::default(),
    )
    .unwrap();
    let h = Harness::new(p, Arc::new(m)).unwrap();
    let d = |v: i64| Value::int(v, IntType::INT32);
    let doms = Domains::new().with("D", vec![d(1), d(0)]);
    let cfg = BoundedConfig {
        depth: 2,
        ..BoundedConfig::default()
    };
    let out = check_bounded(&h, &doms, &cfg, &sequential()).unwrap();
    let cex = out.counterexample().expect("division by zero");
    assert!(matches!(cex.failure.kind, FailureKind::Trap { .. }));
    let step = |v: i64| [("D".to_string(), d(v))].into();
    assert_eq!(cex.inputs, Trace::new(vec![step(1), step(0)]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sequential_and_parallel_bounded_search_agree(depth in 1usize..6, bad in 0i64..40) {
        // Two values break the assumption; `bad` may or may not fail.
        let h = range_harness("range_offset_model.agc");
        let doms = input_domain(&[25, 30, bad]);
        let cfg = BoundedConfig { depth, ..BoundedConfig::default() };
        let a = check_bounded(&h, &doms, &cfg, &sequential()).unwrap();
        let b = check_bounded(&h, &doms, &cfg, &Exec::with_jobs(Some(4))).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sequential_and_parallel_diff_agree(seed in 0u64..10_000) {
        let c = random_contract(seed, &GenConfig::default());
        let dc = DiffConfig { trials: 16, depth: 8, seed, ..DiffConfig::default() };
        let a = diff(&c, &TypeConfig::default(), &dc, &sequential()).unwrap();
        let b = diff(&c, &TypeConfig::default(), &dc, &Exec::with_jobs(Some(4))).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bounded_pass_counts_every_trace(depth in 0usize..5, n in 1usize..4) {
        let h = range_harness("range_identity_model.agc");
        let values: Vec<i64> = (0..n as i64).map(|v| v * 7).collect();
        let out = check_bounded(&h, &input_domain(&values), &BoundedConfig { depth, ..BoundedConfig::default() }, &Exec::with_jobs(Some(4))).unwrap();
        match out {
            CheckOutcome::Pass(p) => prop_assert_eq!(p.explored, (n as u64).pow(depth as u32)),
            CheckOutcome::Counterexample(c) => prop_assert!(false, "{}", c.render()),
        }
    }
}
