//! End-to-end behaviour of the `c2o` binary: exit codes, emitted files
//! and reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "fixtures", name]
        .iter()
        .collect();
    p.display().to_string()
}

fn c2o(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_c2o"))
        .args(args)
        .env("C2O_COLOR", "never")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn without_timestamp(json: &str) -> Value {
    let mut v: Value = serde_json::from_str(json).unwrap();
    v["manifest"].as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn compiles_constructs_to_matlab() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let o = c2o(&[
        "compile",
        &fixture("constructs.agc"),
        "--emit",
        "matlab",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = fs::read_to_string(out.join("Constructs.m")).unwrap();
    assert!(m.contains("sldv.assume(Input < 20)"), "{m}");
    assert!(m.contains("sldv.prove("), "{m}");
    let golden = fs::read_to_string(fixture("golden/constructs.m")).unwrap();
    assert_eq!(m, golden);
}

#[test]
fn stdout_when_no_out_directory() {
    let o = c2o(&["compile", &fixture("range.agc")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("observer Range"), "{}", stdout(&o));
}

#[test]
fn int_width_and_signedness_reach_the_casts() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "c.agc",
        "component C {\n  input X : int;\n  guarantee \"g\" : true -> X >= pre(X);\n}\n",
    );
    let o = c2o(&[
        "compile",
        &f,
        "--int-width",
        "16",
        "--unsigned",
        "--emit",
        "matlab",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = stdout(&o);
    assert!(m.contains("pre_X = uint16(0);"), "{m}");
    assert!(!m.contains("int32"), "{m}");
}

#[test]
fn several_targets_and_ir_dump() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let args = [
        "compile",
        &fixture("constructs.agc"),
        "--emit",
        "osl",
        "--emit",
        "json",
        "--dump-ir",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&c2o(&args)), 0);
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "Constructs.ir.json",
            "Constructs.osl",
            "Constructs.osl.json"
        ]
    );
    let first = fs::read_to_string(out.join("Constructs.ir.json")).unwrap();
    serde_json::from_str::<Value>(&first).unwrap();
    assert_eq!(code(&c2o(&args)), 0);
    assert_eq!(
        fs::read_to_string(out.join("Constructs.ir.json")).unwrap(),
        first
    );
}

#[test]
fn missing_file_is_an_io_error_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never");
    let o = c2o(&[
        "compile",
        "does/not/exist.agc",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("does/not/exist.agc"));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(
        code(&c2o(&[
            "compile",
            &fixture("range.agc"),
            "--int-width",
            "12"
        ])),
        1
    );
    assert_eq!(code(&c2o(&["frobnicate"])), 1);
    assert_eq!(code(&c2o(&["--version"])), 0);
}

#[test]
fn type_errors_exit_2_with_a_location() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "bad.agc",
        "component Bad {\n  input A : int;\n  guarantee \"g\" : A and true;\n}\n",
    );
    let o = c2o(&["compile", &f]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.agc:3:"), "{}", stderr(&o));
}

#[test]
fn unguarded_pre_exits_3() {
    let dir = TempDir::new().unwrap();
    let f = write(
        dir.path(),
        "pre.agc",
        "component P {\n  input A : bool;\n  guarantee \"g\" : pre(A);\n}\n",
    );
    let out = dir.path().join("o");
    let o = c2o(&["compile", &f, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn verify_passes_correct_model_and_lists_every_guarantee() {
    let o = c2o(&[
        "verify",
        &fixture("bscu_com.agc"),
        "--model",
        "bscu-com",
        "--depth",
        "4",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.starts_with("PASS: 256 traces explored, depth 4"), "{s}");
    for label in [
        "starts in MANUAL",
        "exactly one mode",
        "fault forces MANUAL",
        "press toggles",
        "mode holds without press",
    ] {
        assert!(s.contains(&format!("pass  \"{label}\"")), "{label}\n{s}");
    }
}

#[test]
fn verify_reports_and_replays_a_counterexample() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v");
    let contract = fixture("bscu_com.agc");
    let o = c2o(&[
        "verify",
        &contract,
        "--model",
        "bscu-com-defect",
        "--depth",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 10, "{}", stderr(&o));
    assert!(stdout(&o).contains("guarantee \"starts in MANUAL\" violated at step 0"));

    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let input = &report["manifest"]["inputs"][0];
    assert_eq!(input["path"], contract.as_str());
    assert_eq!(input["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(report["mode"], "bounded");
    assert_eq!(report["depth"], 3);

    let csv = out.join("counterexample.csv");
    assert_eq!(
        fs::read_to_string(&csv).unwrap(),
        "Button,Fault\ntrue,false\n"
    );
    let r = c2o(&[
        "replay",
        &contract,
        "--model",
        "bscu-com-defect",
        "--trace",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 10);
    assert!(stdout(&r).contains("violated at step 0"));
    let ok = c2o(&[
        "replay",
        &contract,
        "--model",
        "bscu-com",
        "--trace",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&ok), 0);
    assert_eq!(stdout(&ok), "no failure in 1 steps\n");
}

#[test]
fn compiled_model_files_are_accepted() {
    let o = c2o(&[
        "verify",
        &fixture("bscu_com.agc"),
        "--model",
        &fixture("bscu_com_defect.agc"),
        "--depth",
        "2",
    ]);
    assert_eq!(code(&o), 10);
    let p = c2o(&[
        "verify",
        &fixture("bscu_com.agc"),
        "--model",
        &fixture("bscu_com_model.agc"),
        "--depth",
        "3",
    ]);
    assert_eq!(code(&p), 0, "{}", stderr(&p));
}

#[test]
fn random_mode_is_reproducible() {
    let args = [
        "verify",
        &fixture("range.agc"),
        "--model",
        &fixture("range_offset_model.agc"),
        "--mode",
        "random",
        "--seed",
        "7",
        "--trials",
        "50",
        "--json",
    ];
    let a = c2o(&args);
    let b = c2o(&args);
    assert_eq!(code(&a), 10);
    assert_eq!(
        without_timestamp(&stdout(&a)),
        without_timestamp(&stdout(&b))
    );
    assert_eq!(without_timestamp(&stdout(&a))["manifest"]["seed"], 7);
}

#[test]
fn interface_drift_exits_5_with_field_detail() {
    let o = c2o(&[
        "verify",
        &fixture("sync_bus.agc"),
        "--model",
        &fixture("sync_bus_drift_model.agc"),
    ]);
    assert_eq!(code(&o), 5);
    let e = stderr(&o);
    assert!(
        e.contains("Sync.Mode: contract field of type int32 is missing from the model"),
        "{e}"
    );
    assert!(e.contains("Sync.ModeCmd"), "{e}");
    assert!(e.contains("Sync.Spare"), "{e}");
}

#[test]
fn unknown_model_is_a_usage_error() {
    let o = c2o(&["verify", &fixture("range.agc"), "--model", "no-such-model"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bscu-com"));
}

#[test]
fn diff_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d");
    let run = || {
        let o = c2o(&[
            "diff",
            &fixture("constructs.agc"),
            &fixture("ops.agc"),
            "--trials",
            "30",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read_to_string(out.join("diff.json")).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(without_timestamp(&a), without_timestamp(&b));
    let v = without_timestamp(&a);
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    assert_eq!(v["manifest"]["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn diff_single_trial_of_depth_one() {
    let o = c2o(&[
        "diff",
        &fixture("range.agc"),
        "--trials",
        "1",
        "--depth",
        "1",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["reports"][0]["trials"], 1);
}

#[test]
fn diff_classifies_narrow_overflow_and_saves_traces() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d");
    let o = c2o(&[
        "diff",
        &fixture("wrap.agc"),
        "--int-width",
        "8",
        "--domain",
        "X=120..127",
        "--trials",
        "20",
        "--depth",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("TranslationBug       0"), "{s}");
    assert!(!s.contains("OverflowDivergence   0"), "{s}");
    let saved = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("Wrap-OverflowDivergence-trial")
        })
        .count();
    assert!(saved > 0);
}

#[test]
fn run_prints_per_step_verdicts() {
    let dir = TempDir::new().unwrap();
    let t = write(dir.path(), "t.csv", "Input,Output\n1,2\n5,30\n");
    let o = c2o(&["run", &fixture("range.agc"), "--trace", &t]);
    assert_eq!(code(&o), 10);
    assert_eq!(
        stdout(&o),
        "step 0: assume [\"B input range\"=true] prove [\"B output range\"=true]\n\
         step 1: assume [\"B input range\"=true] prove [\"B output range\"=false] VIOLATED B output range\n"
    );
    let good = write(dir.path(), "g.csv", "Input,Output\n1,2\n");
    assert_eq!(
        code(&c2o(&["run", &fixture("range.agc"), "--trace", &good])),
        0
    );
}

#[test]
fn run_accepts_emitted_programs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o");
    let o = c2o(&[
        "compile",
        &fixture("range.agc"),
        "--emit",
        "osl",
        "--emit",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let t = write(dir.path(), "t.csv", "Input,Output\n1,2\n5,30\n");
    let direct = stdout(&c2o(&["run", &fixture("range.agc"), "--trace", &t]));
    for ext in ["osl", "osl.json"] {
        let p = out.join(format!("Range.{ext}"));
        let r = c2o(&["run", p.to_str().unwrap(), "--trace", &t]);
        assert_eq!(code(&r), 10);
        assert_eq!(stdout(&r), direct);
    }
}

#[test]
fn malformed_trace_is_reported() {
    let dir = TempDir::new().unwrap();
    let t = write(dir.path(), "t.csv", "Input\n1\n");
    let o = c2o(&["run", &fixture("range.agc"), "--trace", &t]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("missing column `Output`"),
        "{}",
        stderr(&o)
    );
}
