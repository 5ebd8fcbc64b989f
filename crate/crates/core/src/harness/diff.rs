//! Differential comparison of the exact reference evaluator against the
//! compiled observer on identical random traces.
//!
//! At the first step where the two disagree, the disagreement is classified
//! by its most likely cause, checked in this order: an integer left the
//! configured range, the observer trapped in a branch the reference never
//! evaluated, a real was not exactly representable, and otherwise a
//! translation bug.

use std::collections::BTreeMap;
use std::fmt::{self, Write};

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::contract::Contract;
use crate::exec::Exec;
use crate::interp::{InterpError, Interpreter};
use crate::observer::ObserverProgram;
use crate::oracle::{self, OValue, OracleError, OracleRun};
use crate::trace::Trace;
use crate::types::{FloatPrecision, TypeConfig};
use crate::value::Value;
use crate::{compile, CompileError};

use super::domain::{DomainError, Domains};
use super::random::trial_rng;

/// Relative tolerance on real-valued comparisons.
pub const REL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DivergenceClass {
    TranslationBug,
    OverflowDivergence,
    FloatSemanticGap,
    EagerTrapDivergence,
}

impl DivergenceClass {
    pub const ALL: [DivergenceClass; 4] = [
        DivergenceClass::TranslationBug,
        DivergenceClass::OverflowDivergence,
        DivergenceClass::FloatSemanticGap,
        DivergenceClass::EagerTrapDivergence,
    ];
}

impl fmt::Display for DivergenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffConfig {
    pub trials: u64,
    pub depth: usize,
    pub seed: u64,
    /// Domains for observer parameters, inputs and outputs alike.
    pub domains: Domains,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            trials: 1000,
            depth: 10,
            seed: 0,
            domains: Domains::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub trial: u64,
    pub step: usize,
    pub class: DivergenceClass,
    pub what: String,
    /// Largest relative error seen on a real value up to this step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
    #[serde(skip)]
    pub trace: Trace,
}

/// Result of comparing one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceComparison {
    pub steps_compared: usize,
    pub divergence: Option<Divergence>,
    /// Largest relative error on any real value, agreeing or not.
    pub float_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffReport {
    pub contract: String,
    pub config: TypeConfig,
    pub trials: u64,
    pub depth: usize,
    pub seed: u64,
    pub steps_compared: u64,
    pub counts: BTreeMap<DivergenceClass, u64>,
    /// First divergence of each class, by trial number.
    pub examples: Vec<Divergence>,
    pub max_float_gap: f64,
}

impl DiffReport {
    pub fn count(&self, class: DivergenceClass) -> u64 {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn translation_bugs(&self) -> u64 {
        self.count(DivergenceClass::TranslationBug)
    }

    pub fn divergences(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "diff {}: {} trials of depth {}, seed {}, {} steps compared",
            self.contract, self.trials, self.depth, self.seed, self.steps_compared
        );
        for c in DivergenceClass::ALL {
            let _ = writeln!(s, "  {:<20} {}", c.to_string(), self.count(c));
        }
        for d in &self.examples {
            let _ = writeln!(
                s,
                "first {}: trial {}, step {}: {}",
                d.class, d.trial, d.step, d.what
            );
            if let Some(m) = d.magnitude {
                let _ = writeln!(s, "  relative error {m:e}");
            }
        }
        s
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    if scale == 0.0 || !scale.is_finite() {
        return f64::INFINITY;
    }
    (a - b).abs() / scale
}

/// Whether an exact value matches an observer value after projecting the
/// exact value to the configured precision. Records the largest real gap.
fn agrees(o: &OValue, v: &Value, gap: &mut f64) -> bool {
    match (o, v) {
        (OValue::Bool(a), Value::Bool(b)) => a == b,
        (OValue::Int(a), Value::Int { v, .. }) => a.to_i64() == Some(*v),
        (OValue::Real(r), Value::Float { v, prec }) => {
            let exact = r.to_f64().unwrap_or(f64::NAN);
            let projected = match prec {
                FloatPrecision::Single => exact as f32 as f64,
                FloatPrecision::Double => exact,
            };
            let g = relative_gap(projected, *v);
            *gap = gap.max(g);
            g <= REL_TOLERANCE
        }
        (OValue::Record(a), Value::Struct { fields, .. }) => {
            a.len() == fields.len()
                && a.iter()
                    .zip(fields)
                    .all(|((n, x), (m, y))| n == m && agrees(x, y, gap))
        }
        _ => false,
    }
}

fn classify(run: &OracleRun, step: usize, observer_trap_only: bool) -> DivergenceClass {
    if run.int_excursion.is_some_and(|s| s <= step) {
        DivergenceClass::OverflowDivergence
    } else if observer_trap_only {
        DivergenceClass::EagerTrapDivergence
    } else if run.real_inexact.is_some_and(|s| s <= step) {
        DivergenceClass::FloatSemanticGap
    } else {
        DivergenceClass::TranslationBug
    }
}

fn show(o: &OValue) -> String {
    match o {
        OValue::Bool(b) => b.to_string(),
        OValue::Int(i) => i.to_string(),
        OValue::Real(r) => crate::contract::format_rational(r),
        OValue::Record(fs) => {
            let parts: Vec<String> = fs
                .iter()
                .map(|(n, v)| format!("{n} = {}", show(v)))
                .collect();
            format!("{{ {} }}", parts.join(", "))
        }
        OValue::Bottom => "nil".into(),
    }
}

fn verdict(b: Option<&bool>) -> String {
    b.map_or_else(|| "missing".to_string(), bool::to_string)
}

/// Runs the reference evaluator and the observer on one trace and reports
/// the first disagreement.
pub fn compare_trace(
    c: &Contract,
    p: &ObserverProgram,
    trace: &Trace,
    cfg: &TypeConfig,
) -> TraceComparison {
    let run = oracle::eval(c, trace, cfg);
    let mut it = match Interpreter::new(p) {
        Ok(it) => it,
        Err(e) => {
            return TraceComparison {
                steps_compared: 0,
                divergence: Some(Divergence {
                    trial: 0,
                    step: 0,
                    class: DivergenceClass::TranslationBug,
                    what: e.to_string(),
                    magnitude: None,
                    trace: trace.clone(),
                }),
                float_gap: 0.0,
            }
        }
    };
    let mut gap = 0.0f64;
    let mut found: Option<(usize, DivergenceClass, String)> = None;
    let mut compared = 0;
    for (t, inputs) in trace.steps.iter().enumerate() {
        let oracle_step = run.steps.get(t);
        let oracle_err = run.error.as_ref().filter(|e| e.step() == t);
        let observed = it.step(inputs);
        compared += 1;
        match (oracle_step, observed) {
            (Some(os), Ok(iv)) => {
                let mut what = None;
                for (l, b) in &os.assumes {
                    if iv.assumes.get(l) != Some(b) {
                        what = Some(format!(
                            "assume \"{l}\": reference {b}, observer {}",
                            verdict(iv.assumes.get(l))
                        ));
                        break;
                    }
                }
                if what.is_none() {
                    for (l, b) in &os.guarantees {
                        if iv.proves.get(l) != Some(b) {
                            what = Some(format!(
                                "guarantee \"{l}\": reference {b}, observer {}",
                                verdict(iv.proves.get(l))
                            ));
                            break;
                        }
                    }
                }
                if what.is_none() && os.vacuous != iv.vacuous {
                    what = Some(format!(
                        "vacuity: reference {}, observer {}",
                        os.vacuous, iv.vacuous
                    ));
                }
                if what.is_none() {
                    for (n, ov) in &os.eqs {
                        if ov.contains_bottom() {
                            continue;
                        }
                        if let Some(v) = it.lookup(n) {
                            if !agrees(ov, v, &mut gap) {
                                what = Some(format!("`{n}`: reference {}, observer {v}", show(ov)));
                                break;
                            }
                        }
                    }
                }
                if let Some(w) = what {
                    found = Some((t, classify(&run, t, false), w));
                    break;
                }
            }
            (None, Err(e)) => {
                let both_trap =
                    e.is_trap() && matches!(oracle_err, Some(OracleError::DivisionByZero { .. }));
                if !both_trap {
                    let w = format!(
                        "reference: {}; observer: {e}",
                        oracle_err.map_or_else(|| "no result".to_string(), |x| x.to_string())
                    );
                    found = Some((t, classify(&run, t, false), w));
                }
                break;
            }
            (Some(_), Err(e)) => {
                let trap = matches!(e, InterpError::DivisionByZero { .. });
                found = Some((t, classify(&run, t, trap), format!("observer only: {e}")));
                break;
            }
            (None, Ok(_)) => {
                let w = format!(
                    "reference only: {}",
                    oracle_err.map_or_else(|| "no result".to_string(), |x| x.to_string())
                );
                found = Some((t, classify(&run, t, false), w));
                break;
            }
        }
    }
    TraceComparison {
        steps_compared: compared,
        divergence: found.map(|(step, class, what)| Divergence {
            trial: 0,
            step,
            class,
            what,
            magnitude: (class == DivergenceClass::FloatSemanticGap).then_some(gap),
            trace: trace.clone(),
        }),
        float_gap: gap,
    }
}

/// Compiles `c` and compares reference and observer on `dc.trials` random
/// traces over every observer parameter.
pub fn diff(
    c: &Contract,
    cfg: &TypeConfig,
    dc: &DiffConfig,
    exec: &Exec,
) -> Result<DiffReport, DiffError> {
    let p = compile(c, cfg)?;
    dc.domains.resolve(&p.params)?;
    let trials = usize::try_from(dc.trials).unwrap_or(usize::MAX);
    let results = exec.map(trials, |i| {
        let mut rng = trial_rng(dc.seed, i as u64);
        let trace = dc
            .domains
            .random_trace(&p.params, dc.depth, &mut rng)
            .expect("domains resolved above");
        let mut r = compare_trace(c, &p, &trace, cfg);
        if let Some(d) = r.divergence.as_mut() {
            d.trial = i as u64;
        }
        r
    });
    let mut report = DiffReport {
        contract: c.name.clone(),
        config: *cfg,
        trials: dc.trials,
        depth: dc.depth,
        seed: dc.seed,
        steps_compared: 0,
        counts: BTreeMap::new(),
        examples: Vec::new(),
        max_float_gap: 0.0,
    };
    for r in results {
        report.steps_compared += r.steps_compared as u64;
        report.max_float_gap = report.max_float_gap.max(r.float_gap);
        if let Some(d) = r.divergence {
            *report.counts.entry(d.class).or_default() += 1;
            if !report.examples.iter().any(|e| e.class == d.class) {
                report.examples.push(d);
            }
        }
    }
    Ok(report)
}
