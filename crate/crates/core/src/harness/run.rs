//! Lock-step execution of a design model and its observer.

use std::fmt::{self, Write};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::interp::{InterpError, Interpreter, StepVerdict};
use crate::observer::{ObserverProgram, Param, Role};
use crate::trace::{Trace, Valuation};
use crate::value::{format_float, Value};

use super::binding::{
    bind, BindingViolation, HarnessBinding, InterfaceMismatch, Mismatch, SignalSource,
};
use super::model::{DesignModel, ModelError, ModelInstance};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Interface(#[from] InterfaceMismatch),
    #[error("invalid binding: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Binding(Vec<BindingViolation>),
    #[error("observer cannot be executed: {0}")]
    Load(String),
    #[error(transparent)]
    Domain(#[from] super::domain::DomainError),
    #[error("step {step}: {message}")]
    Internal { step: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureKind {
    /// A guarantee was false while no assumption had been violated.
    Violation { label: String },
    /// Division by zero in the observer or the model.
    Trap { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub step: usize,
    #[serde(flatten)]
    pub kind: FailureKind,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FailureKind::Violation { label } => {
                write!(f, "guarantee \"{label}\" violated at step {}", self.step)
            }
            FailureKind::Trap { message } => {
                write!(f, "runtime trap at step {}: {message}", self.step)
            }
        }
    }
}

/// Everything observable about one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// All bound signals, inputs and model outputs.
    pub signals: Valuation,
    /// Observer locals in program order, hoisted ones included.
    pub locals: Vec<(String, Value)>,
    pub verdict: StepVerdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub records: Vec<StepRecord>,
    pub failure: Option<Failure>,
}

/// An observer wired to a design model.
pub struct Harness {
    observer: ObserverProgram,
    model: Arc<dyn DesignModel>,
    binding: HarnessBinding,
    warnings: Vec<Mismatch>,
    proto: Interpreter,
    prove_order: Vec<String>,
}

impl fmt::Debug for Harness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Harness")
            .field("observer", &self.observer.name)
            .field("model", &self.model.name())
            .finish()
    }
}

impl Harness {
    pub fn new(
        observer: ObserverProgram,
        model: Arc<dyn DesignModel>,
    ) -> Result<Harness, HarnessError> {
        let (binding, warnings) = bind(&observer, model.as_ref())?;
        Harness::with_binding(observer, model, binding, warnings)
    }

    /// Uses an explicit binding, which must satisfy
    /// [`HarnessBinding::validate`].
    pub fn with_binding(
        observer: ObserverProgram,
        model: Arc<dyn DesignModel>,
        binding: HarnessBinding,
        warnings: Vec<Mismatch>,
    ) -> Result<Harness, HarnessError> {
        binding
            .validate(&observer, model.as_ref())
            .map_err(HarnessError::Binding)?;
        let proto = Interpreter::new(&observer).map_err(|e| HarnessError::Load(e.0))?;
        let prove_order = observer
            .prove_labels()
            .into_iter()
            .map(str::to_string)
            .collect();
        Ok(Harness {
            observer,
            model,
            binding,
            warnings,
            proto,
            prove_order,
        })
    }

    pub fn observer(&self) -> &ObserverProgram {
        &self.observer
    }

    pub fn model(&self) -> &dyn DesignModel {
        self.model.as_ref()
    }

    pub fn binding(&self) -> &HarnessBinding {
        &self.binding
    }

    pub fn warnings(&self) -> &[Mismatch] {
        &self.warnings
    }

    /// Parameters a trace must bind: the trace-supplied signals.
    pub fn input_params(&self) -> Vec<Param> {
        self.binding
            .trace_inputs()
            .map(|s| Param {
                name: s.name.clone(),
                ty: s.ty.clone(),
                role: Role::Input,
            })
            .collect()
    }

    pub fn start(&self) -> RunState {
        RunState {
            model: self.model.instantiate(),
            observer: self.proto.clone(),
        }
    }

    pub(crate) fn failure_of(&self, step: usize, v: &StepVerdict) -> Option<Failure> {
        if v.vacuous {
            return None;
        }
        self.prove_order
            .iter()
            .find(|l| v.proves.get(*l) == Some(&false))
            .map(|l| Failure {
                step,
                kind: FailureKind::Violation { label: l.clone() },
            })
    }

    /// Runs `inputs` until the end or the first failure.
    pub fn execute(&self, inputs: &Trace) -> Result<Execution, HarnessError> {
        let mut st = self.start();
        let mut records = Vec::with_capacity(inputs.len());
        for (t, s) in inputs.steps.iter().enumerate() {
            match st.step(self, s)? {
                Outcome::Ok(rec) => {
                    let failure = self.failure_of(t, &rec.verdict);
                    records.push(rec);
                    if failure.is_some() {
                        return Ok(Execution { records, failure });
                    }
                }
                Outcome::Trap(message) => {
                    return Ok(Execution {
                        records,
                        failure: Some(Failure {
                            step: t,
                            kind: FailureKind::Trap { message },
                        }),
                    })
                }
            }
        }
        Ok(Execution {
            records,
            failure: None,
        })
    }

    /// Runs the inputs of a counterexample and builds its report.
    pub fn counterexample(&self, inputs: Trace) -> Result<Option<Counterexample>, HarnessError> {
        let ex = self.execute(&inputs)?;
        let Some(failure) = ex.failure.clone() else {
            return Ok(None);
        };
        let mut inputs = inputs;
        inputs.steps.truncate(failure.step + 1);
        let table = SignalTable::build(&self.observer, &ex);
        Ok(Some(Counterexample {
            failure,
            inputs,
            table,
            trial: None,
            shrunk_from: None,
        }))
    }

    /// Re-executes a counterexample; succeeds when it fails the same way at
    /// the same step.
    pub fn replay(&self, cex: &Counterexample) -> Result<(), ReplayError> {
        let ex = self
            .execute(&cex.inputs)
            .map_err(|e| ReplayError::Harness(e.to_string()))?;
        match ex.failure {
            Some(f) if f == cex.failure => Ok(()),
            other => Err(ReplayError::Different {
                expected: cex.failure.to_string(),
                found: other.map_or_else(|| "no failure".to_string(), |f| f.to_string()),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("{0}")]
    Harness(String),
    #[error("replay diverged: expected {expected}, found {found}")]
    Different { expected: String, found: String },
}

pub(crate) enum Outcome {
    Ok(StepRecord),
    Trap(String),
}

/// Model and observer state between steps. Cloning forks the run.
#[derive(Clone)]
pub struct RunState {
    model: Box<dyn ModelInstance>,
    observer: Interpreter,
}

impl RunState {
    pub(crate) fn step(
        &mut self,
        h: &Harness,
        inputs: &Valuation,
    ) -> Result<Outcome, HarnessError> {
        let b = &h.binding;
        let step = self.observer.steps_taken();
        let mut signals = Valuation::new();
        for s in b.trace_inputs() {
            let v = inputs.get(&s.name).ok_or_else(|| HarnessError::Internal {
                step,
                message: format!("trace has no value for `{}`", s.name),
            })?;
            signals.insert(s.name.clone(), v.clone());
        }
        let model_in: Valuation = b
            .model_inputs
            .iter()
            .map(|(port, id)| (port.clone(), signals[&b.signals[*id].name].clone()))
            .collect();
        let out = match self.model.step(&model_in) {
            Ok(o) => o,
            Err(ModelError {
                trap: true,
                message,
                ..
            }) => return Ok(Outcome::Trap(message)),
            Err(e) => {
                return Err(HarnessError::Internal {
                    step,
                    message: e.to_string(),
                })
            }
        };
        for (port, id) in &b.model_outputs {
            let s = &b.signals[*id];
            debug_assert_eq!(s.source, SignalSource::ModelOutput);
            let v = out.get(port).ok_or_else(|| HarnessError::Internal {
                step,
                message: format!("model produced no value for `{port}`"),
            })?;
            signals.insert(s.name.clone(), v.clone());
        }
        let obs_in: Valuation = b
            .observer_params
            .iter()
            .map(|(p, id)| (p.clone(), signals[&b.signals[*id].name].clone()))
            .collect();
        match self.observer.step(&obs_in) {
            Ok(verdict) => Ok(Outcome::Ok(StepRecord {
                signals,
                locals: self
                    .observer
                    .locals()
                    .into_iter()
                    .map(|(n, v)| (n.to_string(), v.clone()))
                    .collect(),
                verdict,
            })),
            Err(e @ InterpError::DivisionByZero { .. }) => Ok(Outcome::Trap(e.to_string())),
            Err(e) => Err(HarnessError::Internal {
                step,
                message: e.to_string(),
            }),
        }
    }
}

/// Per-step values of every signal and observer local, as text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignalTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Float { v, .. } => format_float(*v),
        other => other.to_string(),
    }
}

impl SignalTable {
    fn build(p: &ObserverProgram, ex: &Execution) -> SignalTable {
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for (i, r) in ex.records.iter().enumerate() {
            let mut leaves = Vec::new();
            for param in &p.params {
                if let Some(v) = r.signals.get(&param.name) {
                    v.flatten(&param.name, &mut leaves);
                }
            }
            for (n, v) in &r.locals {
                v.flatten(n, &mut leaves);
            }
            if i == 0 {
                columns.push("step".to_string());
                columns.extend(leaves.iter().map(|(n, _)| n.clone()));
                columns.push("vacuous".to_string());
            }
            let mut row = vec![i.to_string()];
            row.extend(leaves.iter().map(|(_, v)| cell(v)));
            row.push(r.verdict.vacuous.to_string());
            rows.push(row);
        }
        SignalTable { columns, rows }
    }

    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&self.columns, &mut out);
        for r in &self.rows {
            line(r, &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    #[serde(flatten)]
    pub failure: Failure,
    /// Trace inputs up to and including the failing step.
    #[serde(skip)]
    pub inputs: Trace,
    pub table: SignalTable,
    /// Random trial that produced the trace, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
    /// Length of the trace before shrinking.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shrunk_from: Option<usize>,
}

impl Counterexample {
    pub fn render(&self) -> String {
        let mut s = format!("{}\n", self.failure);
        if let (Some(t), Some(n)) = (self.trial, self.shrunk_from) {
            let _ = writeln!(
                s,
                "found by trial {t}, shrunk from {n} to {} steps",
                self.inputs.len()
            );
        }
        s.push_str(&self.table.render());
        s
    }
}
