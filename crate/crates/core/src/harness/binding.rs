//! Wiring an observer to a design model.
//!
//! Every component signal exists once. Observer parameters and model ports
//! refer to signals by id, so an input read by both the model and the
//! observer is the same signal rather than two copies of it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::observer::{ObserverProgram, Param, Role};
use crate::types::LoweredType;

use super::model::DesignModel;

pub type SignalId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    /// Supplied by the trace.
    TraceInput,
    /// Computed by the design model.
    ModelOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signal {
    pub id: SignalId,
    pub name: String,
    pub ty: LoweredType,
    pub source: SignalSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    /// The contract declares a signal the model lacks.
    Missing,
    /// The model declares a signal the contract lacks.
    Extra,
    /// Signal present on both sides with a different direction.
    Direction,
    /// Scalar type differs.
    Type,
    FieldMissing,
    FieldExtra,
    FieldType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub severity: Severity,
    pub kind: MismatchKind,
    /// Signal name, dotted for record fields.
    pub path: String,
    pub detail: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.path, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("interface mismatch:\n{}", .0.iter().map(|m| format!("  {m}")).collect::<Vec<_>>().join("\n"))]
pub struct InterfaceMismatch(pub Vec<Mismatch>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindingViolation {
    #[error("signal id {0} does not exist")]
    UnknownSignal(SignalId),
    #[error("signal `{0}` exists more than once")]
    DuplicateSignal(String),
    #[error("signal `{0}` is driven by {1} model outputs")]
    Drivers(String, usize),
    #[error("trace input `{0}` is also driven by the model")]
    DrivenInput(String),
    #[error("{side} `{port}` is bound {count} times")]
    PortBound {
        side: &'static str,
        port: String,
        count: usize,
    },
    #[error("{side} `{port}` is bound to signal `{signal}`")]
    WrongSignal {
        side: &'static str,
        port: String,
        signal: String,
    },
    #[error("{side} `{port}` is not bound")]
    Unbound { side: &'static str, port: String },
    #[error("model input `{0}` is fed by a model output")]
    Feedback(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnessBinding {
    pub signals: Vec<Signal>,
    /// Model input port to the signal it reads.
    pub model_inputs: Vec<(String, SignalId)>,
    /// Model output port to the signal it drives.
    pub model_outputs: Vec<(String, SignalId)>,
    /// Observer parameter to the signal it reads.
    pub observer_params: Vec<(String, SignalId)>,
    /// Model outputs with no contract counterpart; computed and ignored.
    pub ignored_outputs: Vec<String>,
}

fn type_diff(path: &str, contract: &LoweredType, model: &LoweredType, out: &mut Vec<Mismatch>) {
    match (contract, model) {
        (LoweredType::Struct(c), LoweredType::Struct(m)) => {
            for (f, ct) in &c.fields {
                let p = format!("{path}.{f}");
                match m.field(f) {
                    Some(mt) => type_diff(&p, ct, mt, out),
                    None => out.push(Mismatch {
                        severity: Severity::Error,
                        kind: MismatchKind::FieldMissing,
                        path: p,
                        detail: format!("contract field of type {ct} is missing from the model"),
                    }),
                }
            }
            for (f, mt) in &m.fields {
                if c.field(f).is_none() {
                    out.push(Mismatch {
                        severity: Severity::Error,
                        kind: MismatchKind::FieldExtra,
                        path: format!("{path}.{f}"),
                        detail: format!("model field of type {mt} is not in the contract"),
                    });
                }
            }
        }
        (c, m) if c == m => {}
        (c, m) => out.push(Mismatch {
            severity: Severity::Error,
            kind: if path.contains('.') {
                MismatchKind::FieldType
            } else {
                MismatchKind::Type
            },
            path: path.to_string(),
            detail: format!("contract type {} but model type {}", short(c), short(m)),
        }),
    }
}

/// Type equality up to record names.
fn same_shape(a: &LoweredType, b: &LoweredType) -> bool {
    let mut v = Vec::new();
    type_diff("", a, b, &mut v);
    v.is_empty()
}

fn short(t: &LoweredType) -> String {
    match t {
        LoweredType::Struct(s) => format!("struct {}", s.name),
        other => other.to_string(),
    }
}

/// A port list to check: its description, the params and their bound signals.
type Side<'a> = (&'static str, &'a [Param], &'a [(String, SignalId)]);

/// Compares interfaces and, if no error-level mismatch is found, builds a
/// binding with one signal per component input and output. Returns the
/// warnings alongside the binding.
pub fn bind(
    observer: &ObserverProgram,
    model: &dyn DesignModel,
) -> Result<(HarnessBinding, Vec<Mismatch>), InterfaceMismatch> {
    let mut issues = Vec::new();
    let m_in: BTreeMap<&str, &Param> = model
        .inputs()
        .iter()
        .map(|p| (p.name.as_str(), p))
        .collect();
    let m_out: BTreeMap<&str, &Param> = model
        .outputs()
        .iter()
        .map(|p| (p.name.as_str(), p))
        .collect();
    for p in &observer.params {
        let (same, other) = match p.role {
            Role::Input => (&m_in, &m_out),
            Role::Output => (&m_out, &m_in),
        };
        match (same.get(p.name.as_str()), other.get(p.name.as_str())) {
            (Some(mp), _) => type_diff(&p.name, &p.ty, &mp.ty, &mut issues),
            (None, Some(_)) => issues.push(Mismatch {
                severity: Severity::Error,
                kind: MismatchKind::Direction,
                path: p.name.clone(),
                detail: format!(
                    "contract {} is a model {}",
                    role_name(p.role),
                    role_name(flip(p.role))
                ),
            }),
            (None, None) => issues.push(Mismatch {
                severity: Severity::Error,
                kind: MismatchKind::Missing,
                path: p.name.clone(),
                detail: format!("contract {} is not a model port", role_name(p.role)),
            }),
        }
    }
    let declared: BTreeSet<&str> = observer.params.iter().map(|p| p.name.as_str()).collect();
    for p in model.inputs() {
        if !declared.contains(p.name.as_str()) {
            issues.push(Mismatch {
                severity: Severity::Error,
                kind: MismatchKind::Extra,
                path: p.name.clone(),
                detail: "model input has no source in the contract".into(),
            });
        }
    }
    let mut ignored = Vec::new();
    for p in model.outputs() {
        if !declared.contains(p.name.as_str()) {
            ignored.push(p.name.clone());
            issues.push(Mismatch {
                severity: Severity::Warning,
                kind: MismatchKind::Extra,
                path: p.name.clone(),
                detail: "model output is not in the contract and is ignored".into(),
            });
        }
    }
    if issues.iter().any(|m| m.severity == Severity::Error) {
        return Err(InterfaceMismatch(issues));
    }

    let mut signals = Vec::new();
    let mut observer_params = Vec::new();
    for p in &observer.params {
        let id = signals.len();
        signals.push(Signal {
            id,
            name: p.name.clone(),
            ty: p.ty.clone(),
            source: match p.role {
                Role::Input => SignalSource::TraceInput,
                Role::Output => SignalSource::ModelOutput,
            },
        });
        observer_params.push((p.name.clone(), id));
    }
    let id_of = |n: &str| signals.iter().find(|s| s.name == n).map(|s| s.id);
    let model_inputs = model
        .inputs()
        .iter()
        .filter_map(|p| Some((p.name.clone(), id_of(&p.name)?)))
        .collect();
    let model_outputs = model
        .outputs()
        .iter()
        .filter_map(|p| Some((p.name.clone(), id_of(&p.name)?)))
        .collect();
    let b = HarnessBinding {
        signals,
        model_inputs,
        model_outputs,
        observer_params,
        ignored_outputs: ignored,
    };
    Ok((b, issues))
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Input => "input",
        Role::Output => "output",
    }
}

fn flip(r: Role) -> Role {
    match r {
        Role::Input => Role::Output,
        Role::Output => Role::Input,
    }
}

impl HarnessBinding {
    pub fn signal(&self, id: SignalId) -> Option<&Signal> {
        self.signals.get(id)
    }

    /// Signals supplied by the trace, in binding order.
    pub fn trace_inputs(&self) -> impl Iterator<Item = &Signal> {
        self.signals
            .iter()
            .filter(|s| s.source == SignalSource::TraceInput)
    }

    /// Checks the wiring invariants against the ports of `observer` and
    /// `model`.
    pub fn validate(
        &self,
        observer: &ObserverProgram,
        model: &dyn DesignModel,
    ) -> Result<(), Vec<BindingViolation>> {
        let mut errs = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, s) in self.signals.iter().enumerate() {
            if s.id != i {
                errs.push(BindingViolation::UnknownSignal(s.id));
            }
            if !seen.insert(s.name.as_str()) {
                errs.push(BindingViolation::DuplicateSignal(s.name.clone()));
            }
        }
        let all_refs = self
            .model_inputs
            .iter()
            .chain(&self.model_outputs)
            .chain(&self.observer_params);
        for (_, id) in all_refs {
            if *id >= self.signals.len() {
                errs.push(BindingViolation::UnknownSignal(*id));
            }
        }
        if !errs.is_empty() {
            return Err(errs);
        }
        for s in &self.signals {
            let drivers = self
                .model_outputs
                .iter()
                .filter(|(_, id)| *id == s.id)
                .count();
            match s.source {
                SignalSource::TraceInput if drivers > 0 => {
                    errs.push(BindingViolation::DrivenInput(s.name.clone()))
                }
                SignalSource::ModelOutput if drivers != 1 => {
                    errs.push(BindingViolation::Drivers(s.name.clone(), drivers))
                }
                _ => {}
            }
        }
        let sides: [Side; 3] = [
            (
                "observer parameter",
                &observer.params,
                &self.observer_params,
            ),
            ("model input", model.inputs(), &self.model_inputs),
            ("model output", model.outputs(), &self.model_outputs),
        ];
        for (side, ports, bound) in sides {
            for p in ports {
                if side == "model output" && self.ignored_outputs.contains(&p.name) {
                    continue;
                }
                let hits: Vec<SignalId> = bound
                    .iter()
                    .filter(|(n, _)| *n == p.name)
                    .map(|(_, id)| *id)
                    .collect();
                match hits.as_slice() {
                    [] => errs.push(BindingViolation::Unbound {
                        side,
                        port: p.name.clone(),
                    }),
                    [id] => {
                        let s = &self.signals[*id];
                        if s.name != p.name || !same_shape(&s.ty, &p.ty) {
                            errs.push(BindingViolation::WrongSignal {
                                side,
                                port: p.name.clone(),
                                signal: s.name.clone(),
                            });
                        }
                        if side == "model input" && s.source == SignalSource::ModelOutput {
                            errs.push(BindingViolation::Feedback(p.name.clone()));
                        }
                    }
                    many => errs.push(BindingViolation::PortBound {
                        side,
                        port: p.name.clone(),
                        count: many.len(),
                    }),
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}
