//! Design models: deterministic step functions with the component's
//! interface.

use std::sync::Arc;

use thiserror::Error;

use crate::contract::{parse, FrontendError};
use crate::interp::Interpreter;
use crate::observer::{ObserverProgram, Param, Role};
use crate::trace::Valuation;
use crate::types::{LoweredType, TypeConfig};
use crate::value::Value;
use crate::CompileError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model step {step}: {message}")]
pub struct ModelError {
    pub step: usize,
    pub message: String,
    /// Division by zero inside the model.
    pub trap: bool,
}

#[derive(Debug, Error)]
pub enum ModelLoadError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("{0}")]
    Invalid(String),
    #[error("no built-in model named `{0}`")]
    UnknownBuiltin(String),
}

/// Mutable execution state of one model run.
pub trait ModelInstance: Send {
    /// Consumes one step of inputs and returns every declared output.
    fn step(&mut self, inputs: &Valuation) -> Result<Valuation, ModelError>;
    fn reset(&mut self);
    fn clone_box(&self) -> Box<dyn ModelInstance>;
}

impl Clone for Box<dyn ModelInstance> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

pub trait DesignModel: Send + Sync {
    fn name(&self) -> &str;
    fn inputs(&self) -> &[Param];
    fn outputs(&self) -> &[Param];
    fn instantiate(&self) -> Box<dyn ModelInstance>;
}

/// A model given as a contract whose equations define every output.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    program: ObserverProgram,
    proto: Interpreter,
}

impl CompiledModel {
    pub fn new(program: ObserverProgram) -> Result<CompiledModel, ModelLoadError> {
        if !program.is_model() {
            return Err(ModelLoadError::Invalid(format!(
                "`{}` defines no outputs",
                program.name
            )));
        }
        let proto = Interpreter::new(&program).map_err(|e| ModelLoadError::Invalid(e.0))?;
        Ok(CompiledModel { program, proto })
    }

    pub fn from_source(src: &str, cfg: &TypeConfig) -> Result<CompiledModel, ModelLoadError> {
        let c = parse(src)?;
        CompiledModel::new(crate::compile_model(&c, cfg)?)
    }

    pub fn program(&self) -> &ObserverProgram {
        &self.program
    }
}

#[derive(Clone)]
struct CompiledInstance(Interpreter);

impl ModelInstance for CompiledInstance {
    fn step(&mut self, inputs: &Valuation) -> Result<Valuation, ModelError> {
        let step = self.0.steps_taken();
        self.0.step(inputs).map_err(|e| ModelError {
            step,
            trap: e.is_trap(),
            message: e.to_string(),
        })?;
        Ok(self.0.results())
    }

    fn reset(&mut self) {
        self.0.reset();
    }

    fn clone_box(&self) -> Box<dyn ModelInstance> {
        Box::new(self.clone())
    }
}

impl DesignModel for CompiledModel {
    fn name(&self) -> &str {
        &self.program.name
    }

    fn inputs(&self) -> &[Param] {
        &self.program.params
    }

    fn outputs(&self) -> &[Param] {
        &self.program.results
    }

    fn instantiate(&self) -> Box<dyn ModelInstance> {
        Box::new(CompiledInstance(self.proto.clone()))
    }
}

/// Native two-mode button toggle (MANUAL and LO). The defect variant
/// starts in LO when the button is already pressed at the first step.
struct ComToggle {
    name: &'static str,
    defect: bool,
    inputs: Vec<Param>,
    outputs: Vec<Param>,
}

#[derive(Clone)]
struct ComState {
    defect: bool,
    step: usize,
    prev_button: bool,
    lo: bool,
}

fn bool_param(name: &str, role: Role) -> Param {
    Param {
        name: name.to_string(),
        ty: LoweredType::Bool,
        role,
    }
}

impl ComToggle {
    fn new(name: &'static str, defect: bool) -> ComToggle {
        ComToggle {
            name,
            defect,
            inputs: vec![
                bool_param("Button", Role::Input),
                bool_param("Fault", Role::Input),
            ],
            outputs: vec![
                bool_param("Manual", Role::Output),
                bool_param("Lo", Role::Output),
            ],
        }
    }
}

impl ModelInstance for ComState {
    fn step(&mut self, inputs: &Valuation) -> Result<Valuation, ModelError> {
        let get = |n: &str| {
            inputs
                .get(n)
                .and_then(Value::as_bool)
                .ok_or_else(|| ModelError {
                    step: self.step,
                    message: format!("missing Boolean input `{n}`"),
                    trap: false,
                })
        };
        let (button, fault) = (get("Button")?, get("Fault")?);
        let pressed = button && (self.step == 0 || !self.prev_button);
        self.lo = if self.step == 0 {
            self.defect && button
        } else if fault {
            false
        } else if pressed {
            !self.lo
        } else {
            self.lo
        };
        self.prev_button = button;
        self.step += 1;
        Ok(Valuation::from([
            ("Manual".to_string(), Value::Bool(!self.lo)),
            ("Lo".to_string(), Value::Bool(self.lo)),
        ]))
    }

    fn reset(&mut self) {
        *self = ComState {
            defect: self.defect,
            step: 0,
            prev_button: false,
            lo: false,
        };
    }

    fn clone_box(&self) -> Box<dyn ModelInstance> {
        Box::new(self.clone())
    }
}

impl DesignModel for ComToggle {
    fn name(&self) -> &str {
        self.name
    }

    fn inputs(&self) -> &[Param] {
        &self.inputs
    }

    fn outputs(&self) -> &[Param] {
        &self.outputs
    }

    fn instantiate(&self) -> Box<dyn ModelInstance> {
        Box::new(ComState {
            defect: self.defect,
            step: 0,
            prev_button: false,
            lo: false,
        })
    }
}

pub const BUILTIN_MODELS: [&str; 2] = ["bscu-com", "bscu-com-defect"];

pub fn builtin(name: &str) -> Result<Arc<dyn DesignModel>, ModelLoadError> {
    match name {
        "bscu-com" => Ok(Arc::new(ComToggle::new("bscu-com", false))),
        "bscu-com-defect" => Ok(Arc::new(ComToggle::new("bscu-com-defect", true))),
        other => Err(ModelLoadError::UnknownBuiltin(other.to_string())),
    }
}
