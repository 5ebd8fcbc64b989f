//! Compiles assume-guarantee contracts over synchronous streams into
//! imperative step observers, executes them, and checks design models
//! against them.

pub mod contract;
pub mod emit;
pub mod exec;
pub mod gen;
pub mod harness;
pub mod interp;
pub mod ir;
pub mod observer;
pub mod oracle;
pub mod semantics;
pub mod trace;
pub mod types;
pub mod value;

use thiserror::Error;

use contract::Contract;
use ir::IrError;
use observer::{LowerError, ObserverProgram};
use types::TypeConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Ir(#[from] IrError),
    #[error(transparent)]
    Lower(#[from] LowerError),
}

/// Normalizes and lowers a checked contract to an observer program.
pub fn compile(c: &Contract, cfg: &TypeConfig) -> Result<ObserverProgram, CompileError> {
    Ok(observer::lower(&ir::normalize(c)?, cfg)?)
}

/// Normalizes and lowers a design-model contract to an executable model.
pub fn compile_model(c: &Contract, cfg: &TypeConfig) -> Result<ObserverProgram, CompileError> {
    Ok(observer::lower_model(&ir::normalize(c)?, cfg)?)
}
