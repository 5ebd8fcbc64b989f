use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::osl::OSL_VERSION;
use crate::observer::ObserverProgram;

#[derive(Serialize, Deserialize)]
struct Envelope {
    osl_version: u32,
    #[serde(flatten)]
    program: ObserverProgram,
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("invalid observer JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("unsupported osl_version {0}")]
    Version(u32),
}

pub fn emit_json(p: &ObserverProgram) -> String {
    let env = Envelope {
        osl_version: OSL_VERSION,
        program: p.clone(),
    };
    let mut s = serde_json::to_string_pretty(&env).expect("observer programs serialize");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<ObserverProgram, JsonError> {
    let env: Envelope = serde_json::from_str(text)?;
    if env.osl_version != OSL_VERSION {
        return Err(JsonError::Version(env.osl_version));
    }
    Ok(env.program)
}
