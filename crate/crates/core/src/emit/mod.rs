//! Textual targets for observer programs.

mod json;
mod matlab;
mod osl;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::observer::ObserverProgram;

pub use json::{emit_json, parse_json, JsonError};
pub use matlab::{emit_matlab, is_valid_identifier, sanitize_identifiers};
pub use osl::{emit_osl, parse_osl, OslError, OSL_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitTarget {
    Osl,
    Json,
    Matlab,
}

impl EmitTarget {
    pub const ALL: [EmitTarget; 3] = [EmitTarget::Osl, EmitTarget::Json, EmitTarget::Matlab];

    pub fn extension(self) -> &'static str {
        match self {
            EmitTarget::Osl => "osl",
            EmitTarget::Json => "osl.json",
            EmitTarget::Matlab => "m",
        }
    }
}

impl fmt::Display for EmitTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmitTarget::Osl => "osl",
            EmitTarget::Json => "json",
            EmitTarget::Matlab => "matlab",
        })
    }
}

impl FromStr for EmitTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "osl" => Ok(EmitTarget::Osl),
            "json" => Ok(EmitTarget::Json),
            "matlab" => Ok(EmitTarget::Matlab),
            other => Err(format!(
                "unknown target `{other}` (expected osl, json or matlab)"
            )),
        }
    }
}

pub fn emit(p: &ObserverProgram, target: EmitTarget) -> String {
    match target {
        EmitTarget::Osl => emit_osl(p),
        EmitTarget::Json => emit_json(p),
        EmitTarget::Matlab => emit_matlab(p),
    }
}
