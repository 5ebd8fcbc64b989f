//! Fixed-width target types and the per-compilation type configuration.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntWidth {
    #[serde(rename = "8")]
    W8,
    #[serde(rename = "16")]
    W16,
    #[serde(rename = "32")]
    W32,
}

impl IntWidth {
    pub fn bits(self) -> u32 {
        match self {
            IntWidth::W8 => 8,
            IntWidth::W16 => 16,
            IntWidth::W32 => 32,
        }
    }

    pub fn from_bits(bits: u32) -> Option<IntWidth> {
        match bits {
            8 => Some(IntWidth::W8),
            16 => Some(IntWidth::W16),
            32 => Some(IntWidth::W32),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FloatPrecision {
    Single,
    Double,
}

impl FloatPrecision {
    pub fn name(self) -> &'static str {
        match self {
            FloatPrecision::Single => "single",
            FloatPrecision::Double => "double",
        }
    }

    /// Rounds a double to this precision.
    pub fn round(self, v: f64) -> f64 {
        match self {
            FloatPrecision::Single => v as f32 as f64,
            FloatPrecision::Double => v,
        }
    }
}

/// A two's-complement integer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntType {
    pub width: IntWidth,
    pub signed: bool,
}

impl IntType {
    pub const INT32: IntType = IntType {
        width: IntWidth::W32,
        signed: true,
    };

    pub fn min(self) -> i64 {
        if self.signed {
            -(1i64 << (self.width.bits() - 1))
        } else {
            0
        }
    }

    pub fn max(self) -> i64 {
        if self.signed {
            (1i64 << (self.width.bits() - 1)) - 1
        } else {
            (1i64 << self.width.bits()) - 1
        }
    }

    pub fn contains(self, v: i64) -> bool {
        v >= self.min() && v <= self.max()
    }

    /// Reduces `v` modulo 2^width into this type's range.
    pub fn wrap(self, v: i64) -> i64 {
        let bits = self.width.bits();
        let modulus = 1i128 << bits;
        let mut r = (v as i128).rem_euclid(modulus);
        if self.signed && r >= modulus / 2 {
            r -= modulus;
        }
        r as i64
    }

    pub fn name(self) -> String {
        format!(
            "{}int{}",
            if self.signed { "" } else { "u" },
            self.width.bits()
        )
    }

    pub fn parse(name: &str) -> Option<IntType> {
        let (signed, rest) = match name.strip_prefix('u') {
            Some(r) => (false, r),
            None => (true, name),
        };
        let bits = rest.strip_prefix("int")?.parse().ok()?;
        Some(IntType {
            width: IntWidth::from_bits(bits)?,
            signed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StructType {
    pub name: String,
    pub fields: Vec<(String, LoweredType)>,
}

impl StructType {
    pub fn field(&self, name: &str) -> Option<&LoweredType> {
        self.fields.iter().find(|(f, _)| f == name).map(|(_, t)| t)
    }
}

/// Target-level type after integer and real lowering.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoweredType {
    Bool,
    Int(IntType),
    Float(FloatPrecision),
    Struct(StructType),
}

impl fmt::Display for LoweredType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoweredType::Bool => f.write_str("bool"),
            LoweredType::Int(t) => f.write_str(&t.name()),
            LoweredType::Float(p) => f.write_str(p.name()),
            LoweredType::Struct(s) => {
                write!(f, "struct {} {{", s.name)?;
                for (name, t) in &s.fields {
                    write!(f, " {name} : {t};")?;
                }
                f.write_str(" }")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("type `{0}` contains a real but no float precision is configured")]
    RealWithoutPrecision(String),
}

/// Data-type selection applied uniformly to one compilation: every `int`
/// lowers to the same fixed-width integer and every `real` to the same float.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TypeConfig {
    pub int_width: IntWidth,
    pub int_signed: bool,
    pub float_precision: Option<FloatPrecision>,
}

impl Default for TypeConfig {
    fn default() -> Self {
        TypeConfig {
            int_width: IntWidth::W32,
            int_signed: true,
            float_precision: Some(FloatPrecision::Double),
        }
    }
}

impl TypeConfig {
    pub fn new(bits: u32, signed: bool, precision: FloatPrecision) -> TypeConfig {
        TypeConfig {
            int_width: IntWidth::from_bits(bits).expect("width must be 8, 16 or 32"),
            int_signed: signed,
            float_precision: Some(precision),
        }
    }

    pub fn int_type(&self) -> IntType {
        IntType {
            width: self.int_width,
            signed: self.int_signed,
        }
    }

    pub fn lower(&self, t: &crate::contract::SemType) -> Result<LoweredType, ConfigError> {
        use crate::contract::SemType;
        Ok(match t {
            SemType::Bool => LoweredType::Bool,
            SemType::Int => LoweredType::Int(self.int_type()),
            SemType::Real => LoweredType::Float(
                self.float_precision
                    .ok_or_else(|| ConfigError::RealWithoutPrecision(t.to_string()))?,
            ),
            SemType::Record(r) => {
                let mut fields = Vec::with_capacity(r.fields.len());
                for (name, ft) in &r.fields {
                    let lowered = self
                        .lower(ft)
                        .map_err(|_| ConfigError::RealWithoutPrecision(r.name.clone()))?;
                    fields.push((name.clone(), lowered));
                }
                LoweredType::Struct(StructType {
                    name: r.name.clone(),
                    fields,
                })
            }
        })
    }
}
