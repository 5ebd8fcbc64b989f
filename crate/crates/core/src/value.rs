//! Fixed-width runtime values shared by the observer program (as constants),
//! the step interpreter and trace files.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{FloatPrecision, IntType, LoweredType, StructType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    Bool(bool),
    Int {
        v: i64,
        ty: IntType,
    },
    Float {
        v: f64,
        prec: FloatPrecision,
    },
    Struct {
        name: String,
        fields: Vec<(String, Value)>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValueError {
    #[error("expected {expected}, found `{found}`")]
    Type { expected: String, found: String },
    #[error("{value} is out of range for {ty}")]
    Range { value: String, ty: String },
    #[error("missing field `{0}`")]
    MissingField(String),
}

impl Value {
    /// Default initial value of a persistent of type `t`.
    pub fn default_for(t: &LoweredType) -> Value {
        match t {
            LoweredType::Bool => Value::Bool(true),
            LoweredType::Int(ty) => Value::Int { v: 0, ty: *ty },
            LoweredType::Float(prec) => Value::Float {
                v: 0.0,
                prec: *prec,
            },
            LoweredType::Struct(s) => Value::Struct {
                name: s.name.clone(),
                fields: s
                    .fields
                    .iter()
                    .map(|(n, ft)| (n.clone(), Value::default_for(ft)))
                    .collect(),
            },
        }
    }

    pub fn int(v: i64, ty: IntType) -> Value {
        Value::Int { v, ty }
    }

    pub fn float(v: f64, prec: FloatPrecision) -> Value {
        Value::Float {
            v: prec.round(v),
            prec,
        }
    }

    pub fn lowered_type(&self) -> LoweredType {
        match self {
            Value::Bool(_) => LoweredType::Bool,
            Value::Int { ty, .. } => LoweredType::Int(*ty),
            Value::Float { prec, .. } => LoweredType::Float(*prec),
            Value::Struct { name, fields } => LoweredType::Struct(StructType {
                name: name.clone(),
                fields: fields
                    .iter()
                    .map(|(n, v)| (n.clone(), v.lowered_type()))
                    .collect(),
            }),
        }
    }

    pub fn has_type(&self, t: &LoweredType) -> bool {
        match (self, t) {
            (Value::Bool(_), LoweredType::Bool) => true,
            (Value::Int { v, ty }, LoweredType::Int(t)) => ty == t && t.contains(*v),
            (Value::Float { prec, .. }, LoweredType::Float(p)) => prec == p,
            (Value::Struct { fields, .. }, LoweredType::Struct(s)) => {
                fields.len() == s.fields.len()
                    && fields
                        .iter()
                        .zip(&s.fields)
                        .all(|((n, v), (m, ft))| n == m && v.has_type(ft))
            }
            _ => false,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int { v, .. } => Some(*v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Float { v, .. } => Some(*v),
            _ => None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Struct { fields, .. } => fields.iter().find(|(n, _)| n == name).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Structural equality with IEEE comparison on floats.
    pub fn is_equal(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int { v: a, .. }, Value::Int { v: b, .. }) => a == b,
            (Value::Float { v: a, .. }, Value::Float { v: b, .. }) => a == b,
            (Value::Struct { fields: a, .. }, Value::Struct { fields: b, .. }) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|((n, x), (m, y))| n == m && x.is_equal(y))
            }
            _ => false,
        }
    }

    /// Plain JSON form used in trace files: no type tags.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int { v, .. } => serde_json::Value::from(*v),
            Value::Float { v, .. } => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or_else(|| serde_json::Value::String(format_float(*v))),
            Value::Struct { fields, .. } => serde_json::Value::Object(
                fields
                    .iter()
                    .map(|(n, v)| (n.clone(), v.to_json()))
                    .collect(),
            ),
        }
    }

    pub fn from_json(j: &serde_json::Value, t: &LoweredType) -> Result<Value, ValueError> {
        let mismatch = || ValueError::Type {
            expected: t.to_string(),
            found: j.to_string(),
        };
        match t {
            LoweredType::Bool => j.as_bool().map(Value::Bool).ok_or_else(mismatch),
            LoweredType::Int(ty) => {
                let v = j.as_i64().ok_or_else(mismatch)?;
                check_int(v, *ty)
            }
            LoweredType::Float(prec) => {
                let v = match j {
                    serde_json::Value::String(s) => parse_float(s).ok_or_else(mismatch)?,
                    _ => j.as_f64().ok_or_else(mismatch)?,
                };
                Ok(Value::float(v, *prec))
            }
            LoweredType::Struct(s) => {
                let obj = j.as_object().ok_or_else(mismatch)?;
                let mut fields = Vec::with_capacity(s.fields.len());
                for (n, ft) in &s.fields {
                    let fj = obj
                        .get(n)
                        .ok_or_else(|| ValueError::MissingField(n.clone()))?;
                    fields.push((n.clone(), Value::from_json(fj, ft)?));
                }
                Ok(Value::Struct {
                    name: s.name.clone(),
                    fields,
                })
            }
        }
    }

    /// Parses a scalar written as in a CSV cell.
    pub fn parse_scalar(text: &str, t: &LoweredType) -> Result<Value, ValueError> {
        let text = text.trim();
        let mismatch = || ValueError::Type {
            expected: t.to_string(),
            found: text.to_string(),
        };
        match t {
            LoweredType::Bool => match text {
                "true" | "1" => Ok(Value::Bool(true)),
                "false" | "0" => Ok(Value::Bool(false)),
                _ => Err(mismatch()),
            },
            LoweredType::Int(ty) => check_int(text.parse().map_err(|_| mismatch())?, *ty),
            LoweredType::Float(prec) => {
                Ok(Value::float(parse_float(text).ok_or_else(mismatch)?, *prec))
            }
            LoweredType::Struct(_) => Err(mismatch()),
        }
    }

    /// Scalar leaves in field order with dotted paths.
    pub fn flatten(&self, prefix: &str, out: &mut Vec<(String, Value)>) {
        match self {
            Value::Struct { fields, .. } => {
                for (n, v) in fields {
                    v.flatten(&format!("{prefix}.{n}"), out);
                }
            }
            v => out.push((prefix.to_string(), v.clone())),
        }
    }
}

fn check_int(v: i64, ty: IntType) -> Result<Value, ValueError> {
    if ty.contains(v) {
        Ok(Value::Int { v, ty })
    } else {
        Err(ValueError::Range {
            value: v.to_string(),
            ty: ty.name(),
        })
    }
}

/// Shortest round-trip decimal, always with a fractional part or exponent.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub fn parse_float(s: &str) -> Option<f64> {
    match s {
        "nan" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int { v, .. } => write!(f, "{v}"),
            Value::Float { v, .. } => f.write_str(&format_float(*v)),
            Value::Struct { fields, .. } => {
                f.write_str("{")?;
                for (i, (n, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{n} = {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}
