//! Finite value domains for trace generation and enumeration.

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::observer::Param;
use crate::trace::{Trace, Valuation};
use crate::types::{FloatPrecision, IntType, LoweredType};
use crate::value::{Value, ValueError};

/// Largest magnitude of the default integer domain.
pub const DEFAULT_INT_RADIUS: i64 = 10;
/// Default reals are `k / 4` for `|k| <= DEFAULT_REAL_STEPS`.
pub const DEFAULT_REAL_STEPS: i64 = 20;
/// Per-field cap when enumerating record values from field defaults.
const RECORD_FIELD_VALUES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("domain `{0}` is not of the form NAME=v1,v2,.. or NAME=lo..hi")]
    Syntax(String),
    #[error("no input named `{0}`")]
    UnknownSignal(String),
    #[error("domain for `{0}` is empty")]
    Empty(String),
    #[error("domain for `{name}`: {source}")]
    Value { name: String, source: ValueError },
    #[error("ranges are only allowed for integer signals (`{0}`)")]
    RangeNotInt(String),
}

/// Default values of an integer type: zero first, then growing magnitude.
pub fn default_ints(ty: IntType) -> Vec<Value> {
    let mut out = Vec::new();
    if ty.signed {
        out.push(Value::int(0, ty));
        for k in 1..=DEFAULT_INT_RADIUS {
            out.push(Value::int(-k, ty));
            out.push(Value::int(k, ty));
        }
    } else {
        out.extend((0..=2 * DEFAULT_INT_RADIUS).map(|k| Value::int(k, ty)));
    }
    out
}

pub fn default_reals(prec: FloatPrecision) -> Vec<Value> {
    let mut out = vec![Value::float(0.0, prec)];
    for k in 1..=DEFAULT_REAL_STEPS {
        out.push(Value::float(-(k as f64) / 4.0, prec));
        out.push(Value::float(k as f64 / 4.0, prec));
    }
    out
}

/// Default domain of a type. Record domains are the product of truncated
/// field domains, first field most significant.
pub fn default_domain(ty: &LoweredType) -> Vec<Value> {
    match ty {
        LoweredType::Bool => vec![Value::Bool(false), Value::Bool(true)],
        LoweredType::Int(i) => default_ints(*i),
        LoweredType::Float(p) => default_reals(*p),
        LoweredType::Struct(s) => {
            let mut acc: Vec<Vec<(String, Value)>> = vec![vec![]];
            for (f, ft) in &s.fields {
                let mut vals = default_domain(ft);
                vals.truncate(RECORD_FIELD_VALUES);
                acc = acc
                    .iter()
                    .flat_map(|prefix| {
                        vals.iter().map(move |v| {
                            let mut p = prefix.clone();
                            p.push((f.clone(), v.clone()));
                            p
                        })
                    })
                    .collect();
            }
            acc.into_iter()
                .map(|fields| Value::Struct {
                    name: s.name.clone(),
                    fields,
                })
                .collect()
        }
    }
}

fn random_default(ty: &LoweredType, rng: &mut impl Rng) -> Value {
    match ty {
        LoweredType::Struct(s) => Value::Struct {
            name: s.name.clone(),
            fields: s
                .fields
                .iter()
                .map(|(f, ft)| (f.clone(), random_default(ft, rng)))
                .collect(),
        },
        scalar => {
            let d = default_domain(scalar);
            d[rng.gen_range(0..d.len())].clone()
        }
    }
}

/// Per-signal domain overrides; signals without one use [`default_domain`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Domains {
    overrides: BTreeMap<String, Vec<Value>>,
}

impl Domains {
    pub fn new() -> Domains {
        Domains::default()
    }

    pub fn with(mut self, name: impl Into<String>, values: Vec<Value>) -> Domains {
        self.overrides.insert(name.into(), values);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, values: Vec<Value>) {
        self.overrides.insert(name.into(), values);
    }

    pub fn get(&self, name: &str) -> Option<&[Value]> {
        self.overrides.get(name).map(Vec::as_slice)
    }

    /// Parses `NAME=v1,v2,..` or, for integers, the inclusive `NAME=lo..hi`.
    pub fn parse_assignment(&mut self, spec: &str, params: &[Param]) -> Result<(), DomainError> {
        let (name, rhs) = spec
            .split_once('=')
            .ok_or_else(|| DomainError::Syntax(spec.to_string()))?;
        let name = name.trim();
        let p = params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| DomainError::UnknownSignal(name.to_string()))?;
        let value_err = |source| DomainError::Value {
            name: name.to_string(),
            source,
        };
        let values = if let Some((lo, hi)) = rhs.split_once("..") {
            let LoweredType::Int(ty) = p.ty else {
                return Err(DomainError::RangeNotInt(name.to_string()));
            };
            let bound = |s: &str| {
                Value::parse_scalar(s.trim(), &p.ty)
                    .map_err(value_err)?
                    .as_i64()
                    .ok_or_else(|| DomainError::Syntax(spec.to_string()))
            };
            let (lo, hi) = (bound(lo)?, bound(hi)?);
            (lo..=hi).map(|v| Value::int(v, ty)).collect()
        } else {
            rhs.split(',')
                .map(|s| Value::parse_scalar(s.trim(), &p.ty).map_err(value_err))
                .collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() {
            return Err(DomainError::Empty(name.to_string()));
        }
        self.overrides.insert(name.to_string(), values);
        Ok(())
    }

    /// The domain of each parameter, in parameter order.
    pub fn resolve(&self, params: &[Param]) -> Result<Vec<Vec<Value>>, DomainError> {
        params
            .iter()
            .map(|p| {
                let d = match self.overrides.get(&p.name) {
                    Some(v) => {
                        if let Some(bad) = v.iter().find(|v| !v.has_type(&p.ty)) {
                            return Err(DomainError::Value {
                                name: p.name.clone(),
                                source: ValueError::Type {
                                    expected: p.ty.to_string(),
                                    found: bad.to_string(),
                                },
                            });
                        }
                        v.clone()
                    }
                    None => default_domain(&p.ty),
                };
                if d.is_empty() {
                    return Err(DomainError::Empty(p.name.clone()));
                }
                Ok(d)
            })
            .collect()
    }

    /// Every single-step valuation, first parameter most significant.
    pub fn valuations(&self, params: &[Param]) -> Result<Vec<Valuation>, DomainError> {
        let doms = self.resolve(params)?;
        let mut out = vec![Valuation::new()];
        for (p, d) in params.iter().zip(&doms) {
            out = out
                .iter()
                .flat_map(|prefix| {
                    d.iter().map(move |v| {
                        let mut s = prefix.clone();
                        s.insert(p.name.clone(), v.clone());
                        s
                    })
                })
                .collect();
        }
        Ok(out)
    }

    /// A uniformly drawn trace. Record signals without an override draw
    /// each field independently from its default domain.
    pub fn random_trace(
        &self,
        params: &[Param],
        len: usize,
        rng: &mut impl Rng,
    ) -> Result<Trace, DomainError> {
        let doms = self.resolve(params)?;
        let mut steps = Vec::with_capacity(len);
        for _ in 0..len {
            let mut s = Valuation::new();
            for (p, d) in params.iter().zip(&doms) {
                let v = if matches!(p.ty, LoweredType::Struct(_))
                    && !self.overrides.contains_key(&p.name)
                {
                    random_default(&p.ty, rng)
                } else {
                    d[rng.gen_range(0..d.len())].clone()
                };
                s.insert(p.name.clone(), v);
            }
            steps.push(s);
        }
        Ok(Trace::new(steps))
    }
}
