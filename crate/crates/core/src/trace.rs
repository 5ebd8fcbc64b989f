//! Input traces and their CSV and JSON file formats.
//!
//! CSV: one column per scalar leaf, record fields as dotted paths, one row
//! per step. JSON: an array with one object per step.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::observer::Param;
use crate::types::LoweredType;
use crate::value::{format_float, Value, ValueError};

/// One step's signal values, by name.
pub type Valuation = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub steps: Vec<Valuation>,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("step {step}, `{signal}`: {source}")]
    Value {
        step: usize,
        signal: String,
        source: ValueError,
    },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("step {0} is not an object")]
    NotAnObject(usize),
    #[error("missing signal `{signal}` at step {step}")]
    MissingSignal { step: usize, signal: String },
    #[error("trace has no steps")]
    Empty,
}

fn leaf_paths(prefix: &str, t: &LoweredType, out: &mut Vec<(String, LoweredType)>) {
    match t {
        LoweredType::Struct(s) => {
            for (f, ft) in &s.fields {
                leaf_paths(&format!("{prefix}.{f}"), ft, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Float { v, .. } => format_float(*v),
        other => other.to_string(),
    }
}

impl Trace {
    pub fn new(steps: Vec<Valuation>) -> Trace {
        Trace { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks that every step binds every parameter with a value of its type.
    pub fn check(&self, params: &[Param]) -> Result<(), TraceError> {
        if self.steps.is_empty() {
            return Err(TraceError::Empty);
        }
        for (i, s) in self.steps.iter().enumerate() {
            for p in params {
                let v = s.get(&p.name).ok_or_else(|| TraceError::MissingSignal {
                    step: i,
                    signal: p.name.clone(),
                })?;
                if !v.has_type(&p.ty) {
                    return Err(TraceError::Value {
                        step: i,
                        signal: p.name.clone(),
                        source: ValueError::Type {
                            expected: p.ty.to_string(),
                            found: v.to_string(),
                        },
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self, params: &[Param]) -> String {
        let mut cols = Vec::new();
        for p in params {
            leaf_paths(&p.name, &p.ty, &mut cols);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(cols.iter().map(|(c, _)| c.as_str()))
            .expect("in-memory write");
        for step in &self.steps {
            let mut row = Vec::with_capacity(cols.len());
            for p in params {
                let mut leaves = Vec::new();
                if let Some(v) = step.get(&p.name) {
                    v.flatten(&p.name, &mut leaves);
                }
                row.extend(leaves.iter().map(|(_, v)| scalar_text(v)));
            }
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn from_csv(text: &str, params: &[Param]) -> Result<Trace, TraceError> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut expected = Vec::new();
        for p in params {
            leaf_paths(&p.name, &p.ty, &mut expected);
        }
        for h in &header {
            if !expected.iter().any(|(c, _)| c == h) {
                return Err(TraceError::UnknownColumn(h.clone()));
            }
        }
        let index: Vec<usize> = expected
            .iter()
            .map(|(c, _)| {
                header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| TraceError::MissingColumn(c.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut steps = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut cells = index.iter().zip(&expected);
            let mut step = Valuation::new();
            for p in params {
                let v = build(&p.ty, &mut cells, &rec).map_err(|source| TraceError::Value {
                    step: i,
                    signal: p.name.clone(),
                    source,
                })?;
                step.insert(p.name.clone(), v);
            }
            steps.push(step);
        }
        if steps.is_empty() {
            return Err(TraceError::Empty);
        }
        Ok(Trace { steps })
    }

    pub fn to_json(&self) -> String {
        let steps: Vec<serde_json::Value> = self
            .steps
            .iter()
            .map(|s| {
                serde_json::Value::Object(s.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&steps).expect("json");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, params: &[Param]) -> Result<Trace, TraceError> {
        let raw: Vec<serde_json::Value> = serde_json::from_str(text)?;
        let mut steps = Vec::with_capacity(raw.len());
        for (i, s) in raw.iter().enumerate() {
            let obj = s.as_object().ok_or(TraceError::NotAnObject(i))?;
            if let Some(k) = obj.keys().find(|k| !params.iter().any(|p| &p.name == *k)) {
                return Err(TraceError::UnknownColumn(k.clone()));
            }
            let mut step = Valuation::new();
            for p in params {
                let j = obj.get(&p.name).ok_or_else(|| TraceError::MissingSignal {
                    step: i,
                    signal: p.name.clone(),
                })?;
                let v = Value::from_json(j, &p.ty).map_err(|source| TraceError::Value {
                    step: i,
                    signal: p.name.clone(),
                    source,
                })?;
                step.insert(p.name.clone(), v);
            }
            steps.push(step);
        }
        if steps.is_empty() {
            return Err(TraceError::Empty);
        }
        Ok(Trace { steps })
    }
}

fn build<'a>(
    t: &LoweredType,
    cells: &mut impl Iterator<Item = (&'a usize, &'a (String, LoweredType))>,
    rec: &csv::StringRecord,
) -> Result<Value, ValueError> {
    match t {
        LoweredType::Struct(s) => {
            let mut fields = Vec::with_capacity(s.fields.len());
            for (f, ft) in &s.fields {
                fields.push((f.clone(), build(ft, cells, rec)?));
            }
            Ok(Value::Struct {
                name: s.name.clone(),
                fields,
            })
        }
        scalar => {
            let (col, _) = cells.next().expect("one cell per leaf");
            Value::parse_scalar(rec.get(*col).unwrap_or(""), scalar)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::Role;
    use crate::types::{FloatPrecision, IntType, StructType};

    fn params() -> Vec<Param> {
        vec![
            Param {
                name: "X".into(),
                ty: LoweredType::Int(IntType::INT32),
                role: Role::Input,
            },
            Param {
                name: "S".into(),
                ty: LoweredType::Struct(StructType {
                    name: "R".into(),
                    fields: vec![
                        ("on".into(), LoweredType::Bool),
                        ("v".into(), LoweredType::Float(FloatPrecision::Double)),
                    ],
                }),
                role: Role::Output,
            },
        ]
    }

    fn sample() -> Trace {
        let step = |x: i64, on: bool, v: f64| {
            let mut s = Valuation::new();
            s.insert("X".into(), Value::int(x, IntType::INT32));
            s.insert(
                "S".into(),
                Value::Struct {
                    name: "R".into(),
                    fields: vec![
                        ("on".into(), Value::Bool(on)),
                        ("v".into(), Value::float(v, FloatPrecision::Double)),
                    ],
                },
            );
            s
        };
        Trace::new(vec![step(1, true, 0.1), step(-7, false, -2.5e-9)])
    }

    #[test]
    fn csv_round_trip_with_dotted_headers() {
        let t = sample();
        let text = t.to_csv(&params());
        assert!(text.starts_with("X,S.on,S.v\n1,true,0.1\n"));
        assert_eq!(Trace::from_csv(&text, &params()).unwrap(), t);
        t.check(&params()).unwrap();
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        assert_eq!(Trace::from_json(&t.to_json(), &params()).unwrap(), t);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(matches!(
            Trace::from_csv("X,S.on\n1,true\n", &params()),
            Err(TraceError::MissingColumn(c)) if c == "S.v"
        ));
        assert!(matches!(
            Trace::from_csv("X,S.on,S.v,Y\n1,true,0,0\n", &params()),
            Err(TraceError::UnknownColumn(_))
        ));
        assert!(matches!(
            Trace::from_csv("X,S.on,S.v\n", &params()),
            Err(TraceError::Empty)
        ));
        assert!(Trace::from_csv("X,S.on,S.v\nfoo,true,0\n", &params()).is_err());
    }
}
