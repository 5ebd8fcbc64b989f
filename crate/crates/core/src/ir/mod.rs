//! Dataflow normal form: node calls inlined, nested temporal operators
//! decoupled into named locals, and locals sorted so that a single pass in
//! order never reads a value that has not been computed in the same step.

mod decouple;
mod inline;
mod order;

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::contract::{
    check_temporal_wellformedness, BinOp, Contract, EqDecl, Expr, ExprKind, IoDecl, Property,
    RecordDecl, RecordType, SemType, Span, UnOp, WellFormednessError,
};

pub use decouple::decouple_temporal;
pub use inline::inline_nodes;
pub use order::order_dataflow;

/// Prefix of compiler-generated locals.
pub const FRESH_PREFIX: &str = "__t";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("recursive node cycle: {}", .0.join(" -> "))]
    NodeCycle(Vec<String>),
    #[error("contract is not temporally well-formed: {}", display_all(.0))]
    NotWellFormed(Vec<WellFormednessError>),
    #[error("combinational cycle through {}", .0.join(", "))]
    CombinationalCycle(Vec<String>),
}

fn display_all(errs: &[WellFormednessError]) -> String {
    errs.iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

fn ser_bigint<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_rational<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_records<S: Serializer>(v: &[Arc<RecordType>], s: S) -> Result<S::Ok, S::Error> {
    let types: Vec<SemType> = v.iter().cloned().map(SemType::Record).collect();
    types.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum IrKind {
    Bool {
        value: bool,
    },
    Int {
        #[serde(serialize_with = "ser_bigint")]
        value: BigInt,
    },
    Real {
        #[serde(serialize_with = "ser_rational")]
        value: BigRational,
    },
    Var {
        name: String,
    },
    /// Value of a pre-table entry's operand at the previous step.
    PreRef {
        id: usize,
    },
    Select {
        operand: Box<IrExpr>,
        field: String,
    },
    Unary {
        operator: UnOp,
        operand: Box<IrExpr>,
    },
    Binary {
        operator: BinOp,
        lhs: Box<IrExpr>,
        rhs: Box<IrExpr>,
    },
    Arrow {
        init: Box<IrExpr>,
        next: Box<IrExpr>,
    },
    If {
        cond: Box<IrExpr>,
        then: Box<IrExpr>,
        #[serde(rename = "else")]
        otherwise: Box<IrExpr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IrExpr {
    #[serde(flatten)]
    pub kind: IrKind,
    #[serde(rename = "type")]
    pub ty: SemType,
}

impl IrExpr {
    pub fn children(&self) -> Vec<&IrExpr> {
        match &self.kind {
            IrKind::Bool { .. }
            | IrKind::Int { .. }
            | IrKind::Real { .. }
            | IrKind::Var { .. }
            | IrKind::PreRef { .. } => vec![],
            IrKind::Select { operand, .. } | IrKind::Unary { operand, .. } => vec![operand],
            IrKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            IrKind::Arrow { init, next } => vec![init, next],
            IrKind::If {
                cond,
                then,
                otherwise,
            } => vec![cond, then, otherwise],
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a IrExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Variables read in the current step. Pre-table operands are not
    /// included: they belong to the previous step.
    pub fn same_step_vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let IrKind::Var { name } = &e.kind {
                out.push(name.as_str());
            }
        });
        out
    }

    pub fn to_expr(&self, pre_table: &[PreEntry]) -> Expr {
        let b = |e: &IrExpr| Box::new(e.to_expr(pre_table));
        let kind = match &self.kind {
            IrKind::Bool { value } => ExprKind::Bool(*value),
            IrKind::Int { value } => ExprKind::Int(value.clone()),
            IrKind::Real { value } => ExprKind::Real(value.clone()),
            IrKind::Var { name } => ExprKind::Ident(name.clone()),
            IrKind::PreRef { id } => {
                let entry = pre_table
                    .iter()
                    .find(|p| p.id == *id)
                    .expect("dangling pre ref");
                ExprKind::Pre(Box::new(entry.operand.to_expr(pre_table)))
            }
            IrKind::Select { operand, field } => ExprKind::Select(b(operand), field.clone()),
            IrKind::Unary { operator, operand } => ExprKind::Unary(*operator, b(operand)),
            IrKind::Binary { operator, lhs, rhs } => ExprKind::Binary(*operator, b(lhs), b(rhs)),
            IrKind::Arrow { init, next } => ExprKind::Arrow(b(init), b(next)),
            IrKind::If {
                cond,
                then,
                otherwise,
            } => ExprKind::If(b(cond), b(then), b(otherwise)),
        };
        Expr::typed(kind, self.ty.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Signal {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Local {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemType,
    pub expr: IrExpr,
}

impl Local {
    pub fn is_synthetic(&self) -> bool {
        self.name.starts_with(FRESH_PREFIX)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PropRef {
    pub label: String,
    pub local: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PreEntry {
    pub id: usize,
    pub operand: IrExpr,
}

/// A contract with node calls inlined and equations in dependency order.
/// Nested temporal operands are named by fresh equations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataflowIr {
    pub name: String,
    #[serde(serialize_with = "ser_records")]
    pub records: Vec<Arc<RecordType>>,
    pub inputs: Vec<Signal>,
    pub outputs: Vec<Signal>,
    pub locals: Vec<Local>,
    pub assumes: Vec<PropRef>,
    pub guarantees: Vec<PropRef>,
    pub pre_table: Vec<PreEntry>,
}

impl DataflowIr {
    pub fn local(&self, name: &str) -> Option<&Local> {
        self.locals.iter().find(|l| l.name == name)
    }

    pub fn pre_entry(&self, id: usize) -> Option<&PreEntry> {
        self.pre_table.iter().find(|p| p.id == id)
    }

    /// Deterministic JSON rendering used by `--dump-ir`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("IR serializes")
    }

    /// Renders the IR back as an (already checked) contract whose equations
    /// are the locals, with pre references spelled as `pre(operand)`.
    pub fn to_contract(&self) -> Contract {
        let io = |s: &Signal| IoDecl {
            name: s.name.clone(),
            ty: s.ty.clone(),
            span: Span::default(),
        };
        let prop = |p: &PropRef| Property {
            label: p.label.clone(),
            expr: Expr::ident(p.local.clone(), SemType::Bool),
            span: Span::default(),
        };
        Contract {
            name: self.name.clone(),
            records: self
                .records
                .iter()
                .map(|r| RecordDecl {
                    ty: r.clone(),
                    span: Span::default(),
                })
                .collect(),
            inputs: self.inputs.iter().map(io).collect(),
            outputs: self.outputs.iter().map(io).collect(),
            nodes: vec![],
            eqs: self
                .locals
                .iter()
                .map(|l| EqDecl {
                    name: l.name.clone(),
                    ty: l.ty.clone(),
                    expr: l.expr.to_expr(&self.pre_table),
                    span: Span::default(),
                })
                .collect(),
            assumes: self.assumes.iter().map(prop).collect(),
            guarantees: self.guarantees.iter().map(prop).collect(),
        }
    }
}

/// Full normalization: well-formedness check, inlining, decoupling and
/// dataflow ordering.
pub fn normalize(c: &Contract) -> Result<DataflowIr, IrError> {
    if let Err(errs) = check_temporal_wellformedness(c) {
        if let [WellFormednessError::NodeCycle(cycle)] = &errs[..] {
            return Err(IrError::NodeCycle(cycle.clone()));
        }
        return Err(IrError::NotWellFormed(errs));
    }
    let inlined = inline_nodes(c)?;
    let decoupled = decouple_temporal(inlined);
    order_dataflow(&decoupled)
}

/// Next unused index for `__t<n>` names in `c`.
pub(crate) fn next_fresh_index(c: &Contract) -> usize {
    c.eqs
        .iter()
        .filter_map(|e| e.name.strip_prefix(FRESH_PREFIX)?.parse::<usize>().ok())
        .map(|n| n + 1)
        .max()
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse;

    #[test]
    fn normalization_is_idempotent() {
        let c = parse(
            r#"component C {
                input X : int; input B : bool; output Y : int;
                node hold(b : bool) : bool = b -> pre(b);
                eq cnt : int = 0 -> pre(cnt) + 1;
                eq h : bool = hold(B) and hold(not B);
                guarantee "g1" : true -> pre(X -> pre(X)) > 0;
                guarantee "g2" : Y = cnt;
                assume "a" : h;
            }"#,
        )
        .unwrap();
        let once = normalize(&c).unwrap();
        let twice = normalize(&once.to_contract()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn dump_is_deterministic_json() {
        let c =
            parse("component C { input X : int; guarantee \"g\" : true -> pre(X) < 3; }").unwrap();
        let a = normalize(&c).unwrap().to_json();
        let b = normalize(&c).unwrap().to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["pre_table"][0]["operand"]["op"], "var");
        assert_eq!(v["guarantees"][0]["label"], "g");
    }

    #[test]
    fn cycles_and_ill_formed_inputs_are_reported() {
        let c = parse("component C { node f(a : int) : int = f(a); eq y : int = f(1); }").unwrap();
        assert_eq!(
            normalize(&c).unwrap_err(),
            IrError::NodeCycle(vec!["f".into()])
        );
        let c = parse("component C { input X : int; eq y : int = pre(X); }").unwrap();
        assert!(matches!(
            normalize(&c).unwrap_err(),
            IrError::NotWellFormed(_)
        ));
    }
}
