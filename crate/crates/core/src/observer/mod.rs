//! Imperative observer programs: a step function over the component's
//! inputs and outputs with persistent state for `->` and `pre`.

mod lower;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::types::LoweredType;
use crate::value::Value;

pub use lower::{interface_of, lower, lower_model, LowerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: LoweredType,
    pub role: Role,
}

/// Parameter list of an observer: component inputs, then outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObserverInterface {
    pub params: Vec<Param>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersistentKind {
    FirstTime,
    Pre,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persistent {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: LoweredType,
    pub init: Value,
    pub kind: PersistentKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OUnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OBinOp {
    Add,
    Sub,
    Mul,
    /// Real division.
    Div,
    /// Integer division truncating toward zero.
    IntDiv,
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
    And,
    Or,
}

impl OBinOp {
    pub const ALL: [OBinOp; 12] = [
        OBinOp::Add,
        OBinOp::Sub,
        OBinOp::Mul,
        OBinOp::Div,
        OBinOp::IntDiv,
        OBinOp::Lt,
        OBinOp::Le,
        OBinOp::Gt,
        OBinOp::Ge,
        OBinOp::Ne,
        OBinOp::And,
        OBinOp::Or,
    ];
}

/// Generated local functions plus the two library calls that need one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Helper {
    If,
    Implies,
    /// `arrow(first_time, a, b)`.
    Arrow,
    Mod,
    IsEqual,
}

impl Helper {
    pub const ALL: [Helper; 5] = [
        Helper::If,
        Helper::Implies,
        Helper::Arrow,
        Helper::Mod,
        Helper::IsEqual,
    ];

    pub fn arity(self) -> usize {
        match self {
            Helper::If | Helper::Arrow => 3,
            Helper::Implies | Helper::Mod | Helper::IsEqual => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OExpr {
    Const(Value),
    Var(String),
    Field(Box<OExpr>, String),
    Unary(OUnOp, Box<OExpr>),
    Binary(OBinOp, Box<OExpr>, Box<OExpr>),
    Call(Helper, Vec<OExpr>),
}

impl OExpr {
    pub fn children(&self) -> Vec<&OExpr> {
        match self {
            OExpr::Const(_) | OExpr::Var(_) => vec![],
            OExpr::Field(e, _) | OExpr::Unary(_, e) => vec![e],
            OExpr::Binary(_, a, b) => vec![a, b],
            OExpr::Call(_, args) => args.iter().collect(),
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a OExpr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let OExpr::Var(n) = e {
                out.push(n.as_str());
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "stmt")]
pub enum Stmt {
    Assign {
        target: String,
        #[serde(rename = "type")]
        ty: LoweredType,
        expr: OExpr,
    },
    Assume {
        label: String,
        expr: OExpr,
    },
    Prove {
        label: String,
        expr: OExpr,
    },
}

impl Stmt {
    pub fn expr(&self) -> &OExpr {
        match self {
            Stmt::Assign { expr, .. } | Stmt::Assume { expr, .. } | Stmt::Prove { expr, .. } => {
                expr
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Update {
    pub target: String,
    pub expr: OExpr,
}

/// A step function. Observers read every component signal and report
/// assume/prove verdicts; model programs (non-empty `results`) read inputs
/// and produce outputs.
///
/// Execution of one step: initialize any persistent that is still empty,
/// run `step` in order, run `updates` in order, then clear the first-step
/// flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverProgram {
    pub name: String,
    pub params: Vec<Param>,
    #[serde(default)]
    pub results: Vec<Param>,
    pub persistents: Vec<Persistent>,
    pub step: Vec<Stmt>,
    pub updates: Vec<Update>,
}

impl ObserverProgram {
    pub fn first_time(&self) -> Option<&Persistent> {
        self.persistents
            .iter()
            .find(|p| p.kind == PersistentKind::FirstTime)
    }

    pub fn pre_persistents(&self) -> impl Iterator<Item = &Persistent> {
        self.persistents
            .iter()
            .filter(|p| p.kind == PersistentKind::Pre)
    }

    pub fn is_model(&self) -> bool {
        !self.results.is_empty()
    }

    pub fn assume_labels(&self) -> Vec<&str> {
        self.step
            .iter()
            .filter_map(|s| match s {
                Stmt::Assume { label, .. } => Some(label.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn prove_labels(&self) -> Vec<&str> {
        self.step
            .iter()
            .filter_map(|s| match s {
                Stmt::Prove { label, .. } => Some(label.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn exprs(&self) -> impl Iterator<Item = &OExpr> {
        self.step
            .iter()
            .map(Stmt::expr)
            .chain(self.updates.iter().map(|u| &u.expr))
    }

    pub fn helpers(&self) -> BTreeSet<Helper> {
        let mut out = BTreeSet::new();
        for e in self.exprs() {
            e.walk(&mut |x| {
                if let OExpr::Call(h, _) = x {
                    out.insert(*h);
                }
            });
        }
        out
    }

    /// Structural checks: unique names, assigned-before-read within a step,
    /// exactly one first-step flag, one update per pre-variable, every
    /// pre-variable read somewhere, and helper arities.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut declared: HashSet<&str> = HashSet::new();
        let mut types: HashMap<&str, &LoweredType> = HashMap::new();
        for p in &self.params {
            if !declared.insert(&p.name) {
                errs.push(format!("duplicate parameter `{}`", p.name));
            }
            types.insert(&p.name, &p.ty);
        }
        let flags = self
            .persistents
            .iter()
            .filter(|p| p.kind == PersistentKind::FirstTime)
            .count();
        if flags != 1 {
            errs.push(format!("expected one first-step flag, found {flags}"));
        }
        for p in &self.persistents {
            if !declared.insert(&p.name) {
                errs.push(format!("duplicate persistent `{}`", p.name));
            }
            if !p.init.has_type(&p.ty) {
                errs.push(format!(
                    "initial value of `{}` does not have type {}",
                    p.name, p.ty
                ));
            }
            if p.kind == PersistentKind::FirstTime && p.init != Value::Bool(true) {
                errs.push(format!("first-step flag `{}` must start true", p.name));
            }
        }
        let check_reads = |e: &OExpr, scope: &HashSet<&str>, errs: &mut Vec<String>, at: &str| {
            for v in e.vars() {
                if !scope.contains(v) {
                    errs.push(format!("{at} reads `{v}` before it is assigned"));
                }
            }
            e.walk(&mut |x| {
                if let OExpr::Call(h, args) = x {
                    if args.len() != h.arity() {
                        errs.push(format!("{at}: {h:?} takes {} arguments", h.arity()));
                    }
                }
            });
        };
        let mut scope = declared.clone();
        for s in &self.step {
            match s {
                Stmt::Assign { target, expr, .. } => {
                    check_reads(
                        expr,
                        &scope,
                        &mut errs,
                        &format!("assignment to `{target}`"),
                    );
                    if !scope.insert(target) || declared.contains(target.as_str()) {
                        errs.push(format!(
                            "`{target}` is assigned more than once or shadows a declaration"
                        ));
                    }
                }
                Stmt::Assume { label, expr } | Stmt::Prove { label, expr } => {
                    check_reads(expr, &scope, &mut errs, &format!("property \"{label}\""))
                }
            }
        }
        for r in &self.results {
            if !scope.contains(r.name.as_str()) || declared.contains(r.name.as_str()) {
                errs.push(format!("result `{}` is never assigned", r.name));
            }
        }
        let mut updated: HashSet<&str> = HashSet::new();
        for u in &self.updates {
            check_reads(
                &u.expr,
                &scope,
                &mut errs,
                &format!("update of `{}`", u.target),
            );
            let is_pre = self.pre_persistents().any(|p| p.name == u.target);
            if !is_pre {
                errs.push(format!(
                    "update target `{}` is not a pre-variable",
                    u.target
                ));
            }
            if !updated.insert(&u.target) {
                errs.push(format!("`{}` is updated more than once", u.target));
            }
        }
        let mut read: HashSet<&str> = HashSet::new();
        for s in &self.step {
            read.extend(s.expr().vars());
        }
        for p in self.pre_persistents() {
            if !updated.contains(p.name.as_str()) {
                errs.push(format!("pre-variable `{}` is never updated", p.name));
            }
            if !read.contains(p.name.as_str()) {
                errs.push(format!("pre-variable `{}` is never read", p.name));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}
