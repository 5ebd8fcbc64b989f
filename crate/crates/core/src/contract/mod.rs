//! Contract frontend: lexing, parsing, type checking and temporal
//! well-formedness of `.agc` contract files.
//!
//! A contract describes one component: its typed inputs and outputs, the
//! assumptions it makes about its inputs, the guarantees it gives about its
//! outputs, auxiliary equations and pure helper nodes. Expressions follow
//! synchronous stream semantics (`pre`, `->`).

mod check;
mod expand;
mod lexer;
mod parser;
mod printer;
mod wellformed;

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

pub(crate) use expand::map_children;
pub use expand::{expand_calls, find_node_cycle};
pub use parser::{parse, parse_unchecked};
pub(crate) use printer::format_rational;
pub use wellformed::{check_temporal_wellformedness, WellFormednessError};

/// Prefix reserved for compiler-generated names.
pub const RESERVED_PREFIX: &str = "__";

/// Location of a token or node in the source text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn merge(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
            line: self.line,
            col: self.col,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RecordType {
    pub name: String,
    pub fields: Vec<(String, SemType)>,
}

impl RecordType {
    pub fn field(&self, name: &str) -> Option<&SemType> {
        self.fields.iter().find(|(f, _)| f == name).map(|(_, t)| t)
    }
}

/// Source-level type. Integers and reals are unbounded and exact here.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SemType {
    Bool,
    Int,
    Real,
    Record(Arc<RecordType>),
}

impl SemType {
    pub fn is_numeric(&self) -> bool {
        matches!(self, SemType::Int | SemType::Real)
    }

    /// True when this type is, or structurally contains, `Real`.
    pub fn contains_real(&self) -> bool {
        match self {
            SemType::Real => true,
            SemType::Record(r) => r.fields.iter().any(|(_, t)| t.contains_real()),
            _ => false,
        }
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemType::Bool => f.write_str("bool"),
            SemType::Int => f.write_str("int"),
            SemType::Real => f.write_str("real"),
            SemType::Record(r) => f.write_str(&r.name),
        }
    }
}

impl Serialize for SemType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            SemType::Record(r) => {
                let mut st = s.serialize_struct("Record", 2)?;
                st.serialize_field("record", &r.name)?;
                let fields: Vec<_> = r
                    .fields
                    .iter()
                    .map(|(n, t)| FieldRef { name: n, ty: t })
                    .collect();
                st.serialize_field("fields", &fields)?;
                st.end()
            }
            other => s.serialize_str(&other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct FieldRef<'a> {
    name: &'a str,
    #[serde(rename = "type")]
    ty: &'a SemType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnOp {
    #[serde(rename = "-")]
    Neg,
    #[serde(rename = "not")]
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
    #[serde(rename = "div")]
    IntDiv,
    #[serde(rename = "mod")]
    Mod,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<>")]
    Ne,
    #[serde(rename = "and")]
    And,
    #[serde(rename = "or")]
    Or,
    #[serde(rename = "=>")]
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::IntDiv => "div",
            BinOp::Mod => "mod",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Implies => "=>",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExprKind {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    Ident(String),
    Select(Box<Expr>, String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pre(Box<Expr>),
    Arrow(Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

/// Expression node. `ty` is filled in by the type checker; equality and
/// hashing ignore the span.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
    pub ty: Option<SemType>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.ty == other.ty
    }
}

impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.ty.hash(state);
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr {
            kind,
            span,
            ty: None,
        }
    }

    pub fn typed(kind: ExprKind, ty: SemType) -> Expr {
        Expr {
            kind,
            span: Span::default(),
            ty: Some(ty),
        }
    }

    pub fn ident(name: impl Into<String>, ty: SemType) -> Expr {
        Expr::typed(ExprKind::Ident(name.into()), ty)
    }

    /// Resolved type. Panics on an unchecked expression.
    pub fn sem_type(&self) -> &SemType {
        self.ty
            .as_ref()
            .expect("expression has not been type checked")
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::Ident(_) => {
                vec![]
            }
            ExprKind::Select(e, _) | ExprKind::Unary(_, e) | ExprKind::Pre(e) => vec![e],
            ExprKind::Binary(_, a, b) | ExprKind::Arrow(a, b) => vec![a, b],
            ExprKind::If(c, a, b) => vec![c, a, b],
            ExprKind::Call(_, args) => args.iter().collect(),
        }
    }

    /// Pre-order visit of every node.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn contains_temporal(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e.kind, ExprKind::Pre(_) | ExprKind::Arrow(..)) {
                found = true;
            }
        });
        found
    }

    pub fn contains_arrow(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e.kind, ExprKind::Arrow(..)) {
                found = true;
            }
        });
        found
    }

    /// Identifiers referenced anywhere in the expression, including under `pre`.
    pub fn identifiers(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let ExprKind::Ident(n) = &e.kind {
                out.push(n.as_str());
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDecl {
    pub ty: Arc<RecordType>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct IoDecl {
    pub name: String,
    pub ty: SemType,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Property {
    pub label: String,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct EqDecl {
    pub name: String,
    pub ty: SemType,
    pub expr: Expr,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct NodeDecl {
    pub name: String,
    pub params: Vec<(String, SemType)>,
    pub result: SemType,
    pub body: Expr,
    pub span: Span,
}

macro_rules! eq_ignoring_span {
    ($t:ty { $($f:ident),* }) => {
        impl PartialEq for $t {
            fn eq(&self, other: &Self) -> bool {
                true $(&& self.$f == other.$f)*
            }
        }
    };
}

eq_ignoring_span!(IoDecl { name, ty });
eq_ignoring_span!(Property { label, expr });
eq_ignoring_span!(EqDecl { name, ty, expr });
eq_ignoring_span!(NodeDecl {
    name,
    params,
    result,
    body
});

/// A parsed and checked component contract.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub name: String,
    pub records: Vec<RecordDecl>,
    pub inputs: Vec<IoDecl>,
    pub outputs: Vec<IoDecl>,
    pub nodes: Vec<NodeDecl>,
    pub eqs: Vec<EqDecl>,
    pub assumes: Vec<Property>,
    pub guarantees: Vec<Property>,
}

impl Contract {
    pub fn empty(name: impl Into<String>) -> Contract {
        Contract {
            name: name.into(),
            records: vec![],
            inputs: vec![],
            outputs: vec![],
            nodes: vec![],
            eqs: vec![],
            assumes: vec![],
            guarantees: vec![],
        }
    }

    pub fn node(&self, name: &str) -> Option<&NodeDecl> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn eq(&self, name: &str) -> Option<&EqDecl> {
        self.eqs.iter().find(|e| e.name == name)
    }

    pub fn input(&self, name: &str) -> Option<&IoDecl> {
        self.inputs.iter().find(|e| e.name == name)
    }

    pub fn output(&self, name: &str) -> Option<&IoDecl> {
        self.outputs.iter().find(|e| e.name == name)
    }

    /// Outputs that are defined by an equation of the same name. Only design
    /// model contracts have these.
    pub fn defined_outputs(&self) -> Vec<&str> {
        self.outputs
            .iter()
            .filter(|o| self.eq(&o.name).is_some())
            .map(|o| o.name.as_str())
            .collect()
    }

    /// Every expression root in the contract except node bodies.
    pub fn roots(&self) -> impl Iterator<Item = &Expr> {
        self.eqs
            .iter()
            .map(|e| &e.expr)
            .chain(self.assumes.iter().map(|p| &p.expr))
            .chain(self.guarantees.iter().map(|p| &p.expr))
    }

    /// Type of a component-level variable (input, output or equation).
    pub fn var_type(&self, name: &str) -> Option<&SemType> {
        self.input(name)
            .map(|d| &d.ty)
            .or_else(|| self.eq(name).map(|e| &e.ty))
            .or_else(|| self.output(name).map(|d| &d.ty))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorKind {
    Lex,
    Parse,
    Reserved,
    Unresolved,
    Duplicate,
    TypeMismatch,
}

/// A frontend diagnostic with its source location.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{span}: {message}")]
pub struct FrontendError {
    pub kind: ErrorKind,
    pub message: String,
    pub span: Span,
}

impl FrontendError {
    pub(crate) fn new(kind: ErrorKind, span: Span, message: impl Into<String>) -> Self {
        FrontendError {
            kind,
            message: message.into(),
            span,
        }
    }
}

/// Non-fatal findings from checking, such as an assumption that mentions an
/// output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lint {
    pub message: String,
    pub span: Span,
}

pub use check::lints;
