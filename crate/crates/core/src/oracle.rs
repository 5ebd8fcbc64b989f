//! Reference evaluator over the contract AST with exact arithmetic.
//!
//! Streams are evaluated on demand with memoization per (equation, step).
//! Node calls are evaluated by name: an argument expression is evaluated in
//! the caller's scope at whatever step the body asks for it. `if`, `and`,
//! `or`, `=>` and `->` only evaluate the operands they need.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::contract::{BinOp, Contract, Expr, ExprKind, UnOp};
use crate::semantics::{int_div, int_mod};
use crate::trace::Trace;
use crate::types::{FloatPrecision, TypeConfig};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OValue {
    Bool(bool),
    Int(BigInt),
    Real(BigRational),
    Record(Vec<(String, OValue)>),
    /// `pre e` at the first step.
    Bottom,
}

impl OValue {
    pub fn from_value(v: &Value) -> Option<OValue> {
        Some(match v {
            Value::Bool(b) => OValue::Bool(*b),
            Value::Int { v, .. } => OValue::Int(BigInt::from(*v)),
            Value::Float { v, .. } => OValue::Real(BigRational::from_float(*v)?),
            Value::Struct { fields, .. } => OValue::Record(
                fields
                    .iter()
                    .map(|(n, v)| Some((n.clone(), OValue::from_value(v)?)))
                    .collect::<Option<_>>()?,
            ),
        })
    }

    pub fn contains_bottom(&self) -> bool {
        match self {
            OValue::Bottom => true,
            OValue::Record(fs) => fs.iter().any(|(_, v)| v.contains_bottom()),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("step {step}: division by zero")]
    DivisionByZero { step: usize },
    #[error("step {step}: undefined value reached {at}")]
    BottomObserved { step: usize, at: String },
    #[error("step {step}: no value for signal `{name}`")]
    MissingSignal { step: usize, name: String },
    #[error("step {step}: `{name}` depends on itself within a step")]
    Cycle { step: usize, name: String },
    #[error("step {step}: {message}")]
    Internal { step: usize, message: String },
}

impl OracleError {
    pub fn step(&self) -> usize {
        match self {
            OracleError::DivisionByZero { step }
            | OracleError::BottomObserved { step, .. }
            | OracleError::MissingSignal { step, .. }
            | OracleError::Cycle { step, .. }
            | OracleError::Internal { step, .. } => *step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalStats {
    pub conditionals: u64,
    pub then_branches: u64,
    pub else_branches: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OracleStep {
    pub assumes: BTreeMap<String, bool>,
    pub guarantees: BTreeMap<String, bool>,
    pub vacuous: bool,
    /// Equation values; nil where a delay has no earlier value yet.
    pub eqs: BTreeMap<String, OValue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OracleRun {
    pub steps: Vec<OracleStep>,
    pub error: Option<OracleError>,
    /// First step at which some evaluated integer left the configured range.
    pub int_excursion: Option<usize>,
    /// First step at which some evaluated real was not exactly representable
    /// at the configured precision.
    pub real_inexact: Option<usize>,
    pub stats: EvalStats,
}

struct Frame<'c> {
    bindings: Vec<(&'c str, &'c Expr)>,
    parent: Option<Rc<Frame<'c>>>,
}

type Scope<'c> = Option<Rc<Frame<'c>>>;

struct Eval<'c> {
    c: &'c Contract,
    cfg: TypeConfig,
    signals: Vec<HashMap<String, OValue>>,
    memo: Vec<HashMap<&'c str, OValue>>,
    active: HashSet<(&'c str, usize)>,
    stats: EvalStats,
    int_excursion: Option<usize>,
    real_inexact: Option<usize>,
}

fn mark(slot: &mut Option<usize>, t: usize) {
    *slot = Some(slot.map_or(t, |s| s.min(t)));
}

/// Whether `r` is exactly a finite float of the given precision.
pub fn exactly_representable(r: &BigRational, prec: FloatPrecision) -> bool {
    if r.is_zero() {
        return true;
    }
    let (mantissa, max_exp, min_exp) = match prec {
        FloatPrecision::Single => (24u64, 128i64, -149i64),
        FloatPrecision::Double => (53, 1024, -1074),
    };
    let d = r.denom();
    let d_bits = d.bits();
    if (d - BigInt::one()) & d != BigInt::zero() {
        return false;
    }
    let n = r.numer().abs();
    let tz = n.trailing_zeros().unwrap_or(0);
    let odd = &n >> tz;
    if odd.bits() > mantissa {
        return false;
    }
    let e = tz as i64 - (d_bits as i64 - 1);
    e >= min_exp && e + odd.bits() as i64 <= max_exp
}

impl<'c> Eval<'c> {
    fn note(&mut self, v: &OValue, t: usize) {
        match v {
            OValue::Int(i) => {
                let ty = self.cfg.int_type();
                if *i < BigInt::from(ty.min()) || *i > BigInt::from(ty.max()) {
                    mark(&mut self.int_excursion, t);
                }
            }
            OValue::Real(r) => {
                let exact = self
                    .cfg
                    .float_precision
                    .is_some_and(|p| exactly_representable(r, p));
                if !exact {
                    mark(&mut self.real_inexact, t);
                }
            }
            _ => {}
        }
    }

    fn eq_value(&mut self, name: &'c str, t: usize) -> Result<OValue, OracleError> {
        if let Some(v) = self.memo[t].get(name) {
            return Ok(v.clone());
        }
        if !self.active.insert((name, t)) {
            return Err(OracleError::Cycle {
                step: t,
                name: name.to_string(),
            });
        }
        let eq = self.c.eq(name).expect("caller checked");
        let v = self.eval(&eq.expr, t, &None);
        self.active.remove(&(name, t));
        let v = v?;
        self.memo[t].insert(name, v.clone());
        Ok(v)
    }

    fn ident(&mut self, name: &'c str, t: usize, scope: &Scope<'c>) -> Result<OValue, OracleError> {
        if let Some(frame) = scope {
            if let Some((_, arg)) = frame.bindings.iter().find(|(p, _)| *p == name) {
                let parent = frame.parent.clone();
                return self.eval(arg, t, &parent);
            }
        }
        if self.c.eq(name).is_some() {
            return self.eq_value(name, t);
        }
        self.signals[t]
            .get(name)
            .cloned()
            .ok_or_else(|| OracleError::MissingSignal {
                step: t,
                name: name.to_string(),
            })
    }

    fn eval(&mut self, e: &'c Expr, t: usize, scope: &Scope<'c>) -> Result<OValue, OracleError> {
        let internal = |m: &str| OracleError::Internal {
            step: t,
            message: m.to_string(),
        };
        let v = match &e.kind {
            ExprKind::Bool(b) => OValue::Bool(*b),
            ExprKind::Int(i) => OValue::Int(i.clone()),
            ExprKind::Real(r) => OValue::Real(r.clone()),
            ExprKind::Ident(n) => self.ident(n, t, scope)?,
            ExprKind::Select(x, f) => match self.eval(x, t, scope)? {
                OValue::Bottom => OValue::Bottom,
                OValue::Record(fs) => fs
                    .into_iter()
                    .find(|(n, _)| n == f)
                    .map(|(_, v)| v)
                    .ok_or_else(|| internal("missing field"))?,
                _ => return Err(internal("selection from a non-record")),
            },
            ExprKind::Unary(op, x) => match (op, self.eval(x, t, scope)?) {
                (_, OValue::Bottom) => OValue::Bottom,
                (UnOp::Not, OValue::Bool(b)) => OValue::Bool(!b),
                (UnOp::Neg, OValue::Int(i)) => OValue::Int(-i),
                (UnOp::Neg, OValue::Real(r)) => OValue::Real(-r),
                _ => return Err(internal("unary operand type")),
            },
            ExprKind::Binary(op, a, b) => self.binary(*op, a, b, t, scope)?,
            ExprKind::Pre(x) => {
                if t == 0 {
                    OValue::Bottom
                } else {
                    self.eval(x, t - 1, scope)?
                }
            }
            ExprKind::Arrow(a, b) => {
                if t == 0 {
                    self.eval(a, t, scope)?
                } else {
                    self.eval(b, t, scope)?
                }
            }
            ExprKind::If(c, a, b) => {
                self.stats.conditionals += 1;
                match self.eval(c, t, scope)? {
                    OValue::Bottom => OValue::Bottom,
                    OValue::Bool(true) => {
                        self.stats.then_branches += 1;
                        self.eval(a, t, scope)?
                    }
                    OValue::Bool(false) => {
                        self.stats.else_branches += 1;
                        self.eval(b, t, scope)?
                    }
                    _ => return Err(internal("non-Boolean condition")),
                }
            }
            ExprKind::Call(name, args) => {
                let node = self.c.node(name).ok_or_else(|| internal("unknown node"))?;
                let frame = Frame {
                    bindings: node
                        .params
                        .iter()
                        .map(|(p, _)| p.as_str())
                        .zip(args.iter())
                        .collect(),
                    parent: scope.clone(),
                };
                self.eval(&node.body, t, &Some(Rc::new(frame)))?
            }
        };
        self.note(&v, t);
        Ok(v)
    }

    fn binary(
        &mut self,
        op: BinOp,
        a: &'c Expr,
        b: &'c Expr,
        t: usize,
        scope: &Scope<'c>,
    ) -> Result<OValue, OracleError> {
        let internal = || OracleError::Internal {
            step: t,
            message: format!("operand types for {}", op.symbol()),
        };
        if matches!(op, BinOp::And | BinOp::Or | BinOp::Implies) {
            let l = match self.eval(a, t, scope)? {
                OValue::Bool(l) => l,
                OValue::Bottom => return Ok(OValue::Bottom),
                _ => return Err(internal()),
            };
            let decided = match op {
                BinOp::And if !l => Some(false),
                BinOp::Or if l => Some(true),
                BinOp::Implies if !l => Some(true),
                _ => None,
            };
            if let Some(d) = decided {
                return Ok(OValue::Bool(d));
            }
            return match self.eval(b, t, scope)? {
                v @ (OValue::Bool(_) | OValue::Bottom) => Ok(v),
                _ => Err(internal()),
            };
        }
        let l = self.eval(a, t, scope)?;
        let r = self.eval(b, t, scope)?;
        if l.contains_bottom() || r.contains_bottom() {
            return Ok(OValue::Bottom);
        }
        let div_zero = OracleError::DivisionByZero { step: t };
        Ok(match (op, l, r) {
            (BinOp::Eq, l, r) => OValue::Bool(l == r),
            (BinOp::Ne, l, r) => OValue::Bool(l != r),
            (op, OValue::Int(x), OValue::Int(y)) => match op {
                BinOp::Add => OValue::Int(x + y),
                BinOp::Sub => OValue::Int(x - y),
                BinOp::Mul => OValue::Int(x * y),
                BinOp::IntDiv => OValue::Int(int_div(&x, &y).ok_or(div_zero)?),
                BinOp::Mod => OValue::Int(int_mod(&x, &y).ok_or(div_zero)?),
                BinOp::Lt => OValue::Bool(x < y),
                BinOp::Le => OValue::Bool(x <= y),
                BinOp::Gt => OValue::Bool(x > y),
                BinOp::Ge => OValue::Bool(x >= y),
                _ => return Err(internal()),
            },
            (op, OValue::Real(x), OValue::Real(y)) => match op {
                BinOp::Add => OValue::Real(x + y),
                BinOp::Sub => OValue::Real(x - y),
                BinOp::Mul => OValue::Real(x * y),
                BinOp::Div if y.is_zero() => return Err(div_zero),
                BinOp::Div => OValue::Real(x / y),
                BinOp::Lt => OValue::Bool(x < y),
                BinOp::Le => OValue::Bool(x <= y),
                BinOp::Gt => OValue::Bool(x > y),
                BinOp::Ge => OValue::Bool(x >= y),
                _ => return Err(internal()),
            },
            _ => return Err(internal()),
        })
    }

    fn verdict(&mut self, e: &'c Expr, t: usize, what: &str) -> Result<bool, OracleError> {
        match self.eval(e, t, &None)? {
            OValue::Bool(b) => Ok(b),
            OValue::Bottom => Err(OracleError::BottomObserved {
                step: t,
                at: what.to_string(),
            }),
            _ => Err(OracleError::Internal {
                step: t,
                message: format!("{what} is not Boolean"),
            }),
        }
    }

    fn step(&mut self, t: usize, vacuous: bool) -> Result<OracleStep, OracleError> {
        let c = self.c;
        let mut out = OracleStep {
            vacuous,
            ..Default::default()
        };
        for eq in &c.eqs {
            // A nil equation is only an error once a property reads it.
            let v = self.eq_value(&eq.name, t)?;
            out.eqs.insert(eq.name.clone(), v);
        }
        for a in &c.assumes {
            let b = self.verdict(&a.expr, t, &format!("assume \"{}\"", a.label))?;
            out.vacuous |= !b;
            out.assumes.insert(a.label.clone(), b);
        }
        for g in &c.guarantees {
            let b = self.verdict(&g.expr, t, &format!("guarantee \"{}\"", g.label))?;
            out.guarantees.insert(g.label.clone(), b);
        }
        Ok(out)
    }
}

/// Evaluates `c` over a trace that binds every input and every output not
/// defined by an equation.
pub fn eval(c: &Contract, trace: &Trace, cfg: &TypeConfig) -> OracleRun {
    let mut signals = Vec::with_capacity(trace.len());
    for (t, s) in trace.steps.iter().enumerate() {
        let mut m = HashMap::new();
        for (k, v) in s {
            match OValue::from_value(v) {
                Some(o) => {
                    m.insert(k.clone(), o);
                }
                None => {
                    return OracleRun {
                        error: Some(OracleError::Internal {
                            step: t,
                            message: format!("signal `{k}` is not finite"),
                        }),
                        ..Default::default()
                    }
                }
            }
        }
        signals.push(m);
    }
    eval_exact(c, signals, cfg)
}

/// Like [`eval`] but over exact input values.
pub fn eval_exact(
    c: &Contract,
    signals: Vec<HashMap<String, OValue>>,
    cfg: &TypeConfig,
) -> OracleRun {
    let n = signals.len();
    let mut ev = Eval {
        c,
        cfg: *cfg,
        signals,
        memo: vec![HashMap::new(); n],
        active: HashSet::new(),
        stats: EvalStats::default(),
        int_excursion: None,
        real_inexact: None,
    };
    let mut steps = Vec::with_capacity(n);
    let mut error = None;
    let mut vacuous = false;
    for t in 0..n {
        match ev.step(t, vacuous) {
            Ok(s) => {
                vacuous = s.vacuous;
                steps.push(s);
            }
            Err(e) => {
                error = Some(e);
                break;
            }
        }
    }
    OracleRun {
        steps,
        error,
        int_excursion: ev.int_excursion,
        real_inexact: ev.real_inexact,
        stats: ev.stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse;
    use crate::trace::Valuation;
    use crate::types::IntType;

    fn ints(name: &str, xs: &[i64]) -> Trace {
        Trace::new(
            xs.iter()
                .map(|x| Valuation::from([(name.to_string(), Value::int(*x, IntType::INT32))]))
                .collect(),
        )
    }

    fn empty(n: usize) -> Trace {
        Trace::new(vec![Valuation::new(); n])
    }

    #[test]
    fn counter_stream() {
        let c = parse("component C { eq x : int = 0 -> pre(x) + 1; }").unwrap();
        let run = eval(&c, &empty(5), &TypeConfig::default());
        let xs: Vec<OValue> = run.steps.iter().map(|s| s.eqs["x"].clone()).collect();
        assert_eq!(
            xs,
            (0..5).map(|i| OValue::Int(i.into())).collect::<Vec<_>>()
        );
    }

    #[test]
    fn true_arrow_false() {
        let c = parse("component C { guarantee \"g\" : true -> false; }").unwrap();
        let run = eval(&c, &empty(4), &TypeConfig::default());
        let g: Vec<bool> = run.steps.iter().map(|s| s.guarantees["g"]).collect();
        assert_eq!(g, [true, false, false, false]);
    }

    #[test]
    fn reflexive_equality_always_holds() {
        let c = parse("component C { input x : int; guarantee \"r\" : x = x; }").unwrap();
        let run = eval(&c, &ints("x", &[3, -9, 0]), &TypeConfig::default());
        assert!(run.steps.iter().all(|s| s.guarantees["r"]));
    }

    #[test]
    fn unguarded_pre_is_observed() {
        let c = parse("component C { input x : int; guarantee \"g\" : pre(x) > 0; }").unwrap();
        let run = eval(&c, &ints("x", &[1, 2]), &TypeConfig::default());
        assert!(matches!(
            run.error,
            Some(OracleError::BottomObserved { step: 0, .. })
        ));
    }

    #[test]
    fn nil_equations_are_recorded_not_observed() {
        let c = parse(
            "component C { input x : int; eq d : int = pre(x); guarantee \"g\" : true -> d > 0; }",
        )
        .unwrap();
        let run = eval(&c, &ints("x", &[1, 2]), &TypeConfig::default());
        assert_eq!(run.error, None);
        assert_eq!(run.steps[0].eqs["d"], OValue::Bottom);
        assert_eq!(run.steps[1].eqs["d"], OValue::Int(1.into()));
    }

    #[test]
    fn conditionals_are_lazy() {
        let c = parse(
            "component C { input X : int; guarantee \"g\" : if X = 0 then true else 10 div X > 0; }",
        )
        .unwrap();
        let run = eval(&c, &ints("X", &[0, 5, 0]), &TypeConfig::default());
        assert!(run.error.is_none());
        assert_eq!(run.stats.conditionals, 3);
        assert_eq!(
            run.stats.then_branches + run.stats.else_branches,
            run.stats.conditionals
        );
        assert_eq!(run.stats.then_branches, 2);
    }

    #[test]
    fn nodes_are_instantiated_per_call_site() {
        let c = parse(
            "component C { input X : int; input Y : int;
             node count(p : int) : int = 0 -> pre(p) + 1;
             eq a : int = count(X); eq b : int = count(Y); }",
        )
        .unwrap();
        let mut steps = Vec::new();
        for (x, y) in [(5, 10), (6, 20)] {
            steps.push(Valuation::from([
                ("X".to_string(), Value::int(x, IntType::INT32)),
                ("Y".to_string(), Value::int(y, IntType::INT32)),
            ]));
        }
        let run = eval(&c, &Trace::new(steps), &TypeConfig::default());
        assert_eq!(run.steps[1].eqs["a"], OValue::Int(6.into()));
        assert_eq!(run.steps[1].eqs["b"], OValue::Int(11.into()));
    }

    #[test]
    fn excursions_are_tracked() {
        let cfg = TypeConfig::new(8, true, FloatPrecision::Single);
        let c = parse("component C { input X : int; guarantee \"g\" : X + 1 > X; }").unwrap();
        let run = eval(&c, &ints("X", &[0, 127]), &cfg);
        assert_eq!(run.int_excursion, Some(1));
        let c = parse("component C { eq r : real = 0.5; eq s : real = 0.1; }").unwrap();
        let run = eval(&c, &empty(1), &cfg);
        assert_eq!(run.real_inexact, Some(0));
    }

    #[test]
    fn representability() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert!(exactly_representable(&r(1, 2), FloatPrecision::Single));
        assert!(exactly_representable(&r(-3, 1024), FloatPrecision::Single));
        assert!(!exactly_representable(&r(1, 10), FloatPrecision::Double));
        assert!(exactly_representable(
            &r((1 << 24) - 1, 1),
            FloatPrecision::Single
        ));
        assert!(!exactly_representable(
            &r((1 << 24) + 1, 1),
            FloatPrecision::Single
        ));
        assert!(exactly_representable(
            &r((1 << 24) + 1, 1),
            FloatPrecision::Double
        ));
    }
}
