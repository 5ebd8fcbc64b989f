//! Step interpreter for observer and model programs.
//!
//! Besides values, the interpreter tracks a taint bit per value: pre-variable
//! defaults are tainted until their first update, and a verdict whose value
//! depended on a tainted value is reported in [`StepVerdict::tainted`].

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::observer::{Helper, OBinOp, OExpr, OUnOp, ObserverProgram, PersistentKind, Stmt};
use crate::semantics::{int_div, int_mod};
use crate::trace::{Trace, Valuation};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("step {step}: division by zero in {at}")]
    DivisionByZero { step: usize, at: String },
    #[error("step {step}: no value for signal `{name}`")]
    MissingSignal { step: usize, name: String },
    #[error("step {step}: signal `{name}` expects {expected}, got {found}")]
    SignalType {
        step: usize,
        name: String,
        expected: String,
        found: String,
    },
    #[error("step {step}: internal error in {at}: {message}")]
    Internal {
        step: usize,
        at: String,
        message: String,
    },
}

impl InterpError {
    pub fn step(&self) -> usize {
        match self {
            InterpError::DivisionByZero { step, .. }
            | InterpError::MissingSignal { step, .. }
            | InterpError::SignalType { step, .. }
            | InterpError::Internal { step, .. } => *step,
        }
    }

    pub fn is_trap(&self) -> bool {
        matches!(self, InterpError::DivisionByZero { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StepVerdict {
    pub assumes: BTreeMap<String, bool>,
    pub proves: BTreeMap<String, bool>,
    /// Some assume has been false at this or an earlier step.
    pub vacuous: bool,
    /// Labels whose verdict depended on an uninitialized pre-variable.
    pub tainted: Vec<String>,
}

impl StepVerdict {
    /// Labels of proves that are false while the step is not vacuous.
    pub fn violations(&self) -> Vec<&str> {
        if self.vacuous {
            return vec![];
        }
        self.proves
            .iter()
            .filter(|(_, v)| !**v)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

#[derive(Debug, Clone)]
enum SExpr {
    Const(Value),
    Slot(usize),
    Field(Box<SExpr>, String),
    Unary(OUnOp, Box<SExpr>),
    Binary(OBinOp, Box<SExpr>, Box<SExpr>),
    Call(Helper, Vec<SExpr>),
}

#[derive(Debug, Clone)]
enum SStmt {
    Assign(usize, SExpr),
    Assume(String, SExpr),
    Prove(String, SExpr),
}

#[derive(Debug)]
struct Compiled {
    program: ObserverProgram,
    names: Vec<String>,
    slots: HashMap<String, usize>,
    n_params: usize,
    persistents: Vec<usize>,
    local_start: usize,
    first_time: usize,
    stmts: Vec<SStmt>,
    updates: Vec<(usize, SExpr)>,
    results: Vec<usize>,
}

fn resolve(e: &OExpr, slots: &HashMap<String, usize>) -> Result<SExpr, String> {
    let b = |x: &OExpr| resolve(x, slots).map(Box::new);
    Ok(match e {
        OExpr::Const(v) => SExpr::Const(v.clone()),
        OExpr::Var(n) => SExpr::Slot(
            *slots
                .get(n)
                .ok_or_else(|| format!("unknown variable `{n}`"))?,
        ),
        OExpr::Field(x, f) => SExpr::Field(b(x)?, f.clone()),
        OExpr::Unary(op, x) => SExpr::Unary(*op, b(x)?),
        OExpr::Binary(op, x, y) => SExpr::Binary(*op, b(x)?, b(y)?),
        OExpr::Call(h, args) => SExpr::Call(
            *h,
            args.iter()
                .map(|a| resolve(a, slots))
                .collect::<Result<_, _>>()?,
        ),
    })
}

impl Compiled {
    fn new(p: &ObserverProgram) -> Result<Compiled, String> {
        let mut names: Vec<String> = Vec::new();
        let mut slots = HashMap::new();
        let mut add = |n: &str, names: &mut Vec<String>| -> Result<usize, String> {
            if slots.contains_key(n) {
                return Err(format!("`{n}` is declared twice"));
            }
            slots.insert(n.to_string(), names.len());
            names.push(n.to_string());
            Ok(names.len() - 1)
        };
        for param in &p.params {
            add(&param.name, &mut names)?;
        }
        let n_params = names.len();
        let mut persistents = Vec::new();
        let mut first_time = None;
        for v in &p.persistents {
            let s = add(&v.name, &mut names)?;
            persistents.push(s);
            if v.kind == PersistentKind::FirstTime {
                first_time = Some(s);
            }
        }
        let first_time = first_time.ok_or("program has no first-step flag")?;
        let local_start = names.len();
        for s in &p.step {
            if let Stmt::Assign { target, .. } = s {
                add(target, &mut names)?;
            }
        }
        let stmts = p
            .step
            .iter()
            .map(|s| {
                Ok(match s {
                    Stmt::Assign { target, expr, .. } => {
                        SStmt::Assign(slots[target.as_str()], resolve(expr, &slots)?)
                    }
                    Stmt::Assume { label, expr } => {
                        SStmt::Assume(label.clone(), resolve(expr, &slots)?)
                    }
                    Stmt::Prove { label, expr } => {
                        SStmt::Prove(label.clone(), resolve(expr, &slots)?)
                    }
                })
            })
            .collect::<Result<_, String>>()?;
        let updates = p
            .updates
            .iter()
            .map(|u| {
                let slot = *slots
                    .get(&u.target)
                    .ok_or_else(|| format!("unknown update target `{}`", u.target))?;
                Ok((slot, resolve(&u.expr, &slots)?))
            })
            .collect::<Result<_, String>>()?;
        let results = p
            .results
            .iter()
            .map(|r| {
                slots
                    .get(&r.name)
                    .copied()
                    .filter(|s| *s >= local_start)
                    .ok_or_else(|| format!("result `{}` is never assigned", r.name))
            })
            .collect::<Result<_, String>>()?;
        Ok(Compiled {
            program: p.clone(),
            names,
            slots,
            n_params,
            persistents,
            local_start,
            first_time,
            stmts,
            updates,
            results,
        })
    }
}

#[derive(Debug, Error)]
#[error("program cannot be executed: {0}")]
pub struct LoadError(pub String);

/// Execution state for one program. Instances are independent; cloning
/// snapshots the state.
#[derive(Debug, Clone)]
pub struct Interpreter {
    code: Arc<Compiled>,
    defaults: Vec<Value>,
    env: Vec<Option<Value>>,
    taint: Vec<bool>,
    step: usize,
    vacuous: bool,
}

type Tv = (Value, bool);

impl Interpreter {
    pub fn new(p: &ObserverProgram) -> Result<Interpreter, LoadError> {
        let code = Compiled::new(p).map_err(LoadError)?;
        let defaults = p.persistents.iter().map(|v| v.init.clone()).collect();
        let n = code.names.len();
        Ok(Interpreter {
            code: Arc::new(code),
            defaults,
            env: vec![None; n],
            taint: vec![false; n],
            step: 0,
            vacuous: false,
        })
    }

    /// Like [`Interpreter::new`] but with some persistent initial values
    /// replaced. Values must have the persistent's type.
    pub fn with_defaults(
        p: &ObserverProgram,
        overrides: &BTreeMap<String, Value>,
    ) -> Result<Interpreter, LoadError> {
        let mut it = Interpreter::new(p)?;
        for (name, v) in overrides {
            let i = p
                .persistents
                .iter()
                .position(|x| &x.name == name)
                .ok_or_else(|| LoadError(format!("no persistent `{name}`")))?;
            if !v.has_type(&p.persistents[i].ty) {
                return Err(LoadError(format!(
                    "override for `{name}` has the wrong type"
                )));
            }
            it.defaults[i] = v.clone();
        }
        Ok(it)
    }

    pub fn program(&self) -> &ObserverProgram {
        &self.code.program
    }

    /// Restores the state of a fresh instance.
    pub fn reset(&mut self) {
        self.env.iter_mut().for_each(|v| *v = None);
        self.taint.iter_mut().for_each(|t| *t = false);
        self.step = 0;
        self.vacuous = false;
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Value of any named variable as left by the last step.
    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.env[*self.code.slots.get(name)?].as_ref()
    }

    /// Assigned locals of the last step, in program order.
    pub fn locals(&self) -> Vec<(&str, &Value)> {
        (self.code.local_start..self.code.names.len())
            .filter_map(|i| Some((self.code.names[i].as_str(), self.env[i].as_ref()?)))
            .collect()
    }

    /// Output values of a model program after the last step.
    pub fn results(&self) -> Valuation {
        self.code
            .program
            .results
            .iter()
            .zip(&self.code.results)
            .filter_map(|(r, s)| Some((r.name.clone(), self.env[*s].clone()?)))
            .collect()
    }

    pub fn step(&mut self, inputs: &Valuation) -> Result<StepVerdict, InterpError> {
        let code = Arc::clone(&self.code);
        let step = self.step;
        for (i, p) in code.program.params.iter().enumerate() {
            let v = inputs
                .get(&p.name)
                .ok_or_else(|| InterpError::MissingSignal {
                    step,
                    name: p.name.clone(),
                })?;
            if !v.has_type(&p.ty) {
                return Err(InterpError::SignalType {
                    step,
                    name: p.name.clone(),
                    expected: p.ty.to_string(),
                    found: v.to_string(),
                });
            }
            self.env[i] = Some(v.clone());
            self.taint[i] = false;
        }
        debug_assert_eq!(code.n_params, code.program.params.len());
        for (k, &s) in code.persistents.iter().enumerate() {
            if self.env[s].is_none() {
                self.env[s] = Some(self.defaults[k].clone());
                self.taint[s] = code.program.persistents[k].kind == PersistentKind::Pre;
            }
        }
        for s in code.local_start..code.names.len() {
            self.env[s] = None;
            self.taint[s] = false;
        }

        let mut verdict = StepVerdict::default();
        let mut any_assume_false = false;
        for st in &code.stmts {
            match st {
                SStmt::Assign(slot, e) => {
                    let at = || format!("assignment to `{}`", code.names[*slot]);
                    let (v, t) = self.eval(e, &at)?;
                    self.env[*slot] = Some(v);
                    self.taint[*slot] = t;
                }
                SStmt::Assume(label, e) | SStmt::Prove(label, e) => {
                    let at = || format!("property \"{label}\"");
                    let (v, t) = self.eval(e, &at)?;
                    let b = v
                        .as_bool()
                        .ok_or_else(|| self.internal(&at(), "property is not Boolean"))?;
                    if t {
                        verdict.tainted.push(label.clone());
                    }
                    if matches!(st, SStmt::Assume(..)) {
                        any_assume_false |= !b;
                        verdict.assumes.insert(label.clone(), b);
                    } else {
                        verdict.proves.insert(label.clone(), b);
                    }
                }
            }
        }
        for (slot, e) in &code.updates {
            let at = || format!("update of `{}`", code.names[*slot]);
            let (v, t) = self.eval(e, &at)?;
            self.env[*slot] = Some(v);
            self.taint[*slot] = t;
        }
        self.env[code.first_time] = Some(Value::Bool(false));
        self.vacuous |= any_assume_false;
        verdict.vacuous = self.vacuous;
        self.step += 1;
        Ok(verdict)
    }

    fn internal(&self, at: &str, message: &str) -> InterpError {
        InterpError::Internal {
            step: self.step,
            at: at.to_string(),
            message: message.to_string(),
        }
    }

    fn eval(&self, e: &SExpr, at: &dyn Fn() -> String) -> Result<Tv, InterpError> {
        let bad = |m: &str| self.internal(&at(), m);
        match e {
            SExpr::Const(v) => Ok((v.clone(), false)),
            SExpr::Slot(s) => match &self.env[*s] {
                Some(v) => Ok((v.clone(), self.taint[*s])),
                None => Err(bad(&format!(
                    "`{}` read before assignment",
                    self.code.names[*s]
                ))),
            },
            SExpr::Field(x, f) => {
                let (v, t) = self.eval(x, at)?;
                let fv = v.field(f).ok_or_else(|| bad(&format!("no field `{f}`")))?;
                Ok((fv.clone(), t))
            }
            SExpr::Unary(op, x) => {
                let (v, t) = self.eval(x, at)?;
                let r = match (op, v) {
                    (OUnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (OUnOp::Neg, Value::Int { v, ty }) => Value::int(ty.wrap(-v), ty),
                    (OUnOp::Neg, Value::Float { v, prec }) => Value::Float { v: -v, prec },
                    _ => return Err(bad("operand type")),
                };
                Ok((r, t))
            }
            SExpr::Binary(OBinOp::And, a, b) | SExpr::Binary(OBinOp::Or, a, b) => {
                let is_and = matches!(e, SExpr::Binary(OBinOp::And, ..));
                let (l, lt) = self.eval(a, at)?;
                let l = l.as_bool().ok_or_else(|| bad("operand type"))?;
                if l != is_and {
                    return Ok((Value::Bool(l), lt));
                }
                let (r, rt) = self.eval(b, at)?;
                let r = r.as_bool().ok_or_else(|| bad("operand type"))?;
                let decisive = r != is_and && !rt;
                Ok((Value::Bool(r), !decisive && (lt || rt)))
            }
            SExpr::Binary(op, a, b) => {
                let (l, lt) = self.eval(a, at)?;
                let (r, rt) = self.eval(b, at)?;
                Ok((self.binary(*op, l, r, at)?, lt || rt))
            }
            SExpr::Call(h, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval(a, at))
                    .collect::<Result<Vec<Tv>, _>>()?;
                self.call(*h, vals, at)
            }
        }
    }

    fn binary(
        &self,
        op: OBinOp,
        l: Value,
        r: Value,
        at: &dyn Fn() -> String,
    ) -> Result<Value, InterpError> {
        use OBinOp::*;
        let bad = || self.internal(&at(), &format!("operand types for {op:?}"));
        Ok(match (l, r) {
            (Value::Int { v: a, ty }, Value::Int { v: b, ty: ty2 }) if ty == ty2 => match op {
                Add => Value::int(ty.wrap(a + b), ty),
                Sub => Value::int(ty.wrap(a - b), ty),
                Mul => Value::int(ty.wrap(a * b), ty),
                IntDiv => match int_div(&a, &b) {
                    Some(q) => Value::int(ty.wrap(q), ty),
                    None => return Err(self.div_zero(at)),
                },
                Lt => Value::Bool(a < b),
                Le => Value::Bool(a <= b),
                Gt => Value::Bool(a > b),
                Ge => Value::Bool(a >= b),
                Ne => Value::Bool(a != b),
                Div | And | Or => return Err(bad()),
            },
            (Value::Float { v: a, prec }, Value::Float { v: b, prec: p2 }) if prec == p2 => {
                let f = |x: f64| Value::Float {
                    v: prec.round(x),
                    prec,
                };
                match op {
                    Add => f(a + b),
                    Sub => f(a - b),
                    Mul => f(a * b),
                    Div if b == 0.0 => return Err(self.div_zero(at)),
                    Div => f(a / b),
                    Lt => Value::Bool(a < b),
                    Le => Value::Bool(a <= b),
                    Gt => Value::Bool(a > b),
                    Ge => Value::Bool(a >= b),
                    Ne => Value::Bool(a != b),
                    IntDiv | And | Or => return Err(bad()),
                }
            }
            (Value::Bool(a), Value::Bool(b)) if op == Ne => Value::Bool(a != b),
            _ => return Err(bad()),
        })
    }

    fn div_zero(&self, at: &dyn Fn() -> String) -> InterpError {
        InterpError::DivisionByZero {
            step: self.step,
            at: at(),
        }
    }

    fn call(
        &self,
        h: Helper,
        mut args: Vec<Tv>,
        at: &dyn Fn() -> String,
    ) -> Result<Tv, InterpError> {
        let bad = || self.internal(&at(), &format!("arguments of {h:?}"));
        let cond = |v: &Value| v.as_bool().ok_or_else(bad);
        match h {
            Helper::If | Helper::Arrow => {
                let (c, ct) = args.remove(0);
                let (b, bt) = args.pop().ok_or_else(bad)?;
                let (a, a_t) = args.pop().ok_or_else(bad)?;
                Ok(if cond(&c)? {
                    (a, ct || a_t)
                } else {
                    (b, ct || bt)
                })
            }
            Helper::Implies => {
                let (a, a_t) = &args[0];
                let (b, bt) = &args[1];
                let (a, b) = (cond(a)?, cond(b)?);
                let taint = if !a && !a_t || b && !bt {
                    false
                } else {
                    *a_t || *bt
                };
                Ok((Value::Bool(!a || b), taint))
            }
            Helper::Mod => match (&args[0], &args[1]) {
                ((Value::Int { v: a, ty }, at_), (Value::Int { v: b, .. }, bt)) => {
                    match int_mod(a, b) {
                        Some(m) => Ok((Value::int(ty.wrap(m), *ty), *at_ || *bt)),
                        None => Err(self.div_zero(at)),
                    }
                }
                _ => Err(bad()),
            },
            Helper::IsEqual => {
                let ((a, a_t), (b, bt)) = (&args[0], &args[1]);
                Ok((Value::Bool(a.is_equal(b)), *a_t || *bt))
            }
        }
    }
}

/// Verdicts up to the first error, and the error if one occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub verdicts: Vec<StepVerdict>,
    pub error: Option<InterpError>,
}

pub fn run(p: &ObserverProgram, trace: &Trace) -> Result<Vec<StepVerdict>, InterpError> {
    let out = run_outcome(p, trace);
    match out.error {
        Some(e) => Err(e),
        None => Ok(out.verdicts),
    }
}

pub fn run_outcome(p: &ObserverProgram, trace: &Trace) -> RunOutcome {
    let mut it = match Interpreter::new(p) {
        Ok(it) => it,
        Err(e) => {
            return RunOutcome {
                verdicts: vec![],
                error: Some(InterpError::Internal {
                    step: 0,
                    at: "program".into(),
                    message: e.0,
                }),
            }
        }
    };
    let mut verdicts = Vec::with_capacity(trace.len());
    for s in &trace.steps {
        match it.step(s) {
            Ok(v) => verdicts.push(v),
            Err(e) => {
                return RunOutcome {
                    verdicts,
                    error: Some(e),
                }
            }
        }
    }
    RunOutcome {
        verdicts,
        error: None,
    }
}
