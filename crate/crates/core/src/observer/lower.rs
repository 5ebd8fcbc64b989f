use std::collections::{HashMap, HashSet};

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::contract::{BinOp, Contract, SemType, UnOp};
use crate::ir::{DataflowIr, IrExpr, IrKind, Local};
use crate::types::{ConfigError, LoweredType, TypeConfig};
use crate::value::Value;

use super::{
    Helper, OBinOp, OExpr, OUnOp, ObserverInterface, ObserverProgram, Param, Persistent,
    PersistentKind, Role, Stmt, Update,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("constant {value} does not fit in {ty}")]
    ConstantOverflow { value: String, ty: String },
    #[error("output `{0}` is defined by an equation; compile it as a design model instead")]
    OutputDefinedByEq(String),
    #[error("a design model may not contain assume or guarantee statements")]
    ModelHasProperties,
    #[error("design model does not define output `{0}`")]
    UndefinedOutput(String),
}

fn lower_signals(
    sigs: impl Iterator<Item = (String, SemType)>,
    role: Role,
    cfg: &TypeConfig,
) -> Result<Vec<Param>, LowerError> {
    sigs.map(|(name, t)| {
        Ok(Param {
            name,
            ty: cfg.lower(&t)?,
            role,
        })
    })
    .collect()
}

/// Observer parameters: the component's inputs followed by its outputs,
/// record types kept whole.
pub fn interface_of(c: &Contract, cfg: &TypeConfig) -> Result<ObserverInterface, LowerError> {
    let mut params = lower_signals(
        c.inputs.iter().map(|d| (d.name.clone(), d.ty.clone())),
        Role::Input,
        cfg,
    )?;
    params.extend(lower_signals(
        c.outputs.iter().map(|d| (d.name.clone(), d.ty.clone())),
        Role::Output,
        cfg,
    )?);
    Ok(ObserverInterface { params })
}

struct Names {
    used: HashSet<String>,
}

impl Names {
    fn alloc(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut n = 1;
        while self.used.contains(&name) {
            name = format!("{base}_{n}");
            n += 1;
        }
        self.used.insert(name.clone());
        name
    }
}

struct Lowerer<'a> {
    cfg: &'a TypeConfig,
    first_time: String,
    pre_names: HashMap<usize, String>,
}

impl Lowerer<'_> {
    fn expr(&self, e: &IrExpr) -> Result<OExpr, LowerError> {
        let b = |x: &IrExpr| self.expr(x).map(Box::new);
        Ok(match &e.kind {
            IrKind::Bool { value } => OExpr::Const(Value::Bool(*value)),
            IrKind::Int { value } => OExpr::Const(self.int_const(value)?),
            IrKind::Real { value } => OExpr::Const(self.real_const(value)?),
            IrKind::Var { name } => OExpr::Var(name.clone()),
            IrKind::PreRef { id } => OExpr::Var(self.pre_names[id].clone()),
            IrKind::Select { operand, field } => OExpr::Field(b(operand)?, field.clone()),
            IrKind::Unary { operator, operand } => match (operator, &operand.kind) {
                (UnOp::Neg, IrKind::Int { value }) => OExpr::Const(self.int_const(&-value)?),
                (UnOp::Neg, IrKind::Real { value }) => OExpr::Const(self.real_const(&-value)?),
                (UnOp::Neg, _) => OExpr::Unary(OUnOp::Neg, b(operand)?),
                (UnOp::Not, _) => OExpr::Unary(OUnOp::Not, b(operand)?),
            },
            IrKind::Binary { operator, lhs, rhs } => {
                let (l, r) = (self.expr(lhs)?, self.expr(rhs)?);
                let bin = |op| OExpr::Binary(op, Box::new(l.clone()), Box::new(r.clone()));
                match operator {
                    BinOp::Add => bin(OBinOp::Add),
                    BinOp::Sub => bin(OBinOp::Sub),
                    BinOp::Mul => bin(OBinOp::Mul),
                    BinOp::Div => bin(OBinOp::Div),
                    BinOp::IntDiv => bin(OBinOp::IntDiv),
                    BinOp::Lt => bin(OBinOp::Lt),
                    BinOp::Le => bin(OBinOp::Le),
                    BinOp::Gt => bin(OBinOp::Gt),
                    BinOp::Ge => bin(OBinOp::Ge),
                    BinOp::And => bin(OBinOp::And),
                    BinOp::Or => bin(OBinOp::Or),
                    BinOp::Mod => OExpr::Call(Helper::Mod, vec![l, r]),
                    BinOp::Implies => OExpr::Call(Helper::Implies, vec![l, r]),
                    BinOp::Eq => OExpr::Call(Helper::IsEqual, vec![l, r]),
                    BinOp::Ne if matches!(lhs.ty, SemType::Record(_)) => OExpr::Unary(
                        OUnOp::Not,
                        Box::new(OExpr::Call(Helper::IsEqual, vec![l, r])),
                    ),
                    BinOp::Ne => bin(OBinOp::Ne),
                }
            }
            IrKind::Arrow { init, next } => OExpr::Call(
                Helper::Arrow,
                vec![
                    OExpr::Var(self.first_time.clone()),
                    self.expr(init)?,
                    self.expr(next)?,
                ],
            ),
            IrKind::If {
                cond,
                then,
                otherwise,
            } => OExpr::Call(
                Helper::If,
                vec![self.expr(cond)?, self.expr(then)?, self.expr(otherwise)?],
            ),
        })
    }

    fn int_const(&self, v: &num_bigint::BigInt) -> Result<Value, LowerError> {
        let ty = self.cfg.int_type();
        match v.to_i64() {
            Some(x) if ty.contains(x) => Ok(Value::int(x, ty)),
            _ => Err(LowerError::ConstantOverflow {
                value: v.to_string(),
                ty: ty.name(),
            }),
        }
    }

    fn real_const(&self, v: &num_rational::BigRational) -> Result<Value, LowerError> {
        let LoweredType::Float(prec) = self.cfg.lower(&SemType::Real)? else {
            unreachable!("reals lower to floats")
        };
        let x = prec.round(v.to_f64().unwrap_or(f64::INFINITY));
        if !x.is_finite() {
            return Err(LowerError::ConstantOverflow {
                value: crate::contract::format_rational(v),
                ty: prec.name().into(),
            });
        }
        Ok(Value::float(x, prec))
    }
}

fn persistents(
    ir: &DataflowIr,
    cfg: &TypeConfig,
    names: &mut Names,
) -> Result<(Vec<Persistent>, HashMap<usize, String>), LowerError> {
    let mut out = vec![Persistent {
        name: names.alloc("first_time"),
        ty: LoweredType::Bool,
        init: Value::Bool(true),
        kind: PersistentKind::FirstTime,
    }];
    let mut pre_names = HashMap::new();
    for entry in &ir.pre_table {
        let base = match &entry.operand.kind {
            IrKind::Var { name } => format!("pre_{}", name.trim_start_matches('_')),
            _ => format!("pre_{}", entry.id + 1),
        };
        let name = names.alloc(&base);
        let ty = cfg.lower(&entry.operand.ty)?;
        out.push(Persistent {
            name: name.clone(),
            init: Value::default_for(&ty),
            ty,
            kind: PersistentKind::Pre,
        });
        pre_names.insert(entry.id, name);
    }
    Ok((out, pre_names))
}

fn name_pool(ir: &DataflowIr) -> Names {
    let used = ir
        .inputs
        .iter()
        .chain(&ir.outputs)
        .map(|s| s.name.clone())
        .chain(ir.locals.iter().map(|l| l.name.clone()))
        .collect();
    Names { used }
}

/// Synthetic property locals referenced by nothing but their property are
/// emitted inline in the assume/prove call.
fn inlinable(ir: &DataflowIr) -> HashSet<&str> {
    let mut read: HashSet<&str> = HashSet::new();
    for l in &ir.locals {
        read.extend(l.expr.same_step_vars());
    }
    for p in &ir.pre_table {
        read.extend(p.operand.same_step_vars());
    }
    let mut props: HashMap<&str, usize> = HashMap::new();
    for p in ir.assumes.iter().chain(&ir.guarantees) {
        *props.entry(p.local.as_str()).or_default() += 1;
    }
    ir.locals
        .iter()
        .filter(|l| {
            l.is_synthetic()
                && !read.contains(l.name.as_str())
                && props.get(l.name.as_str()) == Some(&1)
        })
        .map(|l| l.name.as_str())
        .collect()
}

/// Lowers a contract's dataflow IR to an observer step program.
pub fn lower(ir: &DataflowIr, cfg: &TypeConfig) -> Result<ObserverProgram, LowerError> {
    if let Some(o) = ir.outputs.iter().find(|o| ir.local(&o.name).is_some()) {
        return Err(LowerError::OutputDefinedByEq(o.name.clone()));
    }
    let mut params = lower_signals(
        ir.inputs.iter().map(|s| (s.name.clone(), s.ty.clone())),
        Role::Input,
        cfg,
    )?;
    params.extend(lower_signals(
        ir.outputs.iter().map(|s| (s.name.clone(), s.ty.clone())),
        Role::Output,
        cfg,
    )?);
    let mut names = name_pool(ir);
    let (persistents, pre_names) = persistents(ir, cfg, &mut names)?;
    let lw = Lowerer {
        cfg,
        first_time: persistents[0].name.clone(),
        pre_names,
    };
    let inline = inlinable(ir);

    let mut step = Vec::new();
    for local in &ir.locals {
        let inlined = inline.contains(local.name.as_str());
        let body = lw.expr(&local.expr)?;
        if !inlined {
            step.push(assign(local, body.clone(), cfg)?);
        }
        let rhs = if inlined {
            body
        } else {
            OExpr::Var(local.name.clone())
        };
        for a in ir.assumes.iter().filter(|p| p.local == local.name) {
            step.push(Stmt::Assume {
                label: a.label.clone(),
                expr: rhs.clone(),
            });
        }
        for g in ir.guarantees.iter().filter(|p| p.local == local.name) {
            step.push(Stmt::Prove {
                label: g.label.clone(),
                expr: rhs.clone(),
            });
        }
    }

    let updates = updates(ir, &lw)?;
    Ok(ObserverProgram {
        name: ir.name.clone(),
        params,
        results: vec![],
        persistents,
        step,
        updates,
    })
}

fn assign(local: &Local, expr: OExpr, cfg: &TypeConfig) -> Result<Stmt, LowerError> {
    Ok(Stmt::Assign {
        target: local.name.clone(),
        ty: cfg.lower(&local.ty)?,
        expr,
    })
}

fn updates(ir: &DataflowIr, lw: &Lowerer) -> Result<Vec<Update>, LowerError> {
    ir.pre_table
        .iter()
        .map(|p| {
            Ok(Update {
                target: lw.pre_names[&p.id].clone(),
                expr: lw.expr(&p.operand)?,
            })
        })
        .collect()
}

/// Lowers a design-model contract (equations defining every output, no
/// properties) to a program that computes the outputs from the inputs.
pub fn lower_model(ir: &DataflowIr, cfg: &TypeConfig) -> Result<ObserverProgram, LowerError> {
    if !ir.assumes.is_empty() || !ir.guarantees.is_empty() {
        return Err(LowerError::ModelHasProperties);
    }
    if let Some(o) = ir.outputs.iter().find(|o| ir.local(&o.name).is_none()) {
        return Err(LowerError::UndefinedOutput(o.name.clone()));
    }
    let params = lower_signals(
        ir.inputs.iter().map(|s| (s.name.clone(), s.ty.clone())),
        Role::Input,
        cfg,
    )?;
    let results = lower_signals(
        ir.outputs.iter().map(|s| (s.name.clone(), s.ty.clone())),
        Role::Output,
        cfg,
    )?;
    let mut names = name_pool(ir);
    let (persistents, pre_names) = persistents(ir, cfg, &mut names)?;
    let lw = Lowerer {
        cfg,
        first_time: persistents[0].name.clone(),
        pre_names,
    };
    let step = ir
        .locals
        .iter()
        .map(|l| assign(l, lw.expr(&l.expr)?, cfg))
        .collect::<Result<_, _>>()?;
    let updates = updates(ir, &lw)?;
    Ok(ObserverProgram {
        name: ir.name.clone(),
        params,
        results,
        persistents,
        step,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse;
    use crate::ir::normalize;
    use crate::types::{FloatPrecision, IntType, IntWidth};

    fn compile(src: &str, cfg: &TypeConfig) -> ObserverProgram {
        let p = lower(&normalize(&parse(src).unwrap()).unwrap(), cfg).unwrap();
        p.validate().unwrap();
        p
    }

    #[test]
    fn counter_uses_arrow_helper_and_pre_variable() {
        let p = compile(
            "component C { eq x : int = 0 -> pre(x) + 1; }",
            &TypeConfig::default(),
        );
        let int32 = IntType::INT32;
        assert_eq!(p.persistents.len(), 2);
        assert_eq!(p.persistents[1].name, "pre_x");
        assert_eq!(
            p.step[0],
            Stmt::Assign {
                target: "x".into(),
                ty: LoweredType::Int(int32),
                expr: OExpr::Call(
                    Helper::Arrow,
                    vec![
                        OExpr::Var("first_time".into()),
                        OExpr::Const(Value::int(0, int32)),
                        OExpr::Binary(
                            OBinOp::Add,
                            Box::new(OExpr::Var("pre_x".into())),
                            Box::new(OExpr::Const(Value::int(1, int32))),
                        ),
                    ],
                ),
            }
        );
        assert_eq!(
            p.updates,
            vec![Update {
                target: "pre_x".into(),
                expr: OExpr::Var("x".into())
            }]
        );
    }

    #[test]
    fn shared_pre_gets_one_persistent() {
        let p = compile(
            r#"component C { input x : int;
               guarantee "a" : true -> pre(x) > 0;
               guarantee "b" : true -> pre(x) < 5; }"#,
            &TypeConfig::default(),
        );
        assert_eq!(p.persistents.len(), 2);
        assert_eq!(p.prove_labels(), ["a", "b"]);
    }

    #[test]
    fn constants_out_of_range_are_rejected() {
        let cfg = TypeConfig::new(8, true, FloatPrecision::Double);
        let c = parse("component C { input X : int; guarantee \"g\" : X < 200; }").unwrap();
        let err = lower(&normalize(&c).unwrap(), &cfg).unwrap_err();
        assert_eq!(
            err,
            LowerError::ConstantOverflow {
                value: "200".into(),
                ty: "int8".into()
            }
        );
        let ok = parse("component C { input X : int; guarantee \"g\" : X > -128; }").unwrap();
        assert!(lower(&normalize(&ok).unwrap(), &cfg).is_ok());
        let unsigned = TypeConfig::new(16, false, FloatPrecision::Double);
        assert!(lower(&normalize(&ok).unwrap(), &unsigned).is_err());
    }

    #[test]
    fn record_equality_lowers_to_isequal() {
        let p = compile(
            "component C { record R { a : bool; b : int; }
             input X : R; input Y : R;
             guarantee \"eq\" : X = Y; guarantee \"ne\" : X <> Y; }",
            &TypeConfig::default(),
        );
        let Stmt::Prove { expr, .. } = &p.step[1] else {
            panic!()
        };
        assert!(
            matches!(expr, OExpr::Unary(OUnOp::Not, inner) if matches!(**inner, OExpr::Call(Helper::IsEqual, _)))
        );
    }

    #[test]
    fn name_collisions_are_avoided() {
        let p = compile(
            "component C { input first_time : bool; input x : int; input pre_x : int;
             guarantee \"g\" : first_time -> pre(x) = pre_x; }",
            &TypeConfig::default(),
        );
        let names: Vec<&str> = p.persistents.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["first_time_1", "pre_x_1"]);
    }

    #[test]
    fn interface_lists_inputs_then_outputs() {
        let c = parse("component C { output B : int; input A : int; }").unwrap();
        let i = interface_of(&c, &TypeConfig::default()).unwrap();
        let names: Vec<(&str, Role)> = i.params.iter().map(|p| (p.name.as_str(), p.role)).collect();
        assert_eq!(names, [("A", Role::Input), ("B", Role::Output)]);
    }

    #[test]
    fn width_and_signedness_follow_config() {
        let cfg = TypeConfig {
            int_width: IntWidth::W16,
            int_signed: false,
            float_precision: None,
        };
        let p = compile(
            "component C { input X : int; guarantee \"g\" : X < 7; }",
            &cfg,
        );
        let Stmt::Prove {
            expr: OExpr::Binary(_, _, rhs),
            ..
        } = &p.step[0]
        else {
            panic!()
        };
        assert_eq!(
            **rhs,
            OExpr::Const(Value::int(
                7,
                IntType {
                    width: IntWidth::W16,
                    signed: false
                }
            ))
        );
        let c = parse("component C { input R : real; }").unwrap();
        assert!(matches!(
            lower(&normalize(&c).unwrap(), &cfg),
            Err(LowerError::Config(_))
        ));
    }

    #[test]
    fn model_programs_compute_outputs() {
        let c =
            parse("component M { input I : int; output O : int; eq O : int = I + 20; }").unwrap();
        let ir = normalize(&c).unwrap();
        assert_eq!(
            lower(&ir, &TypeConfig::default()).unwrap_err(),
            LowerError::OutputDefinedByEq("O".into())
        );
        let m = lower_model(&ir, &TypeConfig::default()).unwrap();
        m.validate().unwrap();
        assert!(m.is_model());
        assert_eq!(m.results[0].name, "O");
    }

    #[test]
    fn helper_locals_read_by_other_locals_are_assigned() {
        // The decoupled `s -> s` is read by the property local, not by a
        // property directly, so it must keep its own assignment.
        let p = compile(
            r#"component C { input b : bool; input s : int;
               guarantee "g" : s <> ((s -> s) -> (if b then pre(s) else pre(s))); }"#,
            &TypeConfig::default(),
        );
        assert!(p
            .step
            .iter()
            .any(|st| matches!(st, Stmt::Assign { target, .. } if target == "__t1")));
    }
}
