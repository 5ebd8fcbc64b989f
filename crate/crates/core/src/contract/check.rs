//! Name resolution and type checking.

use std::collections::HashSet;

use super::{
    BinOp, Contract, ErrorKind, Expr, ExprKind, FrontendError, Lint, NodeDecl, SemType, UnOp,
};

type CResult<T> = Result<T, FrontendError>;

enum Scope<'a> {
    Component(&'a Contract),
    Node(&'a [(String, SemType)]),
}

pub(crate) fn check(c: &mut Contract) -> CResult<()> {
    check_names(c)?;

    // Expressions are checked against a snapshot so that nodes and eqs can be
    // looked up while their bodies are rewritten in place.
    let snapshot = c.clone();
    for node in &mut c.nodes {
        let params = node.params.clone();
        let t = type_of(&mut node.body, &Scope::Node(&params), &snapshot)?;
        expect_type(&node.body, &t, &node.result, "node body")?;
    }
    for eq in &mut c.eqs {
        let t = type_of(&mut eq.expr, &Scope::Component(&snapshot), &snapshot)?;
        expect_type(&eq.expr, &t, &eq.ty, &format!("equation `{}`", eq.name))?;
    }
    for p in c.assumes.iter_mut().chain(c.guarantees.iter_mut()) {
        let t = type_of(&mut p.expr, &Scope::Component(&snapshot), &snapshot)?;
        expect_type(
            &p.expr,
            &t,
            &SemType::Bool,
            &format!("property \"{}\"", p.label),
        )?;
    }
    Ok(())
}

fn check_names(c: &Contract) -> CResult<()> {
    let mut seen: HashSet<&str> = HashSet::new();
    for d in c.inputs.iter().chain(c.outputs.iter()) {
        if !seen.insert(&d.name) {
            return Err(dup(d.span, &d.name));
        }
    }
    for n in &c.nodes {
        if !seen.insert(&n.name) {
            return Err(dup(n.span, &n.name));
        }
        let mut params = HashSet::new();
        for (p, _) in &n.params {
            if !params.insert(p.as_str()) {
                return Err(dup(n.span, p));
            }
        }
    }
    let mut eqs = HashSet::new();
    for e in &c.eqs {
        if !eqs.insert(e.name.as_str()) {
            return Err(dup(e.span, &e.name));
        }
        // An equation may share an output's name: it then defines that output.
        match c.output(&e.name) {
            Some(o) if o.ty == e.ty => continue,
            Some(o) => {
                return Err(FrontendError::new(
                    ErrorKind::TypeMismatch,
                    e.span,
                    format!(
                        "equation `{}` defines output of type {} with type {}",
                        e.name, o.ty, e.ty
                    ),
                ))
            }
            None => {}
        }
        if seen.contains(e.name.as_str()) {
            return Err(dup(e.span, &e.name));
        }
    }
    for group in [&c.assumes, &c.guarantees] {
        let mut labels = HashSet::new();
        for p in group {
            if !labels.insert(p.label.as_str()) {
                return Err(FrontendError::new(
                    ErrorKind::Duplicate,
                    p.span,
                    format!("label \"{}\" used twice", p.label),
                ));
            }
        }
    }
    Ok(())
}

fn dup(span: super::Span, name: &str) -> FrontendError {
    FrontendError::new(
        ErrorKind::Duplicate,
        span,
        format!("`{name}` declared more than once"),
    )
}

fn expect_type(e: &Expr, found: &SemType, expected: &SemType, what: &str) -> CResult<()> {
    if found == expected {
        Ok(())
    } else {
        Err(FrontendError::new(
            ErrorKind::TypeMismatch,
            e.span,
            format!("{what} has type {found}, expected {expected}"),
        ))
    }
}

fn mismatch(e: &Expr, msg: String) -> FrontendError {
    FrontendError::new(ErrorKind::TypeMismatch, e.span, msg)
}

fn type_of(e: &mut Expr, scope: &Scope, c: &Contract) -> CResult<SemType> {
    let span = e.span;
    let t = match &mut e.kind {
        ExprKind::Bool(_) => SemType::Bool,
        ExprKind::Int(_) => SemType::Int,
        ExprKind::Real(_) => SemType::Real,
        ExprKind::Ident(name) => {
            let found = match scope {
                Scope::Component(c) => c.var_type(name).cloned(),
                Scope::Node(params) => params
                    .iter()
                    .find(|(p, _)| p == name)
                    .map(|(_, t)| t.clone()),
            };
            found.ok_or_else(|| {
                FrontendError::new(
                    ErrorKind::Unresolved,
                    span,
                    format!("unresolved identifier `{name}`"),
                )
            })?
        }
        ExprKind::Select(inner, field) => {
            let it = type_of(inner, scope, c)?;
            match &it {
                SemType::Record(r) => r.field(field).cloned().ok_or_else(|| {
                    FrontendError::new(
                        ErrorKind::Unresolved,
                        span,
                        format!("record `{}` has no field `{field}`", r.name),
                    )
                })?,
                other => {
                    return Err(mismatch(
                        inner,
                        format!("cannot select `{field}` from {other}"),
                    ))
                }
            }
        }
        ExprKind::Unary(op, inner) => {
            let it = type_of(inner, scope, c)?;
            match op {
                UnOp::Neg if it.is_numeric() => it,
                UnOp::Not if it == SemType::Bool => it,
                UnOp::Neg => return Err(mismatch(inner, format!("unary `-` applied to {it}"))),
                UnOp::Not => return Err(mismatch(inner, format!("`not` applied to {it}"))),
            }
        }
        ExprKind::Binary(op, a, b) => {
            let op = *op;
            let ta = type_of(a, scope, c)?;
            let tb = type_of(b, scope, c)?;
            if ta != tb {
                return Err(mismatch(
                    b,
                    format!("operands of `{}` have types {ta} and {tb}", op.symbol()),
                ));
            }
            let ok = match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul => ta.is_numeric(),
                BinOp::Div => ta == SemType::Real,
                BinOp::IntDiv | BinOp::Mod => ta == SemType::Int,
                BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => ta.is_numeric(),
                BinOp::Eq | BinOp::Ne => true,
                BinOp::And | BinOp::Or | BinOp::Implies => ta == SemType::Bool,
            };
            if !ok {
                return Err(mismatch(
                    a,
                    format!("operator `{}` is not defined on {ta}", op.symbol()),
                ));
            }
            if op.is_comparison() {
                SemType::Bool
            } else {
                ta
            }
        }
        ExprKind::Pre(inner) => type_of(inner, scope, c)?,
        ExprKind::Arrow(a, b) => {
            let ta = type_of(a, scope, c)?;
            let tb = type_of(b, scope, c)?;
            if ta != tb {
                return Err(mismatch(
                    b,
                    format!("operands of `->` have types {ta} and {tb}"),
                ));
            }
            ta
        }
        ExprKind::If(cond, a, b) => {
            let tc = type_of(cond, scope, c)?;
            expect_type(cond, &tc, &SemType::Bool, "if condition")?;
            let ta = type_of(a, scope, c)?;
            let tb = type_of(b, scope, c)?;
            if ta != tb {
                return Err(mismatch(b, format!("if branches have types {ta} and {tb}")));
            }
            ta
        }
        ExprKind::Call(name, args) => {
            let node: &NodeDecl = c.node(name).ok_or_else(|| {
                FrontendError::new(
                    ErrorKind::Unresolved,
                    span,
                    format!("unknown node `{name}`"),
                )
            })?;
            if node.params.len() != args.len() {
                return Err(FrontendError::new(
                    ErrorKind::TypeMismatch,
                    span,
                    format!(
                        "node `{name}` takes {} arguments, {} given",
                        node.params.len(),
                        args.len()
                    ),
                ));
            }
            for (arg, (pname, pty)) in args.iter_mut().zip(&node.params) {
                let t = type_of(arg, scope, c)?;
                expect_type(arg, &t, pty, &format!("argument `{pname}` of `{name}`"))?;
            }
            node.result.clone()
        }
    };
    e.ty = Some(t.clone());
    Ok(t)
}

/// Scoping lints: assumptions should constrain inputs only.
pub fn lints(c: &Contract) -> Vec<Lint> {
    let mut out = Vec::new();
    for a in &c.assumes {
        for id in a.expr.identifiers() {
            if c.output(id).is_some() {
                out.push(Lint {
                    message: format!("assumption \"{}\" refers to output `{id}`", a.label),
                    span: a.span,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::contract::{parse, ErrorKind, ExprKind, SemType};

    fn err_kind(src: &str) -> ErrorKind {
        parse(src).unwrap_err().kind
    }

    #[test]
    fn arithmetic_requires_matching_numeric_types() {
        assert_eq!(
            err_kind("component C { input X : int; input R : real; eq Y : int = X + R; }"),
            ErrorKind::TypeMismatch
        );
        assert_eq!(
            err_kind("component C { input X : int; eq Y : int = X / 2; }"),
            ErrorKind::TypeMismatch
        );
        assert_eq!(
            err_kind("component C { input R : real; eq Y : real = R div 2.0; }"),
            ErrorKind::TypeMismatch
        );
        assert_eq!(
            err_kind("component C { input B : bool; eq Y : bool = B < B; }"),
            ErrorKind::TypeMismatch
        );
    }

    #[test]
    fn record_equality_is_allowed() {
        let c = parse(
            "component C { record R { A : bool; } input S : R; input T : R;
             guarantee \"g\" : S = T; }",
        )
        .unwrap();
        assert_eq!(c.guarantees[0].expr.ty, Some(SemType::Bool));
    }

    #[test]
    fn every_node_gets_a_type() {
        let c = parse(
            "component C { input X : int; node inc(a : int) : int = a + 1;
             eq Y : int = 0 -> pre(inc(X)) * 2; }",
        )
        .unwrap();
        c.eqs[0]
            .expr
            .walk(&mut |e| assert!(e.ty.is_some(), "{:?}", e.kind));
        assert!(matches!(c.eqs[0].expr.kind, ExprKind::Arrow(..)));
    }

    #[test]
    fn unresolved_and_duplicates() {
        assert_eq!(
            err_kind("component C { eq Y : int = Z; }"),
            ErrorKind::Unresolved
        );
        assert_eq!(
            err_kind("component C { input X : int; input X : bool; }"),
            ErrorKind::Duplicate
        );
        assert_eq!(
            err_kind("component C { input X : int; eq X : int = 1; }"),
            ErrorKind::Duplicate
        );
        assert_eq!(
            err_kind("component C { guarantee \"a\" : true; guarantee \"a\" : false; }"),
            ErrorKind::Duplicate
        );
        assert_eq!(
            err_kind("component C { node f(a : int) : int = a + X; input X : int; }"),
            ErrorKind::Unresolved
        );
        assert_eq!(
            err_kind("component C { node f(a : int) : int = a; eq Y : int = f(1, 2); }"),
            ErrorKind::TypeMismatch
        );
    }

    #[test]
    fn equation_may_define_output_of_same_type() {
        let c =
            parse("component M { input I : int; output O : int; eq O : int = I + 1; }").unwrap();
        assert_eq!(c.defined_outputs(), vec!["O"]);
        assert_eq!(
            err_kind("component M { output O : int; eq O : bool = true; }"),
            ErrorKind::TypeMismatch
        );
    }

    #[test]
    fn assumption_on_output_is_only_a_lint() {
        let c = parse("component C { output O : int; assume \"a\" : O > 0; }").unwrap();
        let lints = super::lints(&c);
        assert_eq!(lints.len(), 1);
        assert!(lints[0].message.contains("`O`"));
    }
}
