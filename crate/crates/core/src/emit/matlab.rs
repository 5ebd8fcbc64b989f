//! MATLAB-function text in the shape of a Simulink observer block.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::observer::{Helper, OBinOp, OExpr, OUnOp, ObserverProgram, Stmt};
use crate::types::{IntType, LoweredType};
use crate::value::{format_float, Value};

const MAX_IDENT: usize = 63;

const KEYWORDS: [&str; 20] = [
    "break",
    "case",
    "catch",
    "classdef",
    "continue",
    "else",
    "elseif",
    "end",
    "for",
    "function",
    "global",
    "if",
    "otherwise",
    "parfor",
    "persistent",
    "return",
    "spmd",
    "switch",
    "try",
    "while",
];

const BUILTINS: [&str; 21] = [
    "sldv",
    "isempty",
    "isequal",
    "mod",
    "idivide",
    "subsref",
    "not",
    "true",
    "false",
    "struct",
    "int8",
    "int16",
    "int32",
    "uint8",
    "uint16",
    "uint32",
    "single",
    "double",
    "ifFunction",
    "impliesFunction",
    "arrowFunction",
];

pub fn is_valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s.len() <= MAX_IDENT
}

fn reserved(s: &str) -> bool {
    KEYWORDS.contains(&s) || BUILTINS.contains(&s)
}

/// Maps source names to distinct valid MATLAB identifiers. Names that are
/// already valid keep their spelling; the rest are rewritten and suffixed
/// until unique.
pub fn sanitize_identifiers<'a>(
    names: impl IntoIterator<Item = &'a str>,
) -> HashMap<String, String> {
    let names: Vec<&str> = names.into_iter().collect();
    let mut used: HashSet<String> = HashSet::new();
    let mut map = HashMap::new();
    for n in &names {
        if is_valid_identifier(n) && !reserved(n) && !map.contains_key(*n) {
            used.insert(n.to_string());
            map.insert(n.to_string(), n.to_string());
        }
    }
    for n in &names {
        if map.contains_key(*n) {
            continue;
        }
        let mut base: String = n
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
            .collect::<String>()
            .trim_start_matches(|c: char| !c.is_ascii_alphabetic())
            .to_string();
        if base.is_empty() || reserved(&base) {
            base = format!("v_{base}");
        }
        base.truncate(MAX_IDENT - 6);
        let mut cand = base.clone();
        let mut k = 1;
        while used.contains(&cand) || reserved(&cand) {
            cand = format!("{base}_{k}");
            k += 1;
        }
        used.insert(cand.clone());
        map.insert(n.to_string(), cand);
    }
    map
}

fn first_int(t: &LoweredType) -> Option<IntType> {
    match t {
        LoweredType::Int(i) => Some(*i),
        LoweredType::Struct(s) => s.fields.iter().find_map(|(_, f)| first_int(f)),
        _ => None,
    }
}

/// The single integer type of a compilation, if any integer occurs.
fn program_int_type(p: &ObserverProgram) -> Option<IntType> {
    let declared = p
        .params
        .iter()
        .chain(&p.results)
        .map(|x| &x.ty)
        .chain(p.persistents.iter().map(|x| &x.ty))
        .chain(p.step.iter().filter_map(|s| match s {
            Stmt::Assign { ty, .. } => Some(ty),
            _ => None,
        }));
    for t in declared {
        if let Some(i) = first_int(t) {
            return Some(i);
        }
    }
    let mut found = None;
    for e in p.exprs() {
        e.walk(&mut |x| {
            if let OExpr::Const(v) = x {
                found = found.or_else(|| first_int(&v.lowered_type()));
            }
        });
    }
    found
}

fn helper_name(h: Helper) -> &'static str {
    match h {
        Helper::If => "ifFunction",
        Helper::Implies => "impliesFunction",
        Helper::Arrow => "arrowFunction",
        Helper::Mod => "mod",
        Helper::IsEqual => "isequal",
    }
}

fn cast_const(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Int { v, ty } => format!("{}({v})", ty.name()),
        Value::Float { v, prec } => format!("{}({})", prec.name(), format_float(*v)),
        Value::Struct { fields, .. } => {
            let parts: Vec<String> = fields
                .iter()
                .map(|(n, v)| format!("'{n}', {}", cast_const(v)))
                .collect();
            format!("struct({})", parts.join(", "))
        }
    }
}

fn bare_const(v: &Value) -> String {
    match v {
        Value::Int { v, .. } => v.to_string(),
        Value::Float { v, .. } => format_float(*v),
        other => cast_const(other),
    }
}

struct Printer<'a> {
    names: &'a HashMap<String, String>,
    int_type: String,
}

impl Printer<'_> {
    fn name(&self, n: &str) -> String {
        self.names.get(n).cloned().unwrap_or_else(|| n.to_string())
    }

    fn expr(&self, e: &OExpr) -> String {
        match e {
            OExpr::Const(v) => cast_const(v),
            OExpr::Var(n) => self.name(n),
            OExpr::Field(x, f) => match **x {
                OExpr::Var(_) | OExpr::Field(..) => format!("{}.{f}", self.expr(x)),
                _ => format!(
                    "subsref({}, struct('type', '.', 'subs', '{f}'))",
                    self.expr(x)
                ),
            },
            OExpr::Unary(OUnOp::Not, x) => format!("not({})", self.expr(x)),
            OExpr::Unary(OUnOp::Neg, x) => match **x {
                OExpr::Binary(..) => format!("-({})", self.expr(x)),
                _ => format!("-{}", self.expr(x)),
            },
            OExpr::Binary(op, a, b) => self.binary(*op, a, b),
            OExpr::Call(h, args) => {
                let args: Vec<String> = args.iter().map(|a| self.expr(a)).collect();
                format!("{}({})", helper_name(*h), args.join(", "))
            }
        }
    }

    /// Operand of a binary operator. A constant next to a non-constant
    /// sibling takes its type from the sibling and is written bare.
    fn operand(&self, x: &OExpr, sibling: &OExpr) -> String {
        match x {
            OExpr::Const(v) if !matches!(sibling, OExpr::Const(_)) => bare_const(v),
            OExpr::Binary(OBinOp::IntDiv, ..) => self.expr(x),
            OExpr::Binary(..) => format!("({})", self.expr(x)),
            OExpr::Unary(OUnOp::Neg, _) => format!("({})", self.expr(x)),
            _ => self.expr(x),
        }
    }

    fn binary(&self, op: OBinOp, a: &OExpr, b: &OExpr) -> String {
        if op == OBinOp::IntDiv {
            let wrap = |x: &OExpr| match x {
                OExpr::Const(v) => cast_const(v),
                _ => format!("{}({})", self.int_type, self.expr(x)),
            };
            // Integer `/` rounds to nearest; `idivide` truncates.
            return format!("idivide({}, {})", wrap(a), wrap(b));
        }
        let sym = match op {
            OBinOp::Add => "+",
            OBinOp::Sub => "-",
            OBinOp::Mul => "*",
            OBinOp::Div => "/",
            OBinOp::IntDiv => unreachable!(),
            OBinOp::Lt => "<",
            OBinOp::Le => "<=",
            OBinOp::Gt => ">",
            OBinOp::Ge => ">=",
            OBinOp::Ne => "~=",
            OBinOp::And => "&&",
            OBinOp::Or => "||",
        };
        format!("{} {sym} {}", self.operand(a, b), self.operand(b, a))
    }
}

const HELPER_BODIES: [(Helper, &str); 3] = [
    (
        Helper::If,
        "function r = ifFunction(c, a, b)\n    if c\n        r = a;\n    else\n        r = b;\n    end\nend\n",
    ),
    (
        Helper::Implies,
        "function r = impliesFunction(a, b)\n    r = ~a || b;\nend\n",
    ),
    (
        Helper::Arrow,
        "function r = arrowFunction(first_time, a, b)\n    if first_time\n        r = a;\n    else\n        r = b;\n    end\nend\n",
    ),
];

pub fn emit_matlab(p: &ObserverProgram) -> String {
    let mut all: Vec<&str> = Vec::new();
    all.extend(p.params.iter().map(|x| x.name.as_str()));
    all.extend(p.results.iter().map(|x| x.name.as_str()));
    all.extend(p.persistents.iter().map(|x| x.name.as_str()));
    for s in &p.step {
        if let Stmt::Assign { target, .. } = s {
            all.push(target);
        }
    }
    let fn_key = format!("\u{0}{}", p.name);
    all.push(&fn_key);
    let mut names = sanitize_identifiers(all.iter().copied());
    let fn_name = names.remove(&fn_key).unwrap_or_default();
    let pr = Printer {
        names: &names,
        int_type: program_int_type(p).unwrap_or(IntType::INT32).name(),
    };

    let mut out = String::new();
    let args: Vec<String> = p.params.iter().map(|x| pr.name(&x.name)).collect();
    if p.results.is_empty() {
        let _ = writeln!(out, "function {fn_name}({})", args.join(", "));
    } else {
        let res: Vec<String> = p.results.iter().map(|x| pr.name(&x.name)).collect();
        let _ = writeln!(
            out,
            "function [{}] = {fn_name}({})",
            res.join(", "),
            args.join(", ")
        );
    }
    for v in &p.persistents {
        let _ = writeln!(out, "    persistent {};", pr.name(&v.name));
    }
    for v in &p.persistents {
        let n = pr.name(&v.name);
        let _ = writeln!(
            out,
            "    if isempty({n})\n        {n} = {};\n    end",
            cast_const(&v.init)
        );
    }
    for s in &p.step {
        let _ = match s {
            Stmt::Assign { target, expr, .. } => {
                writeln!(out, "    {} = {};", pr.name(target), pr.expr(expr))
            }
            Stmt::Assume { label, expr } => writeln!(
                out,
                "    % {}\n    sldv.assume({});",
                label.replace('\n', " "),
                pr.expr(expr)
            ),
            Stmt::Prove { label, expr } => writeln!(
                out,
                "    % {}\n    sldv.prove({});",
                label.replace('\n', " "),
                pr.expr(expr)
            ),
        };
    }
    for u in &p.updates {
        let _ = writeln!(out, "    {} = {};", pr.name(&u.target), pr.expr(&u.expr));
    }
    if let Some(ft) = p.first_time() {
        let _ = writeln!(out, "    {} = false;", pr.name(&ft.name));
    }
    out.push_str("end\n");
    let used = p.helpers();
    for (h, body) in HELPER_BODIES {
        if used.contains(&h) {
            out.push('\n');
            out.push_str(body);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_names_are_kept_and_others_rewritten_injectively() {
        let m = sanitize_identifiers(["Input", "__t1", "t1", "end", "_x", "x", "9a"]);
        assert_eq!(m["Input"], "Input");
        assert_eq!(m["t1"], "t1");
        assert_eq!(m["x"], "x");
        let values: HashSet<&String> = m.values().collect();
        assert_eq!(values.len(), m.len());
        for v in m.values() {
            assert!(is_valid_identifier(v) && !reserved(v), "{v}");
        }
        assert_eq!(m["__t1"], "t1_1");
        assert_eq!(m["end"], "v_end");
    }

    #[test]
    fn long_names_are_truncated() {
        let long = "a".repeat(80);
        let m = sanitize_identifiers([long.as_str()]);
        assert!(is_valid_identifier(&m[&long]));
    }
}
