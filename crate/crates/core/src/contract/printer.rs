//! Pretty printer for contracts. Output re-parses to a structurally equal
//! contract.

use std::fmt::{self, Write};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{BinOp, Contract, Expr, ExprKind, UnOp};

const IF: u8 = 0;
const ARROW: u8 = 1;
const IMPLIES: u8 = 2;
const OR: u8 = 3;
const AND: u8 = 4;
const NOT: u8 = 5;
const CMP: u8 = 6;
const ADD: u8 = 7;
const MUL: u8 = 8;
const NEG: u8 = 9;
const PRE: u8 = 10;
const ATOM: u8 = 11;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::If(..) => IF,
        ExprKind::Arrow(..) => ARROW,
        ExprKind::Binary(op, ..) => match op {
            BinOp::Implies => IMPLIES,
            BinOp::Or => OR,
            BinOp::And => AND,
            BinOp::Add | BinOp::Sub => ADD,
            BinOp::Mul | BinOp::Div | BinOp::IntDiv | BinOp::Mod => MUL,
            _ => CMP,
        },
        ExprKind::Unary(UnOp::Not, _) => NOT,
        ExprKind::Unary(UnOp::Neg, _) => NEG,
        ExprKind::Int(i) if i.is_negative() => NEG,
        ExprKind::Real(r) if r.is_negative() => NEG,
        ExprKind::Pre(_) => PRE,
        _ => ATOM,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if level(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Formats an exact rational as a decimal literal when it terminates.
pub(crate) fn format_rational(r: &BigRational) -> String {
    let (numer, denom) = (r.numer(), r.denom());
    let mut d = denom.clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while d.is_even() && !d.is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("({}.0 / {}.0)", numer, denom);
    }
    let digits = twos.max(fives).max(1);
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = numer * &scale / denom;
    let neg = scaled.is_negative();
    let abs = scaled.abs().to_string();
    let padded = format!("{:0>width$}", abs, width = digits + 1);
    let (int_part, frac) = padded.split_at(padded.len() - digits);
    let frac = frac.trim_end_matches('0');
    let frac = if frac.is_empty() { "0" } else { frac };
    format!("{}{}.{}", if neg { "-" } else { "" }, int_part, frac)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Bool(b) => write!(f, "{b}"),
            ExprKind::Int(i) => write!(f, "{i}"),
            ExprKind::Real(r) => f.write_str(&format_rational(r)),
            ExprKind::Ident(n) => f.write_str(n),
            ExprKind::Select(e, field) => {
                child(f, e, ATOM)?;
                write!(f, ".{field}")
            }
            ExprKind::Unary(UnOp::Not, e) => {
                f.write_str("not ")?;
                child(f, e, NOT)
            }
            ExprKind::Unary(UnOp::Neg, e) => {
                f.write_str("-")?;
                child(f, e, PRE)
            }
            ExprKind::Binary(op, a, b) => {
                let (lmin, rmin) = match op {
                    BinOp::Implies => (OR, IMPLIES),
                    BinOp::Or => (OR, AND),
                    BinOp::And => (AND, NOT),
                    BinOp::Add | BinOp::Sub => (ADD, MUL),
                    BinOp::Mul | BinOp::Div | BinOp::IntDiv | BinOp::Mod => (MUL, NEG),
                    _ => (ADD, ADD),
                };
                child(f, a, lmin)?;
                write!(f, " {} ", op.symbol())?;
                child(f, b, rmin)
            }
            ExprKind::Pre(e) => write!(f, "pre({e})"),
            ExprKind::Arrow(a, b) => {
                child(f, a, IMPLIES)?;
                f.write_str(" -> ")?;
                child(f, b, ARROW)
            }
            ExprKind::If(c, a, b) => write!(f, "if {c} then {a} else {b}"),
            ExprKind::Call(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn quote(label: &str) -> String {
    let mut s = String::from("\"");
    for ch in label.chars() {
        if ch == '"' || ch == '\\' {
            s.push('\\');
        }
        s.push(ch);
    }
    s.push('"');
    s
}

impl fmt::Display for Contract {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "component {} {{", self.name)?;
        for r in &self.records {
            writeln!(f, "  record {} {{", r.ty.name)?;
            for (name, ty) in &r.ty.fields {
                writeln!(f, "    {name} : {ty};")?;
            }
            writeln!(f, "  }}")?;
        }
        for d in &self.inputs {
            writeln!(f, "  input {} : {};", d.name, d.ty)?;
        }
        for d in &self.outputs {
            writeln!(f, "  output {} : {};", d.name, d.ty)?;
        }
        for n in &self.nodes {
            let mut params = String::new();
            for (i, (p, t)) in n.params.iter().enumerate() {
                if i > 0 {
                    params.push_str(", ");
                }
                write!(params, "{p} : {t}")?;
            }
            writeln!(
                f,
                "  node {}({}) : {} = {};",
                n.name, params, n.result, n.body
            )?;
        }
        for e in &self.eqs {
            writeln!(f, "  eq {} : {} = {};", e.name, e.ty, e.expr)?;
        }
        for p in &self.assumes {
            writeln!(f, "  assume {} : {};", quote(&p.label), p.expr)?;
        }
        for p in &self.guarantees {
            writeln!(f, "  guarantee {} : {};", quote(&p.label), p.expr)?;
        }
        writeln!(f, "}}")
    }
}

/// S-expression rendering used by parser tests.
#[cfg(test)]
pub(crate) fn debug_tree(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Ident(n) => n.clone(),
        ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) => e.to_string(),
        ExprKind::Select(x, fld) => format!("(. {} {fld})", debug_tree(x)),
        ExprKind::Unary(UnOp::Neg, x) => format!("(neg {})", debug_tree(x)),
        ExprKind::Unary(UnOp::Not, x) => format!("(not {})", debug_tree(x)),
        ExprKind::Binary(op, a, b) => {
            format!("({} {} {})", op.symbol(), debug_tree(a), debug_tree(b))
        }
        ExprKind::Pre(x) => format!("(pre {})", debug_tree(x)),
        ExprKind::Arrow(a, b) => format!("(-> {} {})", debug_tree(a), debug_tree(b)),
        ExprKind::If(c, a, b) => {
            format!("(if {} {} {})", debug_tree(c), debug_tree(a), debug_tree(b))
        }
        ExprKind::Call(n, args) => {
            let args: Vec<_> = args.iter().map(debug_tree).collect();
            format!("({n} {})", args.join(" "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse;
    use proptest::prelude::*;

    #[test]
    fn rationals_print_as_decimals() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert_eq!(format_rational(&r(1, 10)), "0.1");
        assert_eq!(format_rational(&r(5, 2)), "2.5");
        assert_eq!(format_rational(&r(3, 1)), "3.0");
        assert_eq!(format_rational(&r(-1, 8)), "-0.125");
        assert_eq!(format_rational(&r(1, 3)), "(1.0 / 3.0)");
    }

    #[test]
    fn table_rows_print_back() {
        let src = r#"component Table {
  record SyncBus {
    Active : bool;
  }
  input Input : int;
  input Sync : SyncBus;
  input Error : bool;
  output Output : int;
  eq Active : bool = not Sync.Active;
  eq Chosen : bool = if Error then false else Active;
  assume "B input range" : Input < 20;
  guarantee "B output range" : Output < Input + 15;
}
"#;
        let c = parse(src).unwrap();
        assert_eq!(c.to_string(), src);
    }

    #[test]
    fn parenthesizes_where_needed() {
        let src = "component C { input A : int; input B : bool;
            eq X : int = (if B then A else 0) + -(-A);
            eq Y : bool = (0 -> 1) = A;
            eq Z : int = (A - (A - 1)) * (A + 1); }";
        let c = parse(src).unwrap();
        let printed = c.to_string();
        assert!(
            printed.contains("(if B then A else 0) + -(-A)"),
            "{printed}"
        );
        assert!(printed.contains("(0 -> 1) = A"), "{printed}");
        assert!(printed.contains("(A - (A - 1)) * (A + 1)"), "{printed}");
        assert_eq!(parse(&printed).unwrap(), c);
    }

    proptest! {
        #[test]
        fn random_sources_never_panic(src in "[a-z0-9 (){};:.=<>+*/\"-]{0,60}") {
            let _ = parse(&format!("component C {{ {src} }}"));
        }
    }
}
