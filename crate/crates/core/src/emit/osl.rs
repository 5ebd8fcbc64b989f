//! Observer step language: a small textual form of [`ObserverProgram`] that
//! parses back to the identical program.

use std::fmt::Write;

use thiserror::Error;

use crate::observer::{
    Helper, OBinOp, OExpr, OUnOp, ObserverProgram, Param, Persistent, PersistentKind, Role, Stmt,
    Update,
};
use crate::types::{FloatPrecision, IntType, LoweredType, StructType};
use crate::value::{format_float, parse_float, Value};

pub const OSL_VERSION: u32 = 1;

pub(crate) fn helper_name(h: Helper) -> &'static str {
    match h {
        Helper::If => "ite",
        Helper::Implies => "implies",
        Helper::Arrow => "arrow",
        Helper::Mod => "mod",
        Helper::IsEqual => "isequal",
    }
}

fn binop_symbol(op: OBinOp) -> &'static str {
    match op {
        OBinOp::Add => "+",
        OBinOp::Sub => "-",
        OBinOp::Mul => "*",
        OBinOp::Div => "/",
        OBinOp::IntDiv => "div",
        OBinOp::Lt => "<",
        OBinOp::Le => "<=",
        OBinOp::Gt => ">",
        OBinOp::Ge => ">=",
        OBinOp::Ne => "<>",
        OBinOp::And => "and",
        OBinOp::Or => "or",
    }
}

fn const_text(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Int { v, ty } => format!("{}({v})", ty.name()),
        Value::Float { v, prec } => format!("{}({})", prec.name(), format_float(*v)),
        Value::Struct { name, fields } => {
            let inner: Vec<String> = fields
                .iter()
                .map(|(n, v)| format!("{n} = {}", const_text(v)))
                .collect();
            format!("{name} {{ {} }}", inner.join(", "))
        }
    }
}

fn expr_text(e: &OExpr) -> String {
    match e {
        OExpr::Const(v) => const_text(v),
        OExpr::Var(n) => n.clone(),
        OExpr::Field(x, f) => match **x {
            OExpr::Var(_) | OExpr::Field(..) | OExpr::Call(..) => format!("{}.{f}", expr_text(x)),
            _ => format!("({}).{f}", expr_text(x)),
        },
        OExpr::Unary(OUnOp::Neg, x) => format!("-({})", expr_text(x)),
        OExpr::Unary(OUnOp::Not, x) => format!("not({})", expr_text(x)),
        OExpr::Binary(op, a, b) => {
            let side = |x: &OExpr| match x {
                OExpr::Binary(..) => format!("({})", expr_text(x)),
                _ => expr_text(x),
            };
            format!("{} {} {}", side(a), binop_symbol(*op), side(b))
        }
        OExpr::Call(h, args) => {
            let args: Vec<String> = args.iter().map(expr_text).collect();
            format!("{}({})", helper_name(*h), args.join(", "))
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn param_line(out: &mut String, p: &Param) {
    let role = match p.role {
        Role::Input => "input",
        Role::Output => "output",
    };
    let _ = writeln!(out, "  {role} {} : {};", p.name, p.ty);
}

pub fn emit_osl(p: &ObserverProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "osl {OSL_VERSION};");
    let _ = writeln!(out, "observer {};", p.name);
    out.push_str("params {\n");
    for param in &p.params {
        param_line(&mut out, param);
    }
    out.push_str("}\n");
    if !p.results.is_empty() {
        out.push_str("results {\n");
        for r in &p.results {
            param_line(&mut out, r);
        }
        out.push_str("}\n");
    }
    out.push_str("persistent {\n");
    for v in &p.persistents {
        let kw = match v.kind {
            PersistentKind::FirstTime => "flag",
            PersistentKind::Pre => "pre",
        };
        let _ = writeln!(
            out,
            "  {kw} {} : {} = {};",
            v.name,
            v.ty,
            const_text(&v.init)
        );
    }
    out.push_str("}\nstep {\n");
    for s in &p.step {
        let _ = match s {
            Stmt::Assign { target, ty, expr } => {
                writeln!(out, "  {target} : {ty} := {};", expr_text(expr))
            }
            Stmt::Assume { label, expr } => {
                writeln!(out, "  assume {} : {};", quote(label), expr_text(expr))
            }
            Stmt::Prove { label, expr } => {
                writeln!(out, "  prove {} : {};", quote(label), expr_text(expr))
            }
        };
    }
    out.push_str("}\nupdate {\n");
    for u in &p.updates {
        let _ = writeln!(out, "  {} := {};", u.target, expr_text(&u.expr));
    }
    out.push_str("}\nend\n");
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct OslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(String),
    Str(String),
    Sym(&'static str),
    Eof,
}

const SYMBOLS: [&str; 18] = [
    ":=", "<=", ">=", "<>", "{", "}", "(", ")", ";", ":", ",", ".", "=", "+", "-", "*", "/", "<",
];

fn lex(src: &str) -> Result<Vec<(Tok, usize, usize)>, OslError> {
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let mut out = Vec::new();
    let err = |line, col, message: String| OslError { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            advance(1, &mut i, &mut col);
        } else if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut col);
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), l0, c0));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_alphanumeric() || d == '.' || exp_sign {
                    advance(1, &mut i, &mut col);
                } else {
                    break;
                }
            }
            out.push((Tok::Num(chars[start..i].iter().collect()), l0, c0));
        } else if c == '"' {
            advance(1, &mut i, &mut col);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(err(l0, c0, "unterminated string".into())),
                    Some('"') => {
                        advance(1, &mut i, &mut col);
                        break;
                    }
                    Some('\\') => {
                        let esc = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            _ => return Err(err(line, col, "bad escape in string".into())),
                        };
                        s.push(esc);
                        advance(2, &mut i, &mut col);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        advance(1, &mut i, &mut col);
                    }
                }
            }
            out.push((Tok::Str(s), l0, c0));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS
                .iter()
                .chain([">"].iter())
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| err(l0, c0, format!("unexpected character `{c}`")))?;
            advance(sym.len(), &mut i, &mut col);
            out.push((Tok::Sym(sym), l0, c0));
        }
    }
    out.push((Tok::Eof, line, col));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, OslError> {
        let (_, line, col) = self.toks[self.pos];
        Err(OslError {
            line,
            col,
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == w)
    }

    fn sym(&mut self, s: &str) -> Result<(), OslError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn word(&mut self, w: &str) -> Result<(), OslError> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{w}`, found {}", self.describe()))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn ident(&mut self) -> Result<String, OslError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn string(&mut self) -> Result<String, OslError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(format!("expected string, found {}", self.describe())),
        }
    }

    fn ty(&mut self) -> Result<LoweredType, OslError> {
        let name = self.ident()?;
        match name.as_str() {
            "bool" => Ok(LoweredType::Bool),
            "single" => Ok(LoweredType::Float(FloatPrecision::Single)),
            "double" => Ok(LoweredType::Float(FloatPrecision::Double)),
            "struct" => {
                let name = self.ident()?;
                self.sym("{")?;
                let mut fields = Vec::new();
                while !self.is_sym("}") {
                    let f = self.ident()?;
                    self.sym(":")?;
                    let t = self.ty()?;
                    self.sym(";")?;
                    fields.push((f, t));
                }
                self.sym("}")?;
                Ok(LoweredType::Struct(StructType { name, fields }))
            }
            other => match IntType::parse(other) {
                Some(t) => Ok(LoweredType::Int(t)),
                None => {
                    self.pos -= 1;
                    self.fail(format!("unknown type `{other}`"))
                }
            },
        }
    }

    fn signed_number(&mut self) -> Result<String, OslError> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        let body = match self.peek().clone() {
            Tok::Num(n) => n,
            Tok::Ident(w) if w == "inf" || w == "nan" => w,
            _ => return self.fail(format!("expected number, found {}", self.describe())),
        };
        self.bump();
        Ok(if neg { format!("-{body}") } else { body })
    }

    fn constant(&mut self) -> Result<Value, OslError> {
        if self.is_word("true") || self.is_word("false") {
            return Ok(Value::Bool(self.ident()? == "true"));
        }
        let name = self.ident()?;
        if self.is_sym("{") {
            self.bump();
            let mut fields = Vec::new();
            while !self.is_sym("}") {
                if !fields.is_empty() {
                    self.sym(",")?;
                }
                let f = self.ident()?;
                self.sym("=")?;
                fields.push((f, self.constant()?));
            }
            self.sym("}")?;
            return Ok(Value::Struct { name, fields });
        }
        self.sym("(")?;
        let text = self.signed_number()?;
        let v = match name.as_str() {
            "single" | "double" => {
                let prec = if name == "single" {
                    FloatPrecision::Single
                } else {
                    FloatPrecision::Double
                };
                match parse_float(&text) {
                    Some(v) => Value::Float { v, prec },
                    None => return self.fail(format!("bad float `{text}`")),
                }
            }
            _ => match (IntType::parse(&name), text.parse::<i64>()) {
                (Some(ty), Ok(v)) if ty.contains(v) => Value::Int { v, ty },
                (Some(ty), _) => {
                    return self.fail(format!("`{text}` is not a valid {}", ty.name()))
                }
                (None, _) => return self.fail(format!("unknown cast `{name}`")),
            },
        };
        self.sym(")")?;
        Ok(v)
    }

    fn expr(&mut self) -> Result<OExpr, OslError> {
        self.binary(0)
    }

    fn binop(&self) -> Option<(OBinOp, u8)> {
        let op = match self.peek() {
            Tok::Ident(w) if w == "or" => OBinOp::Or,
            Tok::Ident(w) if w == "and" => OBinOp::And,
            Tok::Ident(w) if w == "div" => OBinOp::IntDiv,
            Tok::Sym(s) => match *s {
                "<" => OBinOp::Lt,
                "<=" => OBinOp::Le,
                ">" => OBinOp::Gt,
                ">=" => OBinOp::Ge,
                "<>" => OBinOp::Ne,
                "+" => OBinOp::Add,
                "-" => OBinOp::Sub,
                "*" => OBinOp::Mul,
                "/" => OBinOp::Div,
                _ => return None,
            },
            _ => return None,
        };
        let prec = match op {
            OBinOp::Or => 1,
            OBinOp::And => 2,
            OBinOp::Lt | OBinOp::Le | OBinOp::Gt | OBinOp::Ge | OBinOp::Ne => 3,
            OBinOp::Add | OBinOp::Sub => 4,
            OBinOp::Mul | OBinOp::Div | OBinOp::IntDiv => 5,
        };
        Some((op, prec))
    }

    fn binary(&mut self, min: u8) -> Result<OExpr, OslError> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = self.binop() {
            if prec <= min {
                break;
            }
            self.bump();
            let rhs = self.binary(prec)?;
            lhs = OExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<OExpr, OslError> {
        if self.is_sym("-") {
            self.bump();
            return Ok(OExpr::Unary(OUnOp::Neg, Box::new(self.unary()?)));
        }
        if self.is_word("not") {
            self.bump();
            return Ok(OExpr::Unary(OUnOp::Not, Box::new(self.unary()?)));
        }
        let mut e = self.primary()?;
        while self.is_sym(".") {
            self.bump();
            e = OExpr::Field(Box::new(e), self.ident()?);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<OExpr, OslError> {
        if self.is_sym("(") {
            self.bump();
            let e = self.expr()?;
            self.sym(")")?;
            return Ok(e);
        }
        let Tok::Ident(name) = self.peek().clone() else {
            return self.fail(format!("expected expression, found {}", self.describe()));
        };
        if name == "true" || name == "false" {
            return Ok(OExpr::Const(self.constant()?));
        }
        let helper = Helper::ALL.into_iter().find(|h| helper_name(*h) == name);
        match (self.peek_at(1), helper) {
            (Tok::Sym("("), Some(h)) => {
                self.bump();
                self.bump();
                let mut args = Vec::new();
                while !self.is_sym(")") {
                    if !args.is_empty() {
                        self.sym(",")?;
                    }
                    args.push(self.expr()?);
                }
                self.sym(")")?;
                if args.len() != h.arity() {
                    return self.fail(format!("`{name}` takes {} arguments", h.arity()));
                }
                Ok(OExpr::Call(h, args))
            }
            (Tok::Sym("(") | Tok::Sym("{"), None) => Ok(OExpr::Const(self.constant()?)),
            _ => {
                self.bump();
                Ok(OExpr::Var(name))
            }
        }
    }

    fn param_block(&mut self) -> Result<Vec<Param>, OslError> {
        self.sym("{")?;
        let mut out = Vec::new();
        while !self.is_sym("}") {
            let role = match self.ident()?.as_str() {
                "input" => Role::Input,
                "output" => Role::Output,
                other => {
                    self.pos -= 1;
                    return self.fail(format!("expected `input` or `output`, found `{other}`"));
                }
            };
            let name = self.ident()?;
            self.sym(":")?;
            let ty = self.ty()?;
            self.sym(";")?;
            out.push(Param { name, ty, role });
        }
        self.sym("}")?;
        Ok(out)
    }

    fn program(&mut self) -> Result<ObserverProgram, OslError> {
        self.word("osl")?;
        match self.peek().clone() {
            Tok::Num(n) if n == OSL_VERSION.to_string() => {
                self.bump();
            }
            _ => return self.fail(format!("unsupported OSL version {}", self.describe())),
        }
        self.sym(";")?;
        self.word("observer")?;
        let name = self.ident()?;
        self.sym(";")?;
        self.word("params")?;
        let params = self.param_block()?;
        let results = if self.is_word("results") {
            self.bump();
            self.param_block()?
        } else {
            vec![]
        };

        self.word("persistent")?;
        self.sym("{")?;
        let mut persistents = Vec::new();
        while !self.is_sym("}") {
            let kind = match self.ident()?.as_str() {
                "flag" => PersistentKind::FirstTime,
                "pre" => PersistentKind::Pre,
                other => {
                    self.pos -= 1;
                    return self.fail(format!("expected `flag` or `pre`, found `{other}`"));
                }
            };
            let name = self.ident()?;
            self.sym(":")?;
            let ty = self.ty()?;
            self.sym("=")?;
            let init = self.constant()?;
            self.sym(";")?;
            persistents.push(Persistent {
                name,
                ty,
                init,
                kind,
            });
        }
        self.sym("}")?;

        self.word("step")?;
        self.sym("{")?;
        let mut step = Vec::new();
        while !self.is_sym("}") {
            let is_prop = matches!(self.peek_at(1), Tok::Str(_));
            if is_prop && (self.is_word("assume") || self.is_word("prove")) {
                let assume = self.ident()? == "assume";
                let label = self.string()?;
                self.sym(":")?;
                let expr = self.expr()?;
                self.sym(";")?;
                step.push(if assume {
                    Stmt::Assume { label, expr }
                } else {
                    Stmt::Prove { label, expr }
                });
            } else {
                let target = self.ident()?;
                self.sym(":")?;
                let ty = self.ty()?;
                self.sym(":=")?;
                let expr = self.expr()?;
                self.sym(";")?;
                step.push(Stmt::Assign { target, ty, expr });
            }
        }
        self.sym("}")?;

        self.word("update")?;
        self.sym("{")?;
        let mut updates = Vec::new();
        while !self.is_sym("}") {
            let target = self.ident()?;
            self.sym(":=")?;
            let expr = self.expr()?;
            self.sym(";")?;
            updates.push(Update { target, expr });
        }
        self.sym("}")?;
        self.word("end")?;
        if *self.peek() != Tok::Eof {
            return self.fail(format!("unexpected {} after `end`", self.describe()));
        }
        Ok(ObserverProgram {
            name,
            params,
            results,
            persistents,
            step,
            updates,
        })
    }
}

pub fn parse_osl(src: &str) -> Result<ObserverProgram, OslError> {
    Parser {
        toks: lex(src)?,
        pos: 0,
    }
    .program()
}
