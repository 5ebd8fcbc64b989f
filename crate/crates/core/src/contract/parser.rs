//! Recursive descent parser for `.agc` contract files.
//!
//! Operator precedence, lowest to highest: `->`, `=>`, `or`, `and`, `not`,
//! comparisons, `+ -`, `* / div mod`, unary minus, `pre`, selection/call.
//! `->` and `=>` associate to the right; comparisons do not chain.

use std::collections::HashMap;
use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use super::{
    BinOp, Contract, EqDecl, ErrorKind, Expr, ExprKind, FrontendError, IoDecl, NodeDecl, Property,
    RecordDecl, RecordType, SemType, Span, UnOp, RESERVED_PREFIX,
};

type PResult<T> = Result<T, FrontendError>;

/// Parse and type check a contract.
pub fn parse(source: &str) -> PResult<Contract> {
    let mut c = parse_unchecked(source)?;
    super::check::check(&mut c)?;
    Ok(c)
}

/// Parse without type checking. Expression types are left unset.
pub fn parse_unchecked(source: &str) -> PResult<Contract> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        records: HashMap::new(),
    };
    p.contract()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    records: HashMap<String, Arc<RecordType>>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &str) -> FrontendError {
        FrontendError::new(
            ErrorKind::Parse,
            self.span(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<Span> {
        if self.peek() == &tok {
            Ok(self.advance().span)
        } else {
            Err(self.error(what))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let span = self.advance().span;
                if name.starts_with(RESERVED_PREFIX) {
                    return Err(FrontendError::new(
                        ErrorKind::Reserved,
                        span,
                        format!("identifier `{name}` uses the reserved prefix `{RESERVED_PREFIX}`"),
                    ));
                }
                Ok((name, span))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.error("string label")),
        }
    }

    fn contract(&mut self) -> PResult<Contract> {
        self.expect(Tok::Component, "`component`")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut c = Contract::empty(name);
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Record => c.records.push(self.record_decl()?),
                Tok::Input => {
                    self.advance();
                    c.inputs.push(self.io_decl()?);
                }
                Tok::Output => {
                    self.advance();
                    c.outputs.push(self.io_decl()?);
                }
                Tok::Node => c.nodes.push(self.node_decl()?),
                Tok::Assume => {
                    self.advance();
                    c.assumes.push(self.property()?);
                }
                Tok::Guarantee => {
                    self.advance();
                    c.guarantees.push(self.property()?);
                }
                Tok::Eq => c.eqs.push(self.eq_decl()?),
                _ => return Err(self.error("declaration or `}`")),
            }
        }
        self.expect(Tok::Eof, "end of input")?;
        Ok(c)
    }

    fn ty(&mut self) -> PResult<SemType> {
        match self.peek().clone() {
            Tok::IntTy => {
                self.advance();
                Ok(SemType::Int)
            }
            Tok::RealTy => {
                self.advance();
                Ok(SemType::Real)
            }
            Tok::BoolTy => {
                self.advance();
                Ok(SemType::Bool)
            }
            Tok::Ident(name) => {
                let span = self.advance().span;
                self.records
                    .get(&name)
                    .cloned()
                    .map(SemType::Record)
                    .ok_or_else(|| {
                        FrontendError::new(
                            ErrorKind::Unresolved,
                            span,
                            format!("unknown type `{name}` (records must be declared before use)"),
                        )
                    })
            }
            _ => Err(self.error("type")),
        }
    }

    fn record_decl(&mut self) -> PResult<RecordDecl> {
        let start = self.expect(Tok::Record, "`record`")?;
        let (name, name_span) = self.ident()?;
        if self.records.contains_key(&name) {
            return Err(FrontendError::new(
                ErrorKind::Duplicate,
                name_span,
                format!("record `{name}` declared twice"),
            ));
        }
        self.expect(Tok::LBrace, "`{`")?;
        let mut fields: Vec<(String, SemType)> = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let (f, fspan) = self.ident()?;
            if !f.starts_with(|ch: char| ch.is_ascii_alphabetic()) {
                return Err(FrontendError::new(
                    ErrorKind::Parse,
                    fspan,
                    "record field names must start with a letter",
                ));
            }
            if fields.iter().any(|(g, _)| *g == f) {
                return Err(FrontendError::new(
                    ErrorKind::Duplicate,
                    fspan,
                    format!("field `{f}` declared twice in record `{name}`"),
                ));
            }
            self.expect(Tok::Colon, "`:`")?;
            let t = self.ty()?;
            self.expect(Tok::Semi, "`;`")?;
            fields.push((f, t));
        }
        self.eat(&Tok::Semi);
        let ty = Arc::new(RecordType {
            name: name.clone(),
            fields,
        });
        self.records.insert(name, ty.clone());
        Ok(RecordDecl {
            ty,
            span: start.merge(self.prev_span()),
        })
    }

    fn io_decl(&mut self) -> PResult<IoDecl> {
        let (name, span) = self.ident()?;
        self.expect(Tok::Colon, "`:`")?;
        let ty = self.ty()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(IoDecl { name, ty, span })
    }

    fn node_decl(&mut self) -> PResult<NodeDecl> {
        let start = self.expect(Tok::Node, "`node`")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let (p, _) = self.ident()?;
                self.expect(Tok::Colon, "`:`")?;
                params.push((p, self.ty()?));
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        self.expect(Tok::Colon, "`:`")?;
        let result = self.ty()?;
        self.expect(Tok::EqSign, "`=`")?;
        let body = self.expr()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(NodeDecl {
            name,
            params,
            result,
            body,
            span: start.merge(self.prev_span()),
        })
    }

    fn property(&mut self) -> PResult<Property> {
        let start = self.prev_span();
        let label = self.string()?;
        self.expect(Tok::Colon, "`:`")?;
        let expr = self.expr()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(Property {
            label,
            expr,
            span: start.merge(self.prev_span()),
        })
    }

    fn eq_decl(&mut self) -> PResult<EqDecl> {
        let start = self.expect(Tok::Eq, "`eq`")?;
        let (name, _) = self.ident()?;
        self.expect(Tok::Colon, "`:`")?;
        let ty = self.ty()?;
        self.expect(Tok::EqSign, "`=`")?;
        let expr = self.expr()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(EqDecl {
            name,
            ty,
            expr,
            span: start.merge(self.prev_span()),
        })
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.arrow()
    }

    fn arrow(&mut self) -> PResult<Expr> {
        let lhs = self.implies()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.arrow()?;
            let span = lhs.span.merge(rhs.span);
            return Ok(Expr::new(
                ExprKind::Arrow(Box::new(lhs), Box::new(rhs)),
                span,
            ));
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> PResult<Expr> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies()?;
            return Ok(binary(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.and()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.not()?;
        while self.eat(&Tok::And) {
            let rhs = self.not()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Not {
            let start = self.advance().span;
            let e = self.not()?;
            let span = start.merge(e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::EqSign => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.additive()?;
        Ok(binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Div => BinOp::IntDiv,
                Tok::Mod => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Minus {
            let start = self.advance().span;
            let e = self.unary()?;
            let span = start.merge(e.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span));
        }
        self.pre()
    }

    fn pre(&mut self) -> PResult<Expr> {
        if self.peek() == &Tok::Pre {
            let start = self.advance().span;
            let e = self.pre()?;
            let span = start.merge(e.span);
            return Ok(Expr::new(ExprKind::Pre(Box::new(e)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat(&Tok::Dot) {
            let (field, fspan) = self.ident()?;
            let span = e.span.merge(fspan);
            e = Expr::new(ExprKind::Select(Box::new(e), field), span);
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::True => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(true), span))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(false), span))
            }
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::new(ExprKind::Int(i), span))
            }
            Tok::Real(r) => {
                self.advance();
                Ok(Expr::new(ExprKind::Real(r), span))
            }
            Tok::Ident(_) => {
                let (name, span) = self.ident()?;
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma, "`,` or `)`")?;
                        }
                    }
                    let span = span.merge(self.prev_span());
                    return Ok(Expr::new(ExprKind::Call(name, args), span));
                }
                Ok(Expr::new(ExprKind::Ident(name), span))
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::If => {
                self.advance();
                let c = self.expr()?;
                self.expect(Tok::Then, "`then`")?;
                let a = self.expr()?;
                self.expect(Tok::Else, "`else`")?;
                let b = self.expr()?;
                let span = span.merge(b.span);
                Ok(Expr::new(
                    ExprKind::If(Box::new(c), Box::new(a), Box::new(b)),
                    span,
                ))
            }
            _ => Err(self.error("expression")),
        }
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = lhs.span.merge(rhs.span);
    Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
}

/// Parse a single unchecked expression.
#[cfg(test)]
pub(crate) fn parse_expr(source: &str) -> PResult<Expr> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        records: HashMap::new(),
    };
    let e = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(src: &str) -> String {
        super::super::printer::debug_tree(&parse_expr(src).unwrap())
    }

    #[test]
    fn precedence_follows_lustre_conventions() {
        assert_eq!(shape("a -> b -> c"), "(-> a (-> b c))");
        assert_eq!(shape("a => b => c"), "(=> a (=> b c))");
        assert_eq!(shape("a or b and c"), "(or a (and b c))");
        assert_eq!(shape("not a = b"), "(not (= a b))");
        assert_eq!(shape("a + b * c - d"), "(- (+ a (* b c)) d)");
        assert_eq!(shape("-pre x.f"), "(neg (pre (. x f)))");
        assert_eq!(
            shape("x > 0 -> pre(x) + 1 > 0"),
            "(-> (> x 0) (> (+ (pre x) 1) 0))"
        );
        assert_eq!(shape("a div b mod c"), "(mod (div a b) c)");
    }

    #[test]
    fn comparisons_do_not_chain() {
        assert!(parse_expr("a < b < c").is_err());
    }

    #[test]
    fn reserved_prefix_rejected() {
        let err = parse("component C { input __t1 : int; }").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Reserved);
    }

    #[test]
    fn diagnostics_carry_line_and_column() {
        let err = parse("component C {\n  input X : int\n}").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Parse);
        assert_eq!((err.span.line, err.span.col), (3, 1));
    }

    #[test]
    fn unknown_record_type() {
        let err = parse("component C { input S : Bus; }").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Unresolved);
    }
}
