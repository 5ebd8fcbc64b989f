use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow;

use super::{ErrorKind, FrontendError, Span};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(BigInt),
    Real(BigRational),
    Str(String),
    Component,
    Input,
    Output,
    Record,
    Node,
    Assume,
    Guarantee,
    Eq,
    Pre,
    If,
    Then,
    Else,
    Not,
    And,
    Or,
    Div,
    Mod,
    True,
    False,
    IntTy,
    RealTy,
    BoolTy,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Dot,
    Arrow,
    Implies,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqSign,
    Ne,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(i) => format!("integer `{i}`"),
            Tok::Real(_) => "real literal".to_string(),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", symbol(other)),
        }
    }
}

fn symbol(t: &Tok) -> &'static str {
    match t {
        Tok::Component => "component",
        Tok::Input => "input",
        Tok::Output => "output",
        Tok::Record => "record",
        Tok::Node => "node",
        Tok::Assume => "assume",
        Tok::Guarantee => "guarantee",
        Tok::Eq => "eq",
        Tok::Pre => "pre",
        Tok::If => "if",
        Tok::Then => "then",
        Tok::Else => "else",
        Tok::Not => "not",
        Tok::And => "and",
        Tok::Or => "or",
        Tok::Div => "div",
        Tok::Mod => "mod",
        Tok::True => "true",
        Tok::False => "false",
        Tok::IntTy => "int",
        Tok::RealTy => "real",
        Tok::BoolTy => "bool",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Colon => ":",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Arrow => "->",
        Tok::Implies => "=>",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        Tok::EqSign => "=",
        Tok::Ne => "<>",
        _ => "?",
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "component" => Tok::Component,
        "input" => Tok::Input,
        "output" => Tok::Output,
        "record" => Tok::Record,
        "node" => Tok::Node,
        "assume" => Tok::Assume,
        "guarantee" => Tok::Guarantee,
        "eq" => Tok::Eq,
        "pre" => Tok::Pre,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "not" => Tok::Not,
        "and" => Tok::And,
        "or" => Tok::Or,
        "div" => Tok::Div,
        "mod" => Tok::Mod,
        "true" => Tok::True,
        "false" => Tok::False,
        "int" => Tok::IntTy,
        "real" => Tok::RealTy,
        "bool" => Tok::BoolTy,
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let mut lx = Lexer {
        chars: src.char_indices().collect(),
        pos: 0,
        line: 1,
        col: 1,
        len: src.len(),
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next_token()?;
        let eof = t.tok == Tok::Eof;
        out.push(t);
        if eof {
            return Ok(out);
        }
    }
}

struct Lexer {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: u32,
    col: u32,
    len: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).map(|c| c.1)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map(|c| c.0).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.peek2() == Some('-') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, FrontendError> {
        self.skip_trivia();
        let start = self.offset();
        let (line, col) = (self.line, self.col);
        let mk = |lx: &Lexer, tok| Token {
            tok,
            span: Span {
                start,
                end: lx.offset(),
                line,
                col,
            },
        };
        let Some(c) = self.bump() else {
            return Ok(mk(self, Tok::Eof));
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ':' => Tok::Colon,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '-' => {
                if self.peek() == Some('>') {
                    self.bump();
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            '=' => {
                if self.peek() == Some('>') {
                    self.bump();
                    Tok::Implies
                } else {
                    Tok::EqSign
                }
            }
            '<' => match self.peek() {
                Some('=') => {
                    self.bump();
                    Tok::Le
                }
                Some('>') => {
                    self.bump();
                    Tok::Ne
                }
                _ => Tok::Lt,
            },
            '>' => {
                if self.peek() == Some('=') {
                    self.bump();
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '"' => {
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None | Some('\n') => {
                            return Err(FrontendError::new(
                                ErrorKind::Lex,
                                mk(self, Tok::Eof).span,
                                "unterminated string literal",
                            ))
                        }
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => {
                                return Err(FrontendError::new(
                                    ErrorKind::Lex,
                                    mk(self, Tok::Eof).span,
                                    "invalid escape in string literal",
                                ))
                            }
                        },
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::from(c);
                while let Some(d) = self.peek().filter(|d| d.is_ascii_digit()) {
                    digits.push(d);
                    self.bump();
                }
                if self.peek() == Some('.') && self.peek2().is_some_and(|d| d.is_ascii_digit()) {
                    self.bump();
                    let mut frac = String::new();
                    while let Some(d) = self.peek().filter(|d| d.is_ascii_digit()) {
                        frac.push(d);
                        self.bump();
                    }
                    let numer: BigInt = format!("{digits}{frac}").parse().expect("digits");
                    let denom: BigInt = pow(BigInt::from(10), frac.len());
                    Tok::Real(BigRational::new(numer, denom))
                } else {
                    Tok::Int(digits.parse().expect("digits"))
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::from(c);
                while let Some(d) = self
                    .peek()
                    .filter(|d| d.is_ascii_alphanumeric() || *d == '_')
                {
                    word.push(d);
                    self.bump();
                }
                keyword(&word).unwrap_or(Tok::Ident(word))
            }
            other => {
                return Err(FrontendError::new(
                    ErrorKind::Lex,
                    mk(self, Tok::Eof).span,
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        Ok(mk(self, tok))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decimal(numer: i64, frac_digits: usize) -> BigRational {
        BigRational::new(BigInt::from(numer), pow(BigInt::from(10), frac_digits))
    }

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn operators_and_comments() {
        assert_eq!(
            kinds("a -> b => c <> d -- trailing\n<= >="),
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("b".into()),
                Tok::Implies,
                Tok::Ident("c".into()),
                Tok::Ne,
                Tok::Ident("d".into()),
                Tok::Le,
                Tok::Ge,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(kinds("0.1")[0], Tok::Real(decimal(1, 1)));
        assert_eq!(kinds("12.50")[0], Tok::Real(decimal(1250, 2)));
        assert_eq!(kinds("7")[0], Tok::Int(BigInt::from(7)));
    }

    #[test]
    fn spans_track_lines() {
        let toks = tokenize("component\n  X").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.col), (2, 3));
    }

    #[test]
    fn bad_character() {
        let err = tokenize("a $ b").unwrap_err();
        assert_eq!(err.kind, ErrorKind::Lex);
        assert_eq!(err.span.col, 3);
    }
}
