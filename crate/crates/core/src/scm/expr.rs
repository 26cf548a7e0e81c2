//! Closed-form structural function bodies.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | name | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Built-in calls are `max`, `min` (variadic), `ceil` and `floor`. The unicode
//! operators `×` and `−` are accepted as aliases.

use std::collections::BTreeSet;
use std::fmt;

use crate::VariableId;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(VariableId),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
    Ceil(Box<Expr>),
    Floor(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("expression parse error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, at: 0 };
        let e = p.expr()?;
        if let Some((pos, t)) = p.tokens.get(p.at) {
            return Err(ParseError {
                pos: *pos,
                msg: format!("unexpected token {t:?}"),
            });
        }
        Ok(e)
    }

    /// Every variable name referenced by the expression.
    pub fn variables(&self) -> BTreeSet<VariableId> {
        let mut out = BTreeSet::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut BTreeSet<VariableId>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Ceil(a) | Expr::Floor(a) => a.collect(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Expr::Max(xs) | Expr::Min(xs) => xs.iter().for_each(|x| x.collect(out)),
        }
    }

    /// Evaluates with `lookup` resolving variable names. Unknown names yield NaN.
    pub fn eval(&self, lookup: &dyn Fn(&VariableId) -> Option<f64>) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(v) => lookup(v).unwrap_or(f64::NAN),
            Expr::Neg(a) => -a.eval(lookup),
            Expr::Add(a, b) => a.eval(lookup) + b.eval(lookup),
            Expr::Sub(a, b) => a.eval(lookup) - b.eval(lookup),
            Expr::Mul(a, b) => a.eval(lookup) * b.eval(lookup),
            Expr::Div(a, b) => a.eval(lookup) / b.eval(lookup),
            Expr::Max(xs) => xs
                .iter()
                .map(|x| x.eval(lookup))
                .fold(f64::NEG_INFINITY, f64::max),
            Expr::Min(xs) => xs
                .iter()
                .map(|x| x.eval(lookup))
                .fold(f64::INFINITY, f64::min),
            Expr::Ceil(a) => a.eval(lookup).ceil(),
            Expr::Floor(a) => a.eval(lookup).floor(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, name: &str, xs: &[Expr]) -> fmt::Result {
            write!(f, "{name}(")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, ")")
        }
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "-({a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Max(xs) => list(f, "max", xs),
            Expr::Min(xs) => list(f, "min", xs),
            Expr::Ceil(a) => write!(f, "ceil({a})"),
            Expr::Floor(a) => write!(f, "floor({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '+' => {
                chars.next();
                out.push((pos, Tok::Plus));
            }
            '-' | '−' => {
                chars.next();
                out.push((pos, Tok::Minus));
            }
            '*' | '×' => {
                chars.next();
                out.push((pos, Tok::Star));
            }
            '/' => {
                chars.next();
                out.push((pos, Tok::Slash));
            }
            '(' => {
                chars.next();
                out.push((pos, Tok::LParen));
            }
            ')' => {
                chars.next();
                out.push((pos, Tok::RParen));
            }
            ',' => {
                chars.next();
                out.push((pos, Tok::Comma));
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut s = String::new();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' {
                        s.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let n: f64 = s.parse().map_err(|_| ParseError {
                    pos,
                    msg: format!("bad number {s:?}"),
                })?;
                out.push((pos, Tok::Num(n)));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' || d == '\'' {
                        s.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((pos, Tok::Ident(s)));
            }
            other => {
                return Err(ParseError {
                    pos,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens
            .get(self.at)
            .map(|(p, _)| *p)
            .unwrap_or_else(|| self.tokens.last().map(|(p, _)| p + 1).unwrap_or(0))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            pos: self.pos(),
            msg: msg.into(),
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {t:?}")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.at += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.at += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.at += 1;
                Ok(Expr::Const(n))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if self.peek() != Some(&Tok::LParen) {
                    return Ok(Expr::Var(VariableId::new(name)));
                }
                self.at += 1;
                let mut args = vec![self.expr()?];
                while self.peek() == Some(&Tok::Comma) {
                    self.at += 1;
                    args.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                let one = |mut args: Vec<Expr>, p: &Parser| {
                    if args.len() == 1 {
                        Ok(Box::new(args.pop().unwrap()))
                    } else {
                        Err(p.err(format!("{name} takes one argument")))
                    }
                };
                match name.as_str() {
                    "max" => Ok(Expr::Max(args)),
                    "min" => Ok(Expr::Min(args)),
                    "ceil" => Ok(Expr::Ceil(one(args, self)?)),
                    "floor" => Ok(Expr::Floor(one(args, self)?)),
                    _ => Err(self.err(format!("unknown function {name}"))),
                }
            }
            Some(t) => Err(self.err(format!("unexpected token {t:?}"))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}
