//! Arithmetic expressions in one variable `x`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right associative
//! primary := number | 'x' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | tan | exp | ln | abs | sqrt
//! ```
//!
//! So `-x^2` is `-(x^2)` and `2^-1` is `0.5`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::func::Func;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Abs,
    Sqrt,
}

impl Function {
    const ALL: [(&'static str, Function); 7] = [
        ("sin", Function::Sin),
        ("cos", Function::Cos),
        ("tan", Function::Tan),
        ("exp", Function::Exp),
        ("ln", Function::Ln),
        ("abs", Function::Abs),
        ("sqrt", Function::Sqrt),
    ];

    fn name(self) -> &'static str {
        Self::ALL.iter().find(|(_, f)| *f == self).unwrap().0
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Function::Sin => v.sin(),
            Function::Cos => v.cos(),
            Function::Tan => v.tan(),
            Function::Exp => v.exp(),
            Function::Ln => v.ln(),
            Function::Abs => v.abs(),
            Function::Sqrt => v.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Function, Box<Expr>),
}

use Expr::*;

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error("unexpected trailing input", &["operator", "end of input"]));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Num(v) => *v,
            X => x,
            Neg(a) => -a.eval(x),
            Add(a, c) => a.eval(x) + c.eval(x),
            Sub(a, c) => a.eval(x) - c.eval(x),
            Mul(a, c) => a.eval(x) * c.eval(x),
            Div(a, c) => a.eval(x) / c.eval(x),
            Pow(a, c) => {
                let base = a.eval(x);
                match **c {
                    Num(k) if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 => base.powi(k as i32),
                    _ => base.powf(c.eval(x)),
                }
            }
            Call(f, a) => f.apply(a.eval(x)),
        }
    }

    fn is_const(&self) -> bool {
        match self {
            Num(_) => true,
            X => false,
            Neg(a) | Call(_, a) => a.is_const(),
            Add(a, c) | Sub(a, c) | Mul(a, c) | Div(a, c) | Pow(a, c) => a.is_const() && c.is_const(),
        }
    }

    /// Symbolic derivative with respect to `x`. `abs` differentiates to
    /// `sign`, written as `x/abs(x)` of its argument.
    pub fn derivative(&self) -> Expr {
        let d = match self {
            Num(_) => Num(0.0),
            X => Num(1.0),
            Neg(a) => Neg(b(a.derivative())),
            Add(a, c) => Add(b(a.derivative()), b(c.derivative())),
            Sub(a, c) => Sub(b(a.derivative()), b(c.derivative())),
            Mul(a, c) => Add(
                b(Mul(b(a.derivative()), c.clone())),
                b(Mul(a.clone(), b(c.derivative()))),
            ),
            Div(a, c) => Div(
                b(Sub(
                    b(Mul(b(a.derivative()), c.clone())),
                    b(Mul(a.clone(), b(c.derivative()))),
                )),
                b(Pow(c.clone(), b(Num(2.0)))),
            ),
            Pow(a, c) if c.is_const() => Mul(
                b(Mul(c.clone(), b(Pow(a.clone(), b(Sub(c.clone(), b(Num(1.0)))))))),
                b(a.derivative()),
            ),
            // d(a^c) = a^c (c' ln a + c a'/a)
            Pow(a, c) => Mul(
                b(self.clone()),
                b(Add(
                    b(Mul(b(c.derivative()), b(Call(Function::Ln, a.clone())))),
                    b(Div(b(Mul(c.clone(), b(a.derivative()))), a.clone())),
                )),
            ),
            Call(f, a) => {
                let inner = a.derivative();
                let outer = match f {
                    Function::Sin => Call(Function::Cos, a.clone()),
                    Function::Cos => Neg(b(Call(Function::Sin, a.clone()))),
                    Function::Tan => Add(b(Num(1.0)), b(Pow(b(Call(Function::Tan, a.clone())), b(Num(2.0))))),
                    Function::Exp => Call(Function::Exp, a.clone()),
                    Function::Ln => Div(b(Num(1.0)), a.clone()),
                    Function::Abs => Div(a.clone(), b(Call(Function::Abs, a.clone()))),
                    Function::Sqrt => Div(b(Num(0.5)), b(Call(Function::Sqrt, a.clone()))),
                };
                Mul(b(outer), b(inner))
            }
        };
        d.simplify()
    }

    pub fn nth_derivative(&self, order: usize) -> Expr {
        (0..order).fold(self.clone(), |e, _| e.derivative())
    }

    /// Constant folding and removal of neutral elements.
    pub fn simplify(self) -> Expr {
        match self {
            Neg(a) => match a.simplify() {
                Num(v) => Num(-v),
                Neg(inner) => *inner,
                s => Neg(b(s)),
            },
            Add(a, c) => match (a.simplify(), c.simplify()) {
                (Num(u), Num(v)) => Num(u + v),
                (Num(z), s) | (s, Num(z)) if z == 0.0 => s,
                (s, t) => Add(b(s), b(t)),
            },
            Sub(a, c) => match (a.simplify(), c.simplify()) {
                (Num(u), Num(v)) => Num(u - v),
                (s, Num(z)) if z == 0.0 => s,
                (Num(z), s) if z == 0.0 => Neg(b(s)),
                (s, t) => Sub(b(s), b(t)),
            },
            Mul(a, c) => match (a.simplify(), c.simplify()) {
                (Num(u), Num(v)) => Num(u * v),
                (Num(z), _) | (_, Num(z)) if z == 0.0 => Num(0.0),
                (Num(o), s) | (s, Num(o)) if o == 1.0 => s,
                (s, t) => Mul(b(s), b(t)),
            },
            Div(a, c) => match (a.simplify(), c.simplify()) {
                (Num(u), Num(v)) if v != 0.0 => Num(u / v),
                (Num(z), _) if z == 0.0 => Num(0.0),
                (s, Num(o)) if o == 1.0 => s,
                (s, t) => Div(b(s), b(t)),
            },
            Pow(a, c) => match (a.simplify(), c.simplify()) {
                (_, Num(z)) if z == 0.0 => Num(1.0),
                (s, Num(o)) if o == 1.0 => s,
                (Num(u), Num(v)) => Num(u.powf(v)),
                (s, t) => Pow(b(s), b(t)),
            },
            Call(f, a) => match a.simplify() {
                Num(v) => Num(f.apply(v)),
                s => Call(f, b(s)),
            },
            e => e,
        }
    }

    pub fn into_func(self) -> Func {
        let e = Arc::new(self);
        Func::new(move |x| e.eval(x))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(v) if *v < 0.0 => write!(f, "({v})"),
            Num(v) => write!(f, "{v}"),
            X => write!(f, "x"),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, c) => write!(f, "({a} + {c})"),
            Sub(a, c) => write!(f, "({a} - {c})"),
            Mul(a, c) => write!(f, "({a} * {c})"),
            Div(a, c) => write!(f, "({a} / {c})"),
            Pow(a, c) => write!(f, "({a} ^ {c})"),
            Call(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str, expected: &[&str]) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
            expected: expected.join(", "),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == b'+' { Add(b(lhs), b(rhs)) } else { Sub(b(lhs), b(rhs)) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == b'*' { Mul(b(lhs), b(rhs)) } else { Div(b(lhs), b(rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Neg(b(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Pow(b(base), b(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        const OPERAND: [&str; 6] = ["number", "x", "pi", "e", "function", "("];
        let Some(c) = self.peek() else {
            return Err(self.error("unexpected end of input", &OPERAND));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.error("unbalanced parenthesis", &[")"]));
            }
            self.pos += 1;
            return Ok(e);
        }
        if c.is_ascii_alphabetic() {
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            return match word {
                "x" => Ok(X),
                "pi" => Ok(Num(std::f64::consts::PI)),
                "e" => Ok(Num(std::f64::consts::E)),
                _ => {
                    let Some(&(_, f)) = Function::ALL.iter().find(|(n, _)| *n == word) else {
                        self.pos = start;
                        return Err(self.error(&format!("unknown identifier '{word}'"), &OPERAND));
                    };
                    if self.peek() != Some(b'(') {
                        return Err(self.error(&format!("function '{word}' needs an argument"), &["("]));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(self.error("unbalanced parenthesis", &[")"]));
                    }
                    self.pos += 1;
                    Ok(Call(f, b(arg)))
                }
            };
        }
        Err(self.error(&format!("unexpected character '{}'", c as char), &OPERAND))
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        // exponent only when followed by digits, so `2*e` style input still works
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                digits(&mut q);
                self.pos = q;
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap();
        text.parse::<f64>().map(Num).map_err(|_| {
            let pos = self.pos;
            self.pos = start;
            let mut e = self.error(&format!("malformed number '{text}'"), &["number"]);
            if let Error::Parse { position, .. } = &mut e {
                *position = start.min(pos);
            }
            e
        })
    }
}

/// Parses `src` into a callable.
pub fn parse_func(src: &str) -> Result<Func> {
    Expr::parse(src).map(Expr::into_func)
}
