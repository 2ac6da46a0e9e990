//! Coefficient and initial-condition expressions.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'pi' | 't' | 'x' digits | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | ln | sqrt | abs
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`. Variables are 1-based: `x1` is the first axis.

use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    /// 0-based axis index (`x1` is `Var(0)`).
    Var(usize),
    Time,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

pub fn eval_expr(e: &Expr, point: &[f64], t: f64) -> Result<f64> {
    e.eval(point, t)
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_expr(s)
    }
}

impl Expr {
    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => std::f64::consts::PI,
            Expr::Var(i) => *x.get(*i).ok_or_else(|| {
                Error::InvalidArgument(format!("x{} used but point has {} coordinates", i + 1, x.len()))
            })?,
            Expr::Time => t,
            Expr::Neg(a) => -a.eval(x, t)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, t)?, b.eval(x, t)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::Domain("division by zero".into()));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(x, t)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(Error::Domain(format!("ln of non-positive value {a}")));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative value {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("non-finite result in `{self}`")))
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_time(),
            Expr::Bin(_, a, b) => a.uses_time() || b.uses_time(),
        }
    }

    pub fn uses_var(&self, axis: usize) -> bool {
        match self {
            Expr::Var(i) => *i == axis,
            Expr::Num(_) | Expr::Pi | Expr::Time => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.uses_var(axis),
            Expr::Bin(_, a, b) => a.uses_var(axis) || b.uses_var(axis),
        }
    }

    /// Number of coordinates needed to evaluate, i.e. one past the largest
    /// variable index.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            Expr::Num(_) | Expr::Pi | Expr::Time => 0,
            Expr::Neg(a) | Expr::Call(_, a) => a.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
        }
    }

    /// True when the expression depends on no variable and not on time.
    pub fn is_constant(&self) -> bool {
        self.arity() == 0 && !self.uses_time()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Time => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    self.skip_ws();
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let ident = &self.src[start..self.pos];
                if ident == "pi" {
                    return Ok(Expr::Pi);
                }
                if ident == "t" {
                    return Ok(Expr::Time);
                }
                if let Some(digits) = ident.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let i: usize = digits.parse().map_err(|_| self.error("bad variable index"))?;
                        if i == 0 {
                            self.pos = start;
                            return Err(self.error("variables are numbered from x1"));
                        }
                        return Ok(Expr::Var(i - 1));
                    }
                }
                let Some(func) = Func::from_name(ident) else {
                    self.pos = start;
                    return Err(self.error(&format!("unknown identifier `{ident}`")));
                };
                if !self.eat('(') {
                    self.skip_ws();
                    return Err(self.error(&format!("expected `(` after `{ident}`")));
                }
                let arg = self.expr()?;
                let mut found = 1;
                while self.eat(',') {
                    self.expr()?;
                    found += 1;
                }
                if found != 1 {
                    return Err(Error::Arity { name: ident.to_string(), expected: 1, found });
                }
                if !self.eat(')') {
                    self.skip_ws();
                    return Err(self.error("expected `)`"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(c) => Err(self.error(&format!("unexpected character `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > s
        };
        let mut p = self.pos;
        let mut any = digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            any |= digits(&mut p);
        }
        if !any {
            return Err(self.error("malformed number"));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            }
        }
        self.pos = p;
        self.src[start..p]
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Syntax { offset: start, message: "malformed number".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(s: &str, x: &[f64], t: f64) -> f64 {
        parse_expr(s).unwrap().eval(x, t).unwrap()
    }

    #[test]
    fn caption_coefficients() {
        assert_eq!(ev("x2 - 0.5", &[0.25, 0.75], 3.0), 0.25);
        let c2 = parse_expr("-(1)*(x1 - 0.5 - 1.6*t)").unwrap();
        assert!(c2.uses_time());
        assert!(!c2.uses_var(1));
        assert!((c2.eval(&[0.7, 0.0], 0.1).unwrap() - 0.04 * -1.0).abs() < 1e-15);
    }

    #[test]
    fn constants_and_functions() {
        assert!((ev("exp(-1/3)", &[], 0.0) - 0.716_531_310_573_789_3).abs() < 1e-15);
        assert!((ev("sin(pi/2) + cos(0) + ln(exp(2)) + sqrt(16) + abs(-3)", &[], 0.0) - 11.0).abs() < 1e-14);
        assert_eq!(ev("2.5e-1", &[], 0.0), 0.25);
        assert_eq!(ev(".5", &[], 0.0), 0.5);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", &[], 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", &[], 0.0), -4.0);
        assert_eq!(ev("2 ^ -1", &[], 0.0), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[], 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", &[], 0.0), -4.0);
        assert_eq!(ev("--3", &[], 0.0), 3.0);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let text = "sin(2*pi*x1";
        match parse_expr(text) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, text.len()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("x1 + y"), Err(Error::Syntax { offset: 5, .. })));
        assert!(matches!(parse_expr("x0"), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_expr("1 +"), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr("(1))"), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_expr("sin x1"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_expr("foo(1)"), Err(Error::Syntax { offset: 0, .. })));
        assert_eq!(
            parse_expr("sin(1, 2)"),
            Err(Error::Arity { name: "sin".into(), expected: 1, found: 2 })
        );
    }

    #[test]
    fn domain_errors() {
        let e = parse_expr("1/ (x1-x1)").unwrap();
        assert!(matches!(e.eval(&[0.3], 0.0), Err(Error::Domain(_))));
        assert!(matches!(parse_expr("ln(x1)").unwrap().eval(&[0.0], 0.0), Err(Error::Domain(_))));
        assert!(matches!(parse_expr("sqrt(-1)").unwrap().eval(&[], 0.0), Err(Error::Domain(_))));
        assert!(matches!(parse_expr("(-1)^0.5").unwrap().eval(&[], 0.0), Err(Error::Domain(_))));
        assert!(matches!(parse_expr("x3").unwrap().eval(&[0.1, 0.2], 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn introspection() {
        let e = parse_expr("x2 * sin(t) + x4").unwrap();
        assert_eq!(e.arity(), 4);
        assert!(e.uses_var(1) && e.uses_var(3) && !e.uses_var(0));
        assert!(parse_expr("pi * 2").unwrap().is_constant());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Num),
            Just(Expr::Pi),
            Just(Expr::Time),
            (0usize..3).prop_map(Expr::Var),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Ln),
                        Just(Func::Sqrt),
                        Just(Func::Abs)
                    ],
                    inner
                )
                    .prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_fixed_point(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse_expr(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }

        #[test]
        fn whitespace_insensitive(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let tight = format!("{a:?}*x1+{b:?}^2-t");
            let loose = format!("  {a:?} *\tx1 +  {b:?} ^ 2 -  t ");
            prop_assert_eq!(parse_expr(&tight).unwrap(), parse_expr(&loose).unwrap());
        }
    }
}
