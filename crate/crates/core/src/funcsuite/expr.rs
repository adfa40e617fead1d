//! Univariate expression trees: parsing, printing, evaluation and symbolic
//! differentiation.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := base ('^' unary)?
//! base  := NUMBER | 'x' | FUNC '(' expr ')' | '(' expr ')'
//! FUNC  := 'exp' | 'sin' | 'cos' | 'ln'
//! ```
//!
//! Exponents must be constant expressions with an exact integer value, so
//! differentiation never leaves the representable set.

use std::fmt;

use rug::Rational;
use thiserror::Error;

use crate::bigreal::{eval_elementary, parse_decimal_exact, BigReal, Elementary, NumericError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier {name:?} at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("exponent at byte {offset} is not a constant integer")]
    NonIntegerExponent { offset: usize },
}

/// A decimal literal together with its exact value.
#[derive(Debug, Clone)]
pub struct Literal {
    text: String,
    value: Rational,
}

impl Literal {
    pub fn integer(v: i64) -> Self {
        Self {
            text: v.to_string(),
            value: Rational::from(v),
        }
    }

    pub fn parse(text: &str) -> Result<Self, NumericError> {
        Ok(Self {
            text: text.to_string(),
            value: parse_decimal_exact(text)?,
        })
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    fn from_rational(value: Rational) -> Self {
        let text = if value.is_integer() {
            value.numer().to_string()
        } else {
            format!("{}/{}", value.numer(), value.denom())
        };
        Self { text, value }
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Literal),
    X,
    Neg(Box<Expr>),
    Call(Elementary, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Base, exponent expression as written, and its integer value.
    Pow(Box<Expr>, Box<Expr>, i32),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Num(Literal::integer(v))
    }

    pub fn call(func: Elementary, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    pub fn powi(base: Expr, n: i32) -> Expr {
        let exponent = if n < 0 {
            Expr::Neg(Box::new(Expr::int(-(n as i64))))
        } else {
            Expr::int(n as i64)
        };
        Expr::Pow(Box::new(base), Box::new(exponent), n)
    }

    pub fn evaluate(&self, x: &BigReal) -> Result<BigReal, NumericError> {
        let ctx = x.context();
        Ok(match self {
            Expr::Num(lit) => ctx.rational(&lit.value),
            Expr::X => x.clone(),
            Expr::Neg(u) => -u.evaluate(x)?,
            Expr::Call(func, u) => eval_elementary(*func, &u.evaluate(x)?)?,
            Expr::Add(a, b) => a.evaluate(x)? + b.evaluate(x)?,
            Expr::Sub(a, b) => a.evaluate(x)? - b.evaluate(x)?,
            Expr::Mul(a, b) => a.evaluate(x)? * b.evaluate(x)?,
            Expr::Div(a, b) => {
                let den = b.evaluate(x)?;
                if den.is_zero() {
                    return Err(NumericError::Domain(format!("division by zero in {self}")));
                }
                a.evaluate(x)?.checked_div(&den)?
            }
            Expr::Pow(base, _, n) => {
                let b = base.evaluate(x)?;
                if *n < 0 && b.is_zero() {
                    return Err(NumericError::Domain(format!(
                        "zero to a negative power in {self}"
                    )));
                }
                b.powi(*n)?
            }
        })
    }

    fn constant_value(&self) -> Option<Rational> {
        Some(match self {
            Expr::Num(lit) => lit.value.clone(),
            Expr::X | Expr::Call(..) => return None,
            Expr::Neg(u) => -u.constant_value()?,
            Expr::Add(a, b) => a.constant_value()? + b.constant_value()?,
            Expr::Sub(a, b) => a.constant_value()? - b.constant_value()?,
            Expr::Mul(a, b) => a.constant_value()? * b.constant_value()?,
            Expr::Div(a, b) => {
                let d = b.constant_value()?;
                if d == 0 {
                    return None;
                }
                a.constant_value()? / d
            }
            Expr::Pow(base, _, n) => {
                let b = base.constant_value()?;
                if b == 0 && *n < 0 {
                    return None;
                }
                rational_powi(&b, *n)
            }
        })
    }

    fn is_const(&self, v: i64) -> bool {
        matches!(self, Expr::Num(lit) if lit.value == v)
    }

    /// Symbolic derivative with respect to `x`.
    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Num(_) => Expr::int(0),
            Expr::X => Expr::int(1),
            Expr::Neg(u) => s_neg(u.differentiate()),
            Expr::Add(a, b) => s_add(a.differentiate(), b.differentiate()),
            Expr::Sub(a, b) => s_sub(a.differentiate(), b.differentiate()),
            Expr::Mul(a, b) => s_add(
                s_mul(a.differentiate(), (**b).clone()),
                s_mul((**a).clone(), b.differentiate()),
            ),
            Expr::Div(a, b) => {
                let db = b.differentiate();
                if db.is_const(0) {
                    return s_div(a.differentiate(), (**b).clone());
                }
                s_div(
                    s_sub(
                        s_mul(a.differentiate(), (**b).clone()),
                        s_mul((**a).clone(), db),
                    ),
                    s_pow((**b).clone(), 2),
                )
            }
            Expr::Pow(base, _, n) => s_mul(
                s_mul(Expr::int(*n as i64), s_pow((**base).clone(), n - 1)),
                base.differentiate(),
            ),
            Expr::Call(func, u) => {
                let du = u.differentiate();
                let outer = match func {
                    Elementary::Exp => self.clone(),
                    Elementary::Sin => Expr::call(Elementary::Cos, (**u).clone()),
                    Elementary::Cos => s_neg(Expr::call(Elementary::Sin, (**u).clone())),
                    Elementary::Ln => return s_div(du, (**u).clone()),
                };
                s_mul(outer, du)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::X | Expr::Call(..) => 5,
        }
    }
}

fn rational_powi(b: &Rational, n: i32) -> Rational {
    let mut acc = Rational::from(1);
    for _ in 0..n.unsigned_abs() {
        acc *= b;
    }
    if n < 0 {
        acc.recip()
    } else {
        acc
    }
}

fn folded(v: Rational) -> Expr {
    if v < 0 {
        Expr::Neg(Box::new(Expr::Num(Literal::from_rational(-v))))
    } else {
        Expr::Num(Literal::from_rational(v))
    }
}

fn both_integers(a: &Expr, b: &Expr) -> Option<(Rational, Rational)> {
    let (x, y) = (a.constant_value()?, b.constant_value()?);
    (x.is_integer() && y.is_integer()).then_some((x, y))
}

fn s_neg(a: Expr) -> Expr {
    match a {
        Expr::Num(ref lit) if lit.value == 0 => a,
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn s_add(a: Expr, b: Expr) -> Expr {
    if a.is_const(0) {
        return b;
    }
    if b.is_const(0) {
        return a;
    }
    if let Some((x, y)) = both_integers(&a, &b) {
        return folded(x + y);
    }
    if let Expr::Neg(inner) = b {
        return Expr::Sub(Box::new(a), inner);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn s_sub(a: Expr, b: Expr) -> Expr {
    if b.is_const(0) {
        return a;
    }
    if a.is_const(0) {
        return s_neg(b);
    }
    if let Some((x, y)) = both_integers(&a, &b) {
        return folded(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn s_mul(a: Expr, b: Expr) -> Expr {
    if a.is_const(0) || b.is_const(0) {
        return Expr::int(0);
    }
    if a.is_const(1) {
        return b;
    }
    if b.is_const(1) {
        return a;
    }
    if let Some((x, y)) = both_integers(&a, &b) {
        return folded(x * y);
    }
    match (a, b) {
        (Expr::Neg(u), v) => s_neg(s_mul(*u, v)),
        (u, Expr::Neg(v)) => s_neg(s_mul(u, *v)),
        (u, v) => Expr::Mul(Box::new(u), Box::new(v)),
    }
}

fn s_div(a: Expr, b: Expr) -> Expr {
    if a.is_const(0) {
        return Expr::int(0);
    }
    if b.is_const(1) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn s_pow(base: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::int(1),
        1 => base,
        _ => Expr::powi(base, n),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        let p = self.precedence();
        match self {
            Expr::Num(lit) => f.write_str(&lit.text),
            Expr::X => f.write_str("x"),
            Expr::Call(func, u) => write!(f, "{}({u})", func.name()),
            Expr::Neg(u) => {
                f.write_str("-")?;
                child(f, u, u.precedence() < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = match self {
                    Expr::Add(..) => "+",
                    Expr::Sub(..) => "-",
                    Expr::Mul(..) => "*",
                    _ => "/",
                };
                child(f, a, a.precedence() < p)?;
                f.write_str(op)?;
                child(f, b, b.precedence() <= p)
            }
            Expr::Pow(base, exponent, _) => {
                child(f, base, base.precedence() < 5)?;
                f.write_str("^")?;
                child(f, exponent, exponent.precedence() < 3)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(u8),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|t| (t, start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self
                .src
                .get(self.pos)
                .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
            {
                self.pos += 1;
            }
            let name = String::from_utf8_lossy(&self.src[start..self.pos]).into_owned();
            return Ok((Tok::Ident(name), start));
        }
        if b"+-*/^()".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character {:?}", c as char),
        })
    }

    fn number(&mut self, start: usize) -> Result<Tok, ExprError> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ExprError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
            }
        }
        Ok(Tok::Num(
            String::from_utf8_lossy(&self.src[start..self.pos]).into_owned(),
        ))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<(), ExprError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn eat(&mut self, sym: u8) -> Result<bool, ExprError> {
        if self.tok == Tok::Sym(sym) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, sym: u8) -> Result<(), ExprError> {
        if self.eat(sym)? {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected '{}'", sym as char)))
        }
    }

    fn unexpected(&self, what: &str) -> ExprError {
        let found = match &self.tok {
            Tok::Num(s) | Tok::Ident(s) => s.clone(),
            Tok::Sym(c) => (*c as char).to_string(),
            Tok::End => "end of input".into(),
        };
        ExprError::Syntax {
            offset: self.offset,
            message: format!("{what}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+')? {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-')? {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*')? {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/')? {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-')? {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        if !self.eat(b'^')? {
            return Ok(base);
        }
        let at = self.offset;
        let exponent = self.unary()?;
        let n = exponent
            .constant_value()
            .filter(Rational::is_integer)
            .and_then(|q| q.numer().to_i32())
            .ok_or(ExprError::NonIntegerExponent { offset: at })?;
        Ok(Expr::Pow(Box::new(base), Box::new(exponent), n))
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Tok::Num(text) => {
                let lit = Literal::parse(&text).map_err(|_| ExprError::Syntax {
                    offset: self.offset,
                    message: format!("malformed number {text:?}"),
                })?;
                self.advance()?;
                Ok(Expr::Num(lit))
            }
            Tok::Ident(name) => {
                let at = self.offset;
                if name == "x" {
                    self.advance()?;
                    return Ok(Expr::X);
                }
                let func = Elementary::from_name(&name)
                    .ok_or(ExprError::UnknownIdentifier { name, offset: at })?;
                self.advance()?;
                self.expect(b'(')?;
                let arg = self.expr()?;
                self.expect(b')')?;
                Ok(Expr::call(func, arg))
            }
            Tok::Sym(b'(') => {
                self.advance()?;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            _ => Err(self.unexpected("expected a number, 'x', a function or '('")),
        }
    }
}

/// Parses an expression in `x`.
pub fn parse_expression(src: &str) -> Result<Expr, ExprError> {
    let mut parser = Parser {
        lexer: Lexer {
            src: src.as_bytes(),
            pos: 0,
        },
        tok: Tok::End,
        offset: 0,
    };
    parser.advance()?;
    let e = parser.expr()?;
    if parser.tok != Tok::End {
        return Err(parser.unexpected("expected an operator or end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigreal::PrecisionContext;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(256).unwrap()
    }

    fn b(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn parses_variable() {
        assert_eq!(parse_expression("x").unwrap(), Expr::X);
        assert_eq!(parse_expression("  ( x ) ").unwrap(), Expr::X);
    }

    #[test]
    fn f1_tree_matches_hand_built() {
        let hand = Expr::Add(
            b(Expr::Mul(
                b(Expr::call(Elementary::Exp, Expr::X)),
                b(Expr::call(Elementary::Sin, Expr::X)),
            )),
            b(Expr::call(
                Elementary::Ln,
                Expr::Add(b(Expr::int(1)), b(Expr::powi(Expr::X, 2))),
            )),
        );
        assert_eq!(parse_expression("exp(x)*sin(x)+ln(1+x^2)").unwrap(), hand);
    }

    #[test]
    fn power_is_right_associative() {
        let parsed = parse_expression("2^3^2").unwrap();
        let hand = Expr::Pow(
            b(Expr::int(2)),
            b(Expr::Pow(b(Expr::int(3)), b(Expr::int(2)), 2)),
            9,
        );
        assert_eq!(parsed, hand);
        assert_eq!(parsed.evaluate(&ctx().zero()).unwrap(), ctx().int(512));
    }

    #[test]
    fn precedence_of_unary_minus() {
        let v = parse_expression("-x^2")
            .unwrap()
            .evaluate(&ctx().int(3))
            .unwrap();
        assert_eq!(v, ctx().int(-9));
        let v = parse_expression("2*-x+1")
            .unwrap()
            .evaluate(&ctx().int(3))
            .unwrap();
        assert_eq!(v, ctx().int(-5));
        let v = parse_expression("8/2/2-1-1")
            .unwrap()
            .evaluate(&ctx().zero())
            .unwrap();
        assert_eq!(v, ctx().zero());
        let v = parse_expression("2^-1-1")
            .unwrap()
            .evaluate(&ctx().zero())
            .unwrap();
        assert_eq!(v, ctx().parse("-0.5").unwrap());
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert!(matches!(
            parse_expression("x+*2"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("tan(x)"),
            Err(ExprError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            parse_expression("1 + y"),
            Err(ExprError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            parse_expression("(x"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("x)"),
            Err(ExprError::Syntax { offset: 1, .. })
        ));
        assert!(matches!(
            parse_expression(""),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expression("x # 2"),
            Err(ExprError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse_expression("x^0.5"),
            Err(ExprError::NonIntegerExponent { offset: 2 })
        ));
        assert!(matches!(
            parse_expression("2^x"),
            Err(ExprError::NonIntegerExponent { .. })
        ));
    }

    #[test]
    fn numbers_with_exponents() {
        let e = parse_expression("2.5e-1*x").unwrap();
        assert_eq!(e.evaluate(&ctx().int(4)).unwrap(), ctx().one());
        // `2e` is not an exponent: the trailing identifier is rejected.
        assert!(parse_expression("2exp(x)").is_err());
    }

    #[test]
    fn printing_round_trips() {
        for src in [
            "x^15+x^4+4*x^2-15",
            "(x-2)*(x^10+x+1)*exp(-x-1)",
            "(x^2-1)^-1-1",
            "x-(x-1)",
            "x/(2*x)",
            "(-x)^2",
            "--x",
            "2^3^2",
            "(2^3)^2",
        ] {
            let e = parse_expression(src).unwrap();
            assert_eq!(e.to_string(), src);
            assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn derivative_of_square() {
        let d = parse_expression("x^2").unwrap().differentiate();
        assert_eq!(d.evaluate(&ctx().int(3)).unwrap(), ctx().int(6));
    }

    #[test]
    fn derivative_of_f1_at_zero() {
        let d = parse_expression("exp(x)*sin(x)+ln(1+x^2)")
            .unwrap()
            .differentiate();
        assert_eq!(d.evaluate(&ctx().zero()).unwrap(), ctx().one());
    }

    #[test]
    fn derivative_of_constants_and_quotients() {
        let d = parse_expression("x/5").unwrap().differentiate();
        assert_eq!(d.to_string(), "1/5");
        let d = parse_expression("1/x").unwrap().differentiate();
        assert_eq!(
            d.evaluate(&ctx().int(2)).unwrap(),
            ctx().parse("-0.25").unwrap()
        );
        let d = parse_expression("(x^2-1)^-1").unwrap().differentiate();
        // -2x/(x^2-1)^2 at x=2 is -4/9
        let want = ctx().int(-4).checked_div(&ctx().int(9)).unwrap();
        assert!(
            d.evaluate(&ctx().int(2))
                .unwrap()
                .ulps_from(&want, &ctx().one())
                <= 2.0
        );
        assert_eq!(parse_expression("7").unwrap().differentiate(), Expr::int(0));
    }

    #[test]
    fn domain_errors() {
        let e = parse_expression("ln(x)").unwrap();
        assert!(matches!(
            e.evaluate(&ctx().zero()),
            Err(NumericError::Domain(_))
        ));
        let e = parse_expression("(x^2-1)^-1-1").unwrap();
        assert!(matches!(
            e.evaluate(&ctx().one()),
            Err(NumericError::Domain(_))
        ));
        let e = parse_expression("1/(x-1)").unwrap();
        assert!(matches!(
            e.evaluate(&ctx().one()),
            Err(NumericError::Domain(_))
        ));
    }
}
