//! Weight functions `W(t1, ..., t5)` and their declared Taylor conditions.

use std::collections::BTreeMap;
use std::fmt;

use rug::Rational;
use thiserror::Error;

use crate::bigreal::{parse_decimal_exact, BigReal, PrecisionContext};

use super::arith::{Arith, Scalars, Slots, StepFault, StepResult};

pub type Params = BTreeMap<String, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("weight {name}: cannot parse {source_text:?} at byte {offset}: {message}")]
    Parse {
        name: String,
        source_text: String,
        offset: usize,
        message: String,
    },
    #[error("weight {name}: exponent must not depend on t1..t5")]
    SlotInExponent { name: String },
    #[error("weight {name}: unknown parameter {param}")]
    UnknownParam { name: String, param: String },
    #[error("weight {name}: condition {index} expected {expected}, measured {measured}")]
    ConditionViolated {
        name: String,
        index: String,
        expected: String,
        measured: String,
    },
    #[error("weight {name}: cannot evaluate near zero: {message}")]
    Evaluation { name: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum WExpr {
    Num(Rational),
    Param(String),
    /// `t1` is slot 1.
    Slot(u8),
    Neg(Box<WExpr>),
    Add(Box<WExpr>, Box<WExpr>),
    Sub(Box<WExpr>, Box<WExpr>),
    Mul(Box<WExpr>, Box<WExpr>),
    Div(Box<WExpr>, Box<WExpr>),
    Pow(Box<WExpr>, Box<WExpr>),
}

impl WExpr {
    fn has_slot(&self) -> bool {
        match self {
            WExpr::Slot(_) => true,
            WExpr::Num(_) | WExpr::Param(_) => false,
            WExpr::Neg(a) => a.has_slot(),
            WExpr::Add(a, b)
            | WExpr::Sub(a, b)
            | WExpr::Mul(a, b)
            | WExpr::Div(a, b)
            | WExpr::Pow(a, b) => a.has_slot() || b.has_slot(),
        }
    }

    fn collect(&self, slots: &mut Vec<u8>, params: &mut Vec<String>) {
        match self {
            WExpr::Slot(k) => slots.push(*k),
            WExpr::Param(p) => params.push(p.clone()),
            WExpr::Num(_) => {}
            WExpr::Neg(a) => a.collect(slots, params),
            WExpr::Add(a, b)
            | WExpr::Sub(a, b)
            | WExpr::Mul(a, b)
            | WExpr::Div(a, b)
            | WExpr::Pow(a, b) => {
                a.collect(slots, params);
                b.collect(slots, params);
            }
        }
    }

    /// Exact value of a slot-free expression.
    fn exact<S, E: Scalars<S> + ?Sized>(&self, env: &E) -> Option<Rational> {
        Some(match self {
            WExpr::Num(q) => q.clone(),
            WExpr::Param(p) => env.param_exact(p)?,
            WExpr::Slot(_) => return None,
            WExpr::Neg(a) => -a.exact(env)?,
            WExpr::Add(a, b) => a.exact(env)? + b.exact(env)?,
            WExpr::Sub(a, b) => a.exact(env)? - b.exact(env)?,
            WExpr::Mul(a, b) => a.exact(env)? * b.exact(env)?,
            WExpr::Div(a, b) => {
                let d = b.exact(env)?;
                if d == 0 {
                    return None;
                }
                a.exact(env)? / d
            }
            WExpr::Pow(a, b) => {
                let e = b.exact(env)?;
                let n = e.is_integer().then(|| e.numer().to_i32()).flatten()?;
                let base = a.exact(env)?;
                if base == 0 && n < 0 {
                    return None;
                }
                let mut acc = Rational::from(1);
                for _ in 0..n.unsigned_abs() {
                    acc *= &base;
                }
                if n < 0 {
                    acc.recip()
                } else {
                    acc
                }
            }
        })
    }

    pub fn eval<S: Arith, E: Scalars<S> + ?Sized>(
        &self,
        slots: &Slots<S>,
        env: &E,
    ) -> StepResult<S> {
        Ok(match self {
            WExpr::Num(q) => env.constant(q),
            WExpr::Param(p) => env.param(p)?,
            WExpr::Slot(k) => slots[*k as usize - 1]
                .clone()
                .ok_or_else(|| StepFault::Algebra(format!("t{k} is not available here")))?,
            WExpr::Neg(a) => a.eval(slots, env)?.neg(),
            WExpr::Add(a, b) => a.eval(slots, env)?.add(&b.eval(slots, env)?),
            WExpr::Sub(a, b) => a.eval(slots, env)?.sub(&b.eval(slots, env)?),
            WExpr::Mul(a, b) => a.eval(slots, env)?.mul(&b.eval(slots, env)?),
            WExpr::Div(a, b) => a.eval(slots, env)?.div(&b.eval(slots, env)?)?,
            WExpr::Pow(a, b) => {
                let q = b
                    .exact(env)
                    .ok_or_else(|| StepFault::Algebra("exponent has no exact value".into()))?;
                let base = a.eval(slots, env)?;
                match q.is_integer().then(|| q.numer().to_i32()).flatten() {
                    Some(n) => base.powi(n)?,
                    None => base.powr(&q)?,
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            WExpr::Add(..) | WExpr::Sub(..) => 1,
            WExpr::Mul(..) | WExpr::Div(..) => 2,
            WExpr::Neg(_) => 3,
            WExpr::Pow(..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for WExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &WExpr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        let p = self.precedence();
        match self {
            WExpr::Num(q) if q.is_integer() => write!(f, "{q}"),
            WExpr::Num(q) => write!(f, "({q})"),
            WExpr::Param(name) => f.write_str(name),
            WExpr::Slot(k) => write!(f, "t{k}"),
            WExpr::Neg(a) => {
                f.write_str("-")?;
                child(f, a, a.precedence() < 3)
            }
            WExpr::Pow(a, b) => {
                child(f, a, a.precedence() < 5)?;
                f.write_str("^")?;
                child(f, b, b.precedence() < 3)
            }
            WExpr::Add(a, b) | WExpr::Sub(a, b) | WExpr::Mul(a, b) | WExpr::Div(a, b) => {
                let op = match self {
                    WExpr::Add(..) => "+",
                    WExpr::Sub(..) => "-",
                    WExpr::Mul(..) => "*",
                    _ => "/",
                };
                child(f, a, a.precedence() < p)?;
                f.write_str(op)?;
                child(f, b, b.precedence() <= p)
            }
        }
    }
}

struct WParser<'a> {
    src: &'a [u8],
    pos: usize,
}

type PResult<T> = Result<T, (usize, String)>;

impl WParser<'_> {
    fn peek(&mut self) -> Option<u8> {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn fail<T>(&self, msg: &str) -> PResult<T> {
        Err((self.pos, msg.to_string()))
    }

    fn expr(&mut self) -> PResult<WExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = WExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = WExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<WExpr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = WExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = WExpr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> PResult<WExpr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(WExpr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(WExpr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<WExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.fail("expected ')'");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                parse_decimal_exact(text)
                    .map(WExpr::Num)
                    .map_err(|_| (start, "malformed number".to_string()))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match name.strip_prefix('t').and_then(|d| d.parse::<u8>().ok()) {
                    Some(k @ 1..=5) => Ok(WExpr::Slot(k)),
                    _ => Ok(WExpr::Param(name.to_string())),
                }
            }
            _ => self.fail("expected a number, t1..t5, a parameter or '('"),
        }
    }
}

/// Multi-index over `t1..t5`.
pub type MultiIndex = [u8; 5];

pub fn multi_index_label(idx: &MultiIndex) -> String {
    let parts: Vec<String> = idx
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > 0)
        .map(|(i, e)| {
            if *e == 1 {
                format!("t{}", i + 1)
            } else {
                format!("t{}^{e}", i + 1)
            }
        })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// A coefficient of a symbolic weight expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum GenericCoef {
    Value(Rational),
    /// A named free symbol.
    Symbol(String),
    /// A polynomial in other symbols, e.g. `M0+1`.
    Poly(String),
}

/// A weight known only through some of its Taylor coefficients at 0.
/// Coefficients that are not listed are free symbols named after the
/// weight and the multi-index.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericWeight {
    pub fixed: Vec<(MultiIndex, GenericCoef)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightForm {
    Expr { source: String, expr: WExpr },
    Generic(GenericWeight),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    /// Partial derivative orders per slot.
    pub index: MultiIndex,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFn {
    name: String,
    slots: Vec<u8>,
    form: WeightForm,
    declared: Vec<Condition>,
}

impl WeightFn {
    /// Parses `source`, a formula in `t1..t5`, numbers and parameter names.
    pub fn expr(name: &str, source: &str) -> Result<WeightFn, WeightError> {
        let mut p = WParser {
            src: source.as_bytes(),
            pos: 0,
        };
        let parsed = p.expr().and_then(|e| {
            if p.peek().is_some() {
                Err((p.pos, "unexpected trailing input".to_string()))
            } else {
                Ok(e)
            }
        });
        let expr = parsed.map_err(|(offset, message)| WeightError::Parse {
            name: name.into(),
            source_text: source.into(),
            offset,
            message,
        })?;
        fn check_exponents(e: &WExpr, name: &str) -> Result<(), WeightError> {
            match e {
                WExpr::Pow(a, b) => {
                    if b.has_slot() {
                        return Err(WeightError::SlotInExponent { name: name.into() });
                    }
                    check_exponents(a, name)
                }
                WExpr::Neg(a) => check_exponents(a, name),
                WExpr::Add(a, b) | WExpr::Sub(a, b) | WExpr::Mul(a, b) | WExpr::Div(a, b) => {
                    check_exponents(a, name)?;
                    check_exponents(b, name)
                }
                _ => Ok(()),
            }
        }
        check_exponents(&expr, name)?;
        let mut slots = Vec::new();
        expr.collect(&mut slots, &mut Vec::new());
        slots.sort_unstable();
        slots.dedup();
        Ok(WeightFn {
            name: name.into(),
            slots,
            form: WeightForm::Expr {
                source: source.into(),
                expr,
            },
            declared: Vec::new(),
        })
    }

    pub fn generic(name: &str, slots: &[u8], fixed: Vec<(MultiIndex, GenericCoef)>) -> WeightFn {
        WeightFn {
            name: name.into(),
            slots: slots.to_vec(),
            form: WeightForm::Generic(GenericWeight { fixed }),
            declared: Vec::new(),
        }
    }

    /// The constant weight 1.
    pub fn unit(name: &str) -> WeightFn {
        WeightFn::expr(name, "1").expect("constant weight parses")
    }

    /// Adds a declared condition `d^index W (0) = value`.
    pub fn declare(mut self, index: MultiIndex, value: Rational) -> WeightFn {
        self.declared.push(Condition { index, value });
        self
    }

    /// True for the constant weight 1.
    pub fn is_unit(&self) -> bool {
        matches!(&self.form, WeightForm::Expr { expr: WExpr::Num(q), .. } if *q == 1)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slots(&self) -> &[u8] {
        &self.slots
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    pub fn form(&self) -> &WeightForm {
        &self.form
    }

    pub fn declared_conditions(&self) -> &[Condition] {
        &self.declared
    }

    pub fn params(&self) -> Vec<String> {
        let mut params = Vec::new();
        if let WeightForm::Expr { expr, .. } = &self.form {
            expr.collect(&mut Vec::new(), &mut params);
        }
        params.sort();
        params.dedup();
        params
    }

    pub fn eval<S: Arith, E: Scalars<S> + ?Sized>(
        &self,
        slots: &Slots<S>,
        env: &E,
    ) -> StepResult<S> {
        match &self.form {
            WeightForm::Expr { expr, .. } => expr.eval(slots, env),
            WeightForm::Generic(_) => Err(StepFault::Algebra(format!(
                "weight {} is generic and has no numeric value",
                self.name
            ))),
        }
    }

    /// Checks every declared condition by finite differences at 0.
    pub fn check_conditions(&self, params: &Params) -> Result<(), WeightError> {
        if self.declared.is_empty() || matches!(self.form, WeightForm::Generic(_)) {
            return Ok(());
        }
        let ctx = PrecisionContext::new(CHECK_BITS).expect("valid precision");
        let env = NumericParams { params, ctx };
        for p in self.params() {
            if !params.contains_key(&p) {
                return Err(WeightError::UnknownParam {
                    name: self.name.clone(),
                    param: p,
                });
            }
        }
        let h = ctx.pow10(-25);
        let tol = ctx.pow10(-(ctx.decimal_digits() as i64) / 2);
        for cond in &self.declared {
            let measured = self.derivative_at_zero(&cond.index, &h, &env)?;
            let expected = ctx.rational(&cond.value);
            let scale = expected.abs().max(ctx.one());
            if (&measured - &expected).abs() > &tol * &scale {
                return Err(WeightError::ConditionViolated {
                    name: self.name.clone(),
                    index: multi_index_label(&cond.index),
                    expected: cond.value.to_string(),
                    measured: crate::bigreal::format_scientific(&measured, 12),
                });
            }
        }
        Ok(())
    }

    /// Tensor-product five-point stencils; orders up to 2 per slot.
    fn derivative_at_zero(
        &self,
        index: &MultiIndex,
        h: &BigReal,
        env: &NumericParams<'_>,
    ) -> Result<BigReal, WeightError> {
        const D0: [i64; 5] = [0, 0, 1, 0, 0];
        const D1: [i64; 5] = [1, -8, 0, 8, -1];
        const D2: [i64; 5] = [-1, 16, -30, 16, -1];
        let ctx = env.ctx;
        let active: Vec<usize> = (0..5).filter(|&i| index[i] > 0).collect();
        if index.iter().any(|&o| o > 2) {
            return Err(WeightError::Evaluation {
                name: self.name.clone(),
                message: "only derivatives up to order 2 per argument are checked".into(),
            });
        }
        let mut total = ctx.zero();
        let combos = 5usize.pow(active.len() as u32);
        for c in 0..combos {
            let mut weight = 1i64;
            let mut slots: Slots<BigReal> = std::array::from_fn(|_| Some(ctx.zero()));
            let mut rest = c;
            for &i in &active {
                let k = rest % 5;
                rest /= 5;
                let stencil = match index[i] {
                    0 => &D0,
                    1 => &D1,
                    _ => &D2,
                };
                weight *= stencil[k];
                slots[i] = Some(h * &ctx.int(k as i64 - 2));
            }
            if weight == 0 {
                continue;
            }
            let v = self
                .eval(&slots, env)
                .map_err(|e| WeightError::Evaluation {
                    name: self.name.clone(),
                    message: format!("{e:?}"),
                })?;
            total = total + v * ctx.int(weight);
        }
        let mut denom = ctx.one();
        for &i in &active {
            let (k, p) = if index[i] == 1 { (12, 1) } else { (12, 2) };
            denom = denom * ctx.int(k) * h.powi(p).expect("nonzero step");
        }
        total
            .checked_div(&denom)
            .map_err(|e| WeightError::Evaluation {
                name: self.name.clone(),
                message: e.to_string(),
            })
    }
}

impl fmt::Display for WeightFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            WeightForm::Expr { expr, .. } => write!(f, "{} = {expr}", self.name),
            WeightForm::Generic(g) => {
                write!(f, "{} = generic(", self.name)?;
                for (k, (idx, c)) in g.fixed.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    let c = match c {
                        GenericCoef::Value(q) => q.to_string(),
                        GenericCoef::Symbol(s) | GenericCoef::Poly(s) => s.clone(),
                    };
                    write!(f, "[{}]={c}", multi_index_label(idx))?;
                }
                f.write_str(")")
            }
        }
    }
}

const CHECK_BITS: u32 = 512;

/// Parameter environment for numeric weight evaluation.
pub struct NumericParams<'a> {
    pub params: &'a Params,
    pub ctx: PrecisionContext,
}

impl Scalars<BigReal> for NumericParams<'_> {
    fn constant(&self, q: &Rational) -> BigReal {
        self.ctx.rational(q)
    }

    fn param(&self, name: &str) -> StepResult<BigReal> {
        self.params
            .get(name)
            .map(|q| self.ctx.rational(q))
            .ok_or_else(|| StepFault::Algebra(format!("unknown parameter {name}")))
    }

    fn param_exact(&self, name: &str) -> Option<Rational> {
        self.params.get(name).cloned()
    }
}
