//! Arbitrary-precision real scalars.
//!
//! Every [`BigReal`] carries the [`PrecisionContext`] it was created under.
//! There is no process-wide default precision: binary operations round to the
//! wider of their operands' contexts, so independent runs at different
//! precisions never interfere.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Rational};
use thiserror::Error;

/// Smallest mantissa width accepted by [`PrecisionContext::new`].
pub const MIN_BITS: u32 = 64;

/// Default working precision (about 1233 decimal digits).
pub const DEFAULT_BITS: u32 = 4096;

// rounded on purpose: 4096 bits must map to 1233 digits, which the exact value misses
#[allow(clippy::approx_constant)]
const LOG10_2_APPROX: f64 = 0.30103;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericError {
    #[error("precision of {0} bits is below the minimum of {MIN_BITS}")]
    PrecisionTooLow(u32),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse {text:?} as a decimal number")]
    Parse { text: String },
    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
}

/// Binary mantissa precision shared by a family of values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrecisionContext {
    bits: u32,
}

impl PrecisionContext {
    pub fn new(bits: u32) -> Result<Self, NumericError> {
        if bits < MIN_BITS {
            return Err(NumericError::PrecisionTooLow(bits));
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// `floor(bits * 0.30103)`.
    pub fn decimal_digits(&self) -> u32 {
        (self.bits as f64 * LOG10_2_APPROX).floor() as u32
    }

    /// Significant decimal digits needed so that formatting then parsing is
    /// the identity on every value of this precision.
    pub fn round_trip_digits(&self) -> u32 {
        (self.bits as f64 * std::f64::consts::LOG10_2).ceil() as u32 + 1
    }

    /// The same context with `factor` times the bits; used for oracles.
    pub fn scaled(&self, factor: u32) -> Self {
        Self {
            bits: self.bits * factor,
        }
    }

    pub fn zero(&self) -> BigReal {
        BigReal::from_int(0, *self)
    }

    pub fn one(&self) -> BigReal {
        BigReal::from_int(1, *self)
    }

    pub fn int(&self, v: i64) -> BigReal {
        BigReal::from_int(v, *self)
    }

    pub fn rational(&self, q: &Rational) -> BigReal {
        BigReal::from_rational(q, *self)
    }

    /// `10^exp`, rounded.
    pub fn pow10(&self, exp: i64) -> BigReal {
        let ten = Float::with_val(self.bits, 10);
        let exp = i32::try_from(exp).expect("decimal exponent out of range");
        BigReal::wrap(Float::with_val(self.bits, ten.pow(exp)), *self)
    }

    pub fn parse(&self, text: &str) -> Result<BigReal, NumericError> {
        parse_decimal(text, *self)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self { bits: DEFAULT_BITS }
    }
}

/// The elementary functions the benchmark suite needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Elementary {
    Exp,
    Sin,
    Cos,
    Ln,
}

impl Elementary {
    pub fn name(&self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Elementary::Exp,
            "sin" => Elementary::Sin,
            "cos" => Elementary::Cos,
            "ln" => Elementary::Ln,
            _ => return None,
        })
    }
}

/// An immutable arbitrary-precision float tagged with its context.
///
/// Equality is exact: two values are equal when they hold the same number
/// (the precision tag is not part of the comparison).
#[derive(Clone)]
pub struct BigReal {
    value: Float,
    ctx: PrecisionContext,
}

impl BigReal {
    fn wrap(value: Float, ctx: PrecisionContext) -> Self {
        debug_assert_eq!(value.prec(), ctx.bits);
        Self { value, ctx }
    }

    fn joint(&self, other: &BigReal) -> PrecisionContext {
        if other.ctx.bits > self.ctx.bits {
            other.ctx
        } else {
            self.ctx
        }
    }

    pub fn from_int(v: i64, ctx: PrecisionContext) -> Self {
        Self::wrap(Float::with_val(ctx.bits, v), ctx)
    }

    pub fn from_rational(q: &Rational, ctx: PrecisionContext) -> Self {
        Self::wrap(Float::with_val(ctx.bits, q), ctx)
    }

    pub fn from_f64(v: f64, ctx: PrecisionContext) -> Result<Self, NumericError> {
        if !v.is_finite() {
            return Err(NumericError::NonFinite("from_f64"));
        }
        Ok(Self::wrap(Float::with_val(ctx.bits, v), ctx))
    }

    pub fn context(&self) -> PrecisionContext {
        self.ctx
    }

    pub fn as_float(&self) -> &Float {
        &self.value
    }

    /// Rounds (or widens) to another context.
    pub fn with_context(&self, ctx: PrecisionContext) -> Self {
        Self::wrap(Float::with_val(ctx.bits, &self.value), ctx)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.value.is_sign_negative() && !self.value.is_zero()
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.value.clone().abs(), self.ctx)
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// Exact conversion to a rational (the value is finite by construction).
    pub fn to_rational(&self) -> Rational {
        self.value
            .to_rational()
            .expect("BigReal values are always finite")
    }

    pub fn checked_div(&self, rhs: &BigReal) -> Result<BigReal, NumericError> {
        if rhs.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        let ctx = self.joint(rhs);
        Ok(Self::wrap(
            Float::with_val(ctx.bits, &self.value / &rhs.value),
            ctx,
        ))
    }

    pub fn recip(&self) -> Result<BigReal, NumericError> {
        self.ctx.one().checked_div(self)
    }

    /// Integer power; negative exponents fail on zero.
    pub fn powi(&self, n: i32) -> Result<BigReal, NumericError> {
        if n < 0 && self.is_zero() {
            return Err(NumericError::DivisionByZero);
        }
        Ok(Self::wrap(
            Float::with_val(self.ctx.bits, (&self.value).pow(n)),
            self.ctx,
        ))
    }

    /// Real power `self^q` for positive bases.
    pub fn powr(&self, q: &Rational) -> Result<BigReal, NumericError> {
        if let Some(n) = q.is_integer().then(|| q.numer().to_i32()).flatten() {
            return self.powi(n);
        }
        if self.value.cmp0() != Some(Ordering::Greater) {
            return Err(NumericError::Domain(
                "non-integer power of a non-positive base".into(),
            ));
        }
        let exponent = Float::with_val(self.ctx.bits, q);
        Ok(Self::wrap(
            Float::with_val(self.ctx.bits, (&self.value).pow(&exponent)),
            self.ctx,
        ))
    }

    pub fn sqrt(&self) -> Result<BigReal, NumericError> {
        if self.is_sign_negative() {
            return Err(NumericError::Domain("sqrt of a negative number".into()));
        }
        Ok(Self::wrap(self.value.clone().sqrt(), self.ctx))
    }

    pub fn exp(&self) -> BigReal {
        Self::wrap(self.value.clone().exp(), self.ctx)
    }

    pub fn sin(&self) -> BigReal {
        Self::wrap(self.value.clone().sin(), self.ctx)
    }

    pub fn cos(&self) -> BigReal {
        Self::wrap(self.value.clone().cos(), self.ctx)
    }

    pub fn ln(&self) -> Result<BigReal, NumericError> {
        if self.value.cmp0() != Some(Ordering::Greater) {
            return Err(NumericError::Domain(format!(
                "ln of non-positive argument {}",
                format_scientific(self, 6)
            )));
        }
        Ok(Self::wrap(self.value.clone().ln(), self.ctx))
    }

    pub fn log10(&self) -> Result<BigReal, NumericError> {
        if self.value.cmp0() != Some(Ordering::Greater) {
            return Err(NumericError::Domain(
                "log10 of non-positive argument".into(),
            ));
        }
        Ok(Self::wrap(self.value.clone().log10(), self.ctx))
    }

    /// `floor(log10 |self|)`, or `None` for zero.
    pub fn decimal_exponent(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let a = self.abs();
        let guess = a.log10().ok()?.value.floor().to_f64() as i64;
        // log10 may round across an integer; settle with exact comparisons.
        let mut e = guess;
        while a < self.ctx.pow10(e) {
            e -= 1;
        }
        while a >= self.ctx.pow10(e + 1) {
            e += 1;
        }
        Some(e)
    }

    /// Unit in the last place of `self` at its precision (`ulp(0)` is the
    /// ulp of 1).
    pub fn ulp(&self) -> BigReal {
        let exp = self.value.get_exp().unwrap_or(1);
        let ulp = Float::with_val(self.ctx.bits, 1) << (exp - self.ctx.bits as i32);
        Self::wrap(ulp, self.ctx)
    }

    /// `|self - other|` measured in ulps of `max(|self|, |other|, floor)`.
    pub fn ulps_from(&self, other: &BigReal, floor: &BigReal) -> f64 {
        let diff = (self - other).abs();
        let mut scale = self.abs();
        for cand in [other.abs(), floor.abs()] {
            if cand > scale {
                scale = cand;
            }
        }
        diff.checked_div(&scale.ulp())
            .map(|q| q.to_f64())
            .unwrap_or(f64::INFINITY)
    }

    pub fn max(self, other: BigReal) -> BigReal {
        if other > self {
            other
        } else {
            self
        }
    }
}

/// Evaluates one of the suite's elementary functions.
pub fn eval_elementary(func: Elementary, x: &BigReal) -> Result<BigReal, NumericError> {
    if !x.is_finite() {
        return Err(NumericError::NonFinite(func.name()));
    }
    match func {
        Elementary::Exp => Ok(x.exp()),
        Elementary::Sin => Ok(x.sin()),
        Elementary::Cos => Ok(x.cos()),
        Elementary::Ln => x.ln(),
    }
}

fn is_decimal_literal(text: &str) -> bool {
    let b = text.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        digits += i - frac_start;
    }
    if digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

/// Parses `[sign] digits [. digits] [e [sign] digits]`, rounding to nearest.
pub fn parse_decimal(text: &str, ctx: PrecisionContext) -> Result<BigReal, NumericError> {
    let trimmed = text.trim();
    if !is_decimal_literal(trimmed) {
        return Err(NumericError::Parse { text: text.into() });
    }
    let parsed = Float::parse(trimmed).map_err(|_| NumericError::Parse { text: text.into() })?;
    let (value, _) = Float::with_val_round(ctx.bits, parsed, Round::Nearest);
    Ok(BigReal::wrap(value, ctx))
}

/// Exact rational value of a decimal literal (same grammar as [`parse_decimal`]).
pub fn parse_decimal_exact(text: &str) -> Result<Rational, NumericError> {
    let trimmed = text.trim();
    if !is_decimal_literal(trimmed) {
        return Err(NumericError::Parse { text: text.into() });
    }
    let err = || NumericError::Parse { text: text.into() };
    let (mantissa, exponent) = match trimmed.find(['e', 'E']) {
        Some(pos) => (
            &trimmed[..pos],
            trimmed[pos + 1..].parse::<i32>().map_err(|_| err())?,
        ),
        None => (trimmed, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    let digits = format!("{int_part}{frac_part}");
    let digits = match digits.as_str() {
        "" | "+" | "-" => return Err(err()),
        d => d,
    };
    let numer: rug::Integer = digits.parse().map_err(|_| err())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = rug::Integer::from(10);
    let q = if scale >= 0 {
        Rational::from(numer * ten.pow(scale as u32))
    } else {
        Rational::from((numer, ten.pow((-scale) as u32)))
    };
    Ok(q)
}

/// Decimal scientific notation `d.ddd…e±E` with `sig_digits` significant
/// digits, rounded to nearest. Zero formats as `"0"`.
pub fn format_scientific(x: &BigReal, sig_digits: usize) -> String {
    assert!(sig_digits >= 1, "sig_digits must be at least 1");
    if x.is_zero() {
        return "0".into();
    }
    let (negative, digits, exp) = x.value.to_sign_string_exp(10, Some(sig_digits));
    let exp = exp.expect("finite nonzero value has an exponent") - 1;
    let sign = if negative { "-" } else { "" };
    let (lead, rest) = digits.split_at(1);
    if rest.is_empty() {
        format!("{sign}{lead}e{exp:+}")
    } else {
        format!("{sign}{lead}.{rest}e{exp:+}")
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BigReal({}, {} bits)",
            format_scientific(self, 20),
            self.ctx.bits
        )
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f
            .precision()
            .unwrap_or(self.ctx.decimal_digits() as usize)
            .max(1);
        f.write_str(&format_scientific(self, digits))
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                let ctx = self.joint(rhs);
                BigReal::wrap(Float::with_val(ctx.bits, &self.value $op &rhs.value), ctx)
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal::wrap(-self.value.clone(), self.ctx)
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal::wrap(-self.value, self.ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(bits: u32) -> PrecisionContext {
        PrecisionContext::new(bits).unwrap()
    }

    #[test]
    fn context_digits() {
        assert_eq!(ctx(4096).decimal_digits(), 1233);
        assert_eq!(ctx(128).decimal_digits(), 38);
        assert_eq!(ctx(128).round_trip_digits(), 40);
        assert!(PrecisionContext::new(63).is_err());
    }

    #[test]
    fn trivial_elementary_values() {
        let c = ctx(256);
        assert!(eval_elementary(Elementary::Ln, &c.one()).unwrap().is_zero());
        assert!(eval_elementary(Elementary::Sin, &c.zero())
            .unwrap()
            .is_zero());
        assert_eq!(
            eval_elementary(Elementary::Cos, &c.zero()).unwrap(),
            c.one()
        );
        assert!(matches!(
            eval_elementary(Elementary::Ln, &c.int(-2)),
            Err(NumericError::Domain(_))
        ));
        assert!(eval_elementary(Elementary::Ln, &c.zero()).is_err());
    }

    #[test]
    fn exp_one_matches_rational_taylor_sum() {
        // Partial sums of 1/k! until the tail 2/(k+1)! is below 2^-260.
        let c = ctx(256);
        let mut sum = Rational::from(0);
        let mut term = Rational::from(1);
        let bound = Rational::from((1, rug::Integer::from(1) << 260u32));
        let mut k = 0u32;
        loop {
            sum += &term;
            k += 1;
            term /= k;
            if Rational::from(&term * 2u32) < bound {
                break;
            }
        }
        let oracle = BigReal::from_rational(&sum, c);
        let got = eval_elementary(Elementary::Exp, &c.one()).unwrap();
        assert!(got.ulps_from(&oracle, &c.one()) <= 2.0);
        assert!(
            format_scientific(&got, 77).starts_with("2.718281828459045235360287471352662497757")
        );
    }

    #[test]
    fn parse_exact_dyadic_and_rounding() {
        let c = ctx(128);
        assert_eq!(
            parse_decimal("0.25", c).unwrap(),
            c.rational(&Rational::from((1, 4)))
        );
        let v = parse_decimal("1.1", c).unwrap();
        assert_eq!(v, c.rational(&Rational::from((11, 10))));
        assert_eq!(parse_decimal("-3e2", c).unwrap(), c.int(-300));
        assert_eq!(
            parse_decimal("+.5", c).unwrap(),
            c.rational(&Rational::from((1, 2)))
        );
        for bad in [
            "", "abc", "1.2.3", "1e", "e5", ".", "1e+", "0x10", "inf", "nan", "1 2",
        ] {
            assert!(parse_decimal(bad, c).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn parse_exponent_matches_exact_bracket() {
        let c = ctx(256);
        let v = parse_decimal("2.71e-142", c).unwrap();
        let q = v.to_rational();
        let lo = Rational::from((1, rug::Integer::from(10).pow(142)));
        let hi = Rational::from((1, rug::Integer::from(10).pow(141)));
        assert!(lo <= q && q < hi);
        assert_eq!(v.decimal_exponent(), Some(-142));
    }

    #[test]
    fn exact_decimal_rationals() {
        assert_eq!(
            parse_decimal_exact("1.1").unwrap(),
            Rational::from((11, 10))
        );
        assert_eq!(
            parse_decimal_exact("-2.5e-3").unwrap(),
            Rational::from((-1, 400))
        );
        assert_eq!(parse_decimal_exact("15").unwrap(), Rational::from(15));
        assert!(parse_decimal_exact("1..").is_err());
    }

    #[test]
    fn scientific_formatting() {
        let c = ctx(128);
        assert_eq!(format_scientific(&c.zero(), 3), "0");
        assert_eq!(
            format_scientific(&c.rational(&Rational::from((1, 4))), 3),
            "2.50e-1"
        );
        assert_eq!(format_scientific(&c.int(-1234), 2), "-1.2e+3");
        assert_eq!(format_scientific(&c.int(7), 1), "7e+0");
        assert_eq!(format_scientific(&c.parse("9.999").unwrap(), 3), "1.00e+1");
    }

    #[test]
    fn decimal_exponent_at_powers_of_ten() {
        let c = ctx(200);
        assert_eq!(c.pow10(-6).decimal_exponent(), Some(-6));
        assert_eq!(c.int(1000).decimal_exponent(), Some(3));
        assert_eq!(c.int(999).decimal_exponent(), Some(2));
        assert_eq!(c.zero().decimal_exponent(), None);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let c = ctx(64);
        assert_eq!(
            c.one().checked_div(&c.zero()),
            Err(NumericError::DivisionByZero)
        );
        assert!(c.zero().powi(-1).is_err());
        assert!(c.int(-2).powr(&Rational::from((1, 2))).is_err());
        assert_eq!(c.int(4).powr(&Rational::from((1, 2))).unwrap(), c.int(2));
    }

    #[test]
    fn ulp_scale() {
        let c = ctx(64);
        assert_eq!(
            c.one().ulp(),
            BigReal::from_rational(&Rational::from((1, rug::Integer::from(1) << 63u32)), c)
        );
        let x = c.one();
        let y = &x + &x.ulp();
        assert_eq!(y.ulps_from(&x, &c.one()), 1.0);
    }

    #[test]
    fn mixed_contexts_use_wider_precision() {
        let a = ctx(64).one();
        let b = ctx(256).parse("1e-40").unwrap();
        let s = &a + &b;
        assert_eq!(s.context().bits(), 256);
        assert!(s > a);
    }
}
