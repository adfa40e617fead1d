//! Sparse multivariate Laurent polynomials with exact rational coefficients.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{OnceLock, RwLock};

use rug::Rational;
use rustc_hash::FxHashMap;
use smallvec::SmallVec;
use thiserror::Error;

/// An interned symbol name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u16);

#[derive(Default)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u16>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(Default::default)
}

impl Symbol {
    pub fn new(name: &str) -> Symbol {
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Symbol(id);
        }
        let mut table = interner().write().unwrap();
        if let Some(&id) = table.ids.get(name) {
            return Symbol(id);
        }
        let id = u16::try_from(table.names.len()).expect("symbol table overflow");
        table.names.push(name.to_string());
        table.ids.insert(name.to_string(), id);
        Symbol(id)
    }

    pub fn name(&self) -> String {
        interner().read().unwrap().names[self.0 as usize].clone()
    }
}

/// Display ordering: c-symbols by index, then everything else by name with
/// embedded numbers compared numerically.
fn name_key(name: &str) -> (u8, String, u64) {
    let split = name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (base, digits) = name.split_at(split);
    let index = digits.parse::<u64>().unwrap_or(0);
    let group = if base == "c" && !digits.is_empty() {
        0
    } else {
        1
    };
    (group, base.to_string(), index)
}

/// A product of symbol powers, sorted by symbol id, with nonzero exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(SmallVec<[(Symbol, i16); 6]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn var(s: Symbol, exp: i16) -> Self {
        let mut m = SmallVec::new();
        if exp != 0 {
            m.push((s, exp));
        }
        Monomial(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, s: Symbol) -> i16 {
        self.0.iter().find(|(t, _)| *t == s).map_or(0, |(_, e)| *e)
    }

    pub fn factors(&self) -> impl Iterator<Item = (Symbol, i16)> + '_ {
        self.0.iter().copied()
    }

    pub fn degree(&self) -> i32 {
        self.0.iter().map(|(_, e)| *e as i32).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let e = a[i].1 + b[j].1;
                    if e != 0 {
                        out.push((a[i].0, e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    pub fn inverse(&self) -> Monomial {
        Monomial(self.0.iter().map(|(s, e)| (*s, -e)).collect())
    }

    /// The monomial with symbol `s` removed.
    pub fn without(&self, s: Symbol) -> Monomial {
        Monomial(self.0.iter().copied().filter(|(t, _)| *t != s).collect())
    }

    fn sorted_named(&self) -> Vec<(String, i16)> {
        let mut v: Vec<(String, i16)> = self.0.iter().map(|(s, e)| (s.name(), *e)).collect();
        v.sort_by_key(|a| name_key(&a.0));
        v
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        for (k, (name, e)) in self.sorted_named().into_iter().enumerate() {
            if k > 0 {
                f.write_str("*")?;
            }
            if e == 1 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{name}^{e}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("cannot parse polynomial at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("{0} is not a unit of the coefficient ring")]
    NotInvertible(String),
    #[error("substitution for {0} would need an inverse of a non-monomial")]
    Substitution(String),
}

#[derive(Clone, Default, PartialEq, Eq)]
pub struct Poly {
    terms: FxHashMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::from(1))
    }

    pub fn constant(q: Rational) -> Self {
        Self::term(Monomial::one(), q)
    }

    pub fn int(v: i64) -> Self {
        Self::constant(Rational::from(v))
    }

    pub fn term(m: Monomial, q: Rational) -> Self {
        let mut p = Self::zero();
        if q != 0 {
            p.terms.insert(m, q);
        }
        p
    }

    pub fn symbol(name: &str) -> Self {
        Self::term(Monomial::var(Symbol::new(name), 1), Rational::from(1))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// The value when the polynomial is a pure rational constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::new()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn as_monomial(&self) -> Option<(&Monomial, &Rational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Inverse of a single-term polynomial.
    pub fn inverse(&self) -> Result<Poly, PolyError> {
        let (m, q) = self
            .as_monomial()
            .ok_or_else(|| PolyError::NotInvertible(self.to_string()))?;
        Ok(Poly::term(m.inverse(), Rational::from(q.recip_ref())))
    }

    fn add_term(&mut self, m: Monomial, q: Rational) {
        if q == 0 {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry(m) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += q;
                if *e.get() == 0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                e.insert(q);
            }
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for (m, q) in &other.terms {
            self.add_term(m.clone(), q.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &Poly) {
        for (m, q) in &other.terms {
            self.add_term(m.clone(), Rational::from(-q));
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        p.add_assign(other);
        p
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        p.sub_assign(other);
        p
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| (m.clone(), Rational::from(-q)))
                .collect(),
        }
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if *k == 0 {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, q)| (m.clone(), Rational::from(q * k)))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        self.mul_add_into(other, &mut out);
        out
    }

    /// `acc += self * other`.
    pub fn mul_add_into(&self, other: &Poly, acc: &mut Poly) {
        for (ma, qa) in &self.terms {
            for (mb, qb) in &other.terms {
                acc.add_term(ma.mul(mb), Rational::from(qa * qb));
            }
        }
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::one();
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Replaces every occurrence of `s` by `value`.
    pub fn substitute(&self, s: Symbol, value: &Poly) -> Result<Poly, PolyError> {
        let inverse = if self.terms.keys().any(|m| m.exponent(s) < 0) {
            Some(
                value
                    .inverse()
                    .map_err(|_| PolyError::Substitution(s.name()))?,
            )
        } else {
            None
        };
        let mut powers: Vec<Poly> = vec![Poly::one()];
        let mut inv_powers: Vec<Poly> = vec![Poly::one()];
        let mut out = Poly::zero();
        for (m, q) in &self.terms {
            let e = m.exponent(s);
            let rest = Poly::term(m.without(s), q.clone());
            let factor = if e >= 0 {
                while powers.len() <= e as usize {
                    let next = powers.last().unwrap().mul(value);
                    powers.push(next);
                }
                &powers[e as usize]
            } else {
                let inv = inverse.as_ref().unwrap();
                while inv_powers.len() <= (-e) as usize {
                    let next = inv_powers.last().unwrap().mul(inv);
                    inv_powers.push(next);
                }
                &inv_powers[(-e) as usize]
            };
            rest.mul_add_into(factor, &mut out);
        }
        Ok(out)
    }

    /// Whether any term mentions `s`.
    pub fn contains(&self, s: Symbol) -> bool {
        self.terms.keys().any(|m| m.exponent(s) != 0)
    }

    /// Coefficient polynomial of `s^k` (other symbols kept).
    pub fn coefficient_of(&self, s: Symbol, k: i16) -> Poly {
        let mut out = Poly::zero();
        for (m, q) in &self.terms {
            if m.exponent(s) == k {
                out.add_term(m.without(s), q.clone());
            }
        }
        out
    }

    /// Smallest and largest exponent of `s` over all terms.
    pub fn exponent_range(&self, s: Symbol) -> Option<(i16, i16)> {
        let mut iter = self.terms.keys().map(|m| m.exponent(s));
        let first = iter.next()?;
        Some(iter.fold((first, first), |(lo, hi), e| (lo.min(e), hi.max(e))))
    }

    fn sorted_terms(&self) -> Vec<(Vec<(String, i16)>, &Monomial, &Rational)> {
        let mut v: Vec<_> = self
            .terms
            .iter()
            .map(|(m, q)| (m.sorted_named(), m, q))
            .collect();
        v.sort_by(|a, b| monomial_order(&a.0, &b.0));
        v
    }

    pub fn parse(src: &str) -> Result<Poly, PolyError> {
        let mut p = PolyParser {
            src: src.as_bytes(),
            pos: 0,
        };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(out)
    }
}

/// Canonical order: higher total degree first, then lexicographic by
/// symbol (with exponents descending).
fn monomial_order(a: &[(String, i16)], b: &[(String, i16)]) -> Ordering {
    let deg = |m: &[(String, i16)]| m.iter().map(|(_, e)| *e as i32).sum::<i32>();
    deg(b).cmp(&deg(a)).then_with(|| {
        for (x, y) in a.iter().zip(b) {
            let o = name_key(&x.0).cmp(&name_key(&y.0)).then(y.1.cmp(&x.1));
            if o != Ordering::Equal {
                return o;
            }
        }
        b.len().cmp(&a.len())
    })
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (k, (_, m, q)) in self.sorted_terms().into_iter().enumerate() {
            let negative = *q < 0;
            let mag = Rational::from(q.abs_ref());
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

struct PolyParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl PolyParser<'_> {
    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error(&self, message: &str) -> PolyError {
        PolyError::Parse {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expr(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc.add_assign(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc.sub_assign(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, PolyError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let d = self.unary()?;
                    acc = acc.mul(&d.inverse()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, PolyError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let negative = if self.peek() == Some(b'-') {
                self.pos += 1;
                true
            } else {
                false
            };
            let n = self.integer()?;
            let p = base.pow(n);
            return if negative { p.inverse() } else { Ok(p) };
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u32, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.error("expected an integer exponent"))
    }

    fn atom(&mut self) -> Result<Poly, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                crate::bigreal::parse_decimal_exact(text)
                    .map(Poly::constant)
                    .map_err(|_| self.error("malformed number"))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self
                    .src
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_')
                {
                    self.pos += 1;
                }
                Ok(Poly::symbol(
                    std::str::from_utf8(&self.src[start..self.pos]).unwrap(),
                ))
            }
            _ => Err(self.error("expected a number, symbol or '('")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        Poly::parse(s).unwrap()
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = p("1 + c2");
        let b = p("1 - c2");
        assert_eq!(a.mul(&b), p("1 - c2^2"));
        assert_eq!(p("x/3 + x*2/3"), p("x"));
        assert!(p("a*b - b*a").is_zero());
    }

    #[test]
    fn laurent_units_cancel() {
        let m = p("3*c1^2*s");
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), Poly::one());
        assert_eq!(inv, p("1/3*c1^-2*s^-1"));
        assert!(p("1 + c1").inverse().is_err());
    }

    #[test]
    fn substitution() {
        let e = p("g0*c2 + g1*c2 + g2*c2 - c2");
        let g0 = p("1 - g1 - g2");
        assert!(e.substitute(Symbol::new("g0"), &g0).unwrap().is_zero());
        let e = p("c1^-1*s");
        let back = e.substitute(Symbol::new("s"), &p("1 - kappa*c1")).unwrap();
        assert_eq!(back, p("c1^-1 - kappa"));
        assert!(p("s^-1").substitute(Symbol::new("s"), &p("1-k")).is_err());
    }

    #[test]
    fn display_is_canonical() {
        let e = p("c3 - 2*c2^2 + c2*M0*c2 + 1/2");
        assert_eq!(e.to_string(), "c2^2*M0 - 2*c2^2 + c3 + 1/2");
        assert_eq!(p(&e.to_string()), e);
        assert_eq!(Poly::zero().to_string(), "0");
        assert_eq!(p("-c10 + c9").to_string(), "c9 - c10");
    }

    #[test]
    fn coefficient_extraction() {
        let e = p("a8*c2 + a8^2*c3 + c4");
        let a8 = Symbol::new("a8");
        assert_eq!(e.coefficient_of(a8, 1), p("c2"));
        assert_eq!(e.coefficient_of(a8, 0), p("c4"));
        assert_eq!(e.exponent_range(a8), Some((0, 2)));
    }
}
