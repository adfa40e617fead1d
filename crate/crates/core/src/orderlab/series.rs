//! Truncated power series in the error symbol `e` with `Poly` coefficients.
//!
//! Every series carries an absolute precision: coefficients of `e^k` for
//! `k < prec` are exact, everything from `e^prec` on is unknown. Constants
//! have unbounded precision.

use std::fmt;

use rug::Rational;
use thiserror::Error;

use super::poly::{Poly, PolyError};

/// Precision marker for series that are exact (finite, fully known).
pub const EXACT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("leading coefficient {0} is not invertible")]
    NonInvertibleLeadingCoefficient(String),
    #[error("division by a series with no known nonzero coefficient")]
    DivisionByZero,
    #[error("quotient would have negative valuation")]
    NegativeValuation,
    #[error("argument must vanish at the root (valuation {0})")]
    Valuation(u32),
    #[error("real power needs a unit constant term")]
    RealPower,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Series {
    coeffs: Vec<Poly>,
    prec: u32,
}

fn sat_add(a: u32, b: u32) -> u32 {
    a.saturating_add(b)
}

impl Series {
    pub fn zero() -> Self {
        Self {
            coeffs: Vec::new(),
            prec: EXACT,
        }
    }

    pub fn constant(p: Poly) -> Self {
        Self::from_coeffs(vec![p], EXACT)
    }

    pub fn rational(q: Rational) -> Self {
        Self::constant(Poly::constant(q))
    }

    /// The error symbol itself, known to absolute precision `prec`.
    pub fn variable(prec: u32) -> Self {
        Self::from_coeffs(vec![Poly::zero(), Poly::one()], prec)
    }

    pub fn from_coeffs(mut coeffs: Vec<Poly>, prec: u32) -> Self {
        if (coeffs.len() as u64) > prec as u64 {
            coeffs.truncate(prec as usize);
        }
        while coeffs.last().is_some_and(Poly::is_zero) {
            coeffs.pop();
        }
        Self { coeffs, prec }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeff(&self, k: usize) -> Poly {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[Poly] {
        &self.coeffs
    }

    /// Index of the first nonzero coefficient; equals `prec` for a series
    /// with no known nonzero term.
    pub fn valuation(&self) -> u32 {
        self.coeffs
            .iter()
            .position(|p| !p.is_zero())
            .map_or(self.prec, |k| k as u32)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec == EXACT
    }

    pub fn truncate(&self, prec: u32) -> Series {
        Self::from_coeffs(self.coeffs.clone(), self.prec.min(prec))
    }

    pub fn add(&self, o: &Series) -> Series {
        self.combine(o, false)
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.combine(o, true)
    }

    fn combine(&self, o: &Series, negate: bool) -> Series {
        let prec = self.prec.min(o.prec);
        let len = self.coeffs.len().max(o.coeffs.len());
        let mut out = Vec::with_capacity(len);
        for k in 0..len {
            let mut c = self.coeffs.get(k).cloned().unwrap_or_default();
            if let Some(d) = o.coeffs.get(k) {
                if negate {
                    c.sub_assign(d);
                } else {
                    c.add_assign(d);
                }
            }
            out.push(c);
        }
        Self::from_coeffs(out, prec)
    }

    pub fn neg(&self) -> Series {
        Self {
            coeffs: self.coeffs.iter().map(Poly::neg).collect(),
            prec: self.prec,
        }
    }

    pub fn scale(&self, p: &Poly) -> Series {
        Self::from_coeffs(self.coeffs.iter().map(|c| c.mul(p)).collect(), self.prec)
    }

    pub fn mul(&self, o: &Series) -> Series {
        let (va, vb) = (self.valuation(), o.valuation());
        let prec = sat_add(self.prec, vb).min(sat_add(o.prec, va));
        let max_len = self.coeffs.len() + o.coeffs.len();
        let len = if prec == EXACT {
            max_len.saturating_sub(1)
        } else {
            (prec as usize).min(max_len.saturating_sub(1))
        };
        let mut out = vec![Poly::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if !b.is_zero() {
                    a.mul_add_into(b, &mut out[i + j]);
                }
            }
        }
        Self::from_coeffs(out, prec)
    }

    pub fn div(&self, den: &Series) -> Result<Series, SeriesError> {
        let v = den.valuation();
        if v as usize >= den.coeffs.len() {
            return Err(SeriesError::DivisionByZero);
        }
        let lead_inv = den.coeffs[v as usize].inverse().map_err(|_| {
            SeriesError::NonInvertibleLeadingCoefficient(den.coeffs[v as usize].to_string())
        })?;
        if self.coeffs.is_empty() {
            let prec = if self.prec == EXACT {
                EXACT
            } else {
                self.prec.saturating_sub(v)
            };
            return Ok(Series {
                coeffs: Vec::new(),
                prec,
            });
        }
        let vn = self.valuation();
        if vn < v {
            return Err(SeriesError::NegativeValuation);
        }
        let shift = v as usize;
        let num: Vec<&Poly> = self.coeffs.iter().skip(shift).collect();
        let d: Vec<&Poly> = den.coeffs.iter().skip(shift).collect();
        let num_prec = if self.prec == EXACT {
            EXACT
        } else {
            self.prec - v
        };
        let den_prec = if den.prec == EXACT {
            EXACT
        } else {
            den.prec - v
        };
        let q_val = vn - v;
        let mut prec = num_prec.min(sat_add(den_prec, q_val));
        if prec == EXACT {
            if d.len() == 1 {
                // Division by a constant: exact.
                let coeffs = num.iter().map(|c| c.mul(&lead_inv)).collect();
                return Ok(Self::from_coeffs(coeffs, EXACT));
            }
            prec = (num.len() + 16) as u32;
        }
        let mut q: Vec<Poly> = Vec::with_capacity(prec as usize);
        for k in 0..prec as usize {
            let mut acc = num.get(k).map(|p| (*p).clone()).unwrap_or_default();
            for j in 1..=k.min(d.len().saturating_sub(1)) {
                if !d[j].is_zero() && !q[k - j].is_zero() {
                    acc.sub_assign(&d[j].mul(&q[k - j]));
                }
            }
            q.push(acc.mul(&lead_inv));
        }
        Ok(Self::from_coeffs(q, prec))
    }

    pub fn powi(&self, n: i32) -> Result<Series, SeriesError> {
        let mut acc = Series::rational(Rational::from(1));
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(self);
        }
        if n < 0 {
            Series::rational(Rational::from(1)).div(&acc)
        } else {
            Ok(acc)
        }
    }

    /// `self^q` by the binomial series; the constant term must be exactly 1.
    pub fn powr(&self, q: &Rational) -> Result<Series, SeriesError> {
        if q.is_integer() {
            if let Some(n) = q.numer().to_i32() {
                return self.powi(n);
            }
        }
        if self.coeff(0) != Poly::one() {
            return Err(SeriesError::RealPower);
        }
        let x = self.sub(&Series::rational(Rational::from(1)));
        let vx = x.valuation();
        if x.coeffs.is_empty() {
            return Ok(Series::rational(Rational::from(1)).truncate(self.prec));
        }
        let prec = self.prec;
        let mut out = Series::rational(Rational::from(1));
        let mut power = Series::rational(Rational::from(1));
        let mut binom = Rational::from(1);
        let mut k = 0u32;
        while (k + 1).saturating_mul(vx) < prec {
            binom = binom * (q.clone() - k) / (k + 1);
            power = power.mul(&x).truncate(prec);
            k += 1;
            out = out.add(&power.scale(&Poly::constant(binom.clone())));
        }
        Ok(out.truncate(prec))
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*e")?,
                _ => write!(f, "({c})*e^{k}")?,
            }
        }
        if self.prec != EXACT {
            if !first {
                f.write_str(" + ")?;
            }
            write!(f, "O(e^{})", self.prec)?;
        } else if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[{self}]")
    }
}
