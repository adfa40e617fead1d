//! `f` replaced by its Taylor expansion at a simple root.
//!
//! Points are carried as offsets from the root, so `x` is the series `e`
//! and every stepper can run unchanged. Divided differences use closed
//! forms in the node offsets; nothing divides by a difference of nodes.

use std::collections::BTreeMap;

use rug::Rational;

use crate::schemes::{
    Arith, GenericCoef, MultiIndex, Node, Oracle, Scalars, Slots, StepFault, StepResult, WeightFn,
    WeightForm,
};

use super::poly::{Poly, Symbol};
use super::series::{Series, SeriesError, EXACT};

/// Symbol standing for `1 - kappa*c1`, which keeps `w - alpha` invertible.
pub const SIGMA: &str = "sigma";

fn fault(e: SeriesError) -> StepFault<Series> {
    StepFault::Algebra(e.to_string())
}

impl Arith for Series {
    fn add(&self, o: &Self) -> Self {
        Series::add(self, o)
    }

    fn sub(&self, o: &Self) -> Self {
        Series::sub(self, o)
    }

    fn mul(&self, o: &Self) -> Self {
        Series::mul(self, o)
    }

    fn neg(&self) -> Self {
        Series::neg(self)
    }

    fn div(&self, o: &Self) -> StepResult<Self> {
        Series::div(self, o).map_err(fault)
    }

    fn powi(&self, n: i32) -> StepResult<Self> {
        Series::powi(self, n).map_err(fault)
    }

    fn powr(&self, q: &Rational) -> StepResult<Self> {
        Series::powr(self, q).map_err(fault)
    }

    fn is_exact_zero(&self) -> bool {
        Series::is_exact_zero(self)
    }
}

/// `c_k`, with `c_1` standing for `f'(alpha)` itself.
pub fn c(k: usize) -> Poly {
    Poly::symbol(&format!("c{k}"))
}

/// The offset parameter as a coefficient: `(1 - sigma) / c1`.
pub fn offset_poly() -> Poly {
    let c1inv = c(1).inverse().expect("c1 is a unit");
    Poly::one().sub(&Poly::symbol(SIGMA)).mul(&c1inv)
}

/// Rewrites `sigma` back to `1 - kappa*c1` when no negative power remains.
pub fn sigma_to_kappa(p: &Poly) -> Poly {
    let s = Symbol::new(SIGMA);
    let back = Poly::one().sub(&Poly::symbol("kappa").mul(&c(1)));
    p.substitute(s, &back).unwrap_or_else(|_| p.clone())
}

/// Rewrites `kappa` as `(1 - sigma)/c1`, the inverse of [`sigma_to_kappa`].
pub fn kappa_to_sigma(p: &Poly) -> Poly {
    p.substitute(Symbol::new("kappa"), &offset_poly())
        .expect("kappa enters polynomially")
}

/// `f(alpha + arg)` or, with `derivative`, `f'(alpha + arg)`.
pub fn compose_f(arg: &Series, derivative: bool) -> Result<Series, SeriesError> {
    compose_with(arg, derivative, &c(1))
}

fn compose_with(arg: &Series, derivative: bool, c1: &Poly) -> Result<Series, SeriesError> {
    if !arg.coeff(0).is_zero() {
        return Err(SeriesError::Valuation(0));
    }
    let prec = arg.prec();
    if prec == EXACT {
        if arg.is_exact_zero() {
            return Ok(if derivative {
                Series::constant(c1.clone())
            } else {
                Series::zero()
            });
        }
        // an exact nonzero offset has no finite Taylor image
        return Err(SeriesError::Valuation(arg.valuation()));
    }
    let top = terms(arg.valuation(), prec);
    let a = arg.truncate(prec);
    // Horner: sum_k m_k c_k A^(k-1), with m_k = k for f' and 1 for f
    let coef = |k: usize| -> Series {
        let base = if k == 1 { Poly::one() } else { c(k) };
        let m = if derivative { k as i64 } else { 1 };
        Series::constant(base.scale(&Rational::from(m)))
    };
    let mut acc = coef(top);
    for k in (1..top).rev() {
        acc = acc.mul(&a).truncate(prec).add(&coef(k));
    }
    if !derivative {
        acc = acc.mul(&a);
    }
    Ok(acc.truncate(prec).scale(c1))
}

/// Number of Taylor terms needed for a combination of offsets with minimal
/// valuation `v` and precision `prec`.
fn terms(v: u32, prec: u32) -> usize {
    (prec as usize).div_ceil(v.max(1) as usize).max(1) + 1
}

/// `f[alpha + a, alpha + b] = c1 sum_k c_k h_(k-1)(a, b)`.
pub fn dd(a: &Series, b: &Series) -> Result<Series, SeriesError> {
    dd_with(a, b, &c(1))
}

fn dd_with(a: &Series, b: &Series, c1: &Poly) -> Result<Series, SeriesError> {
    let prec = a.prec().min(b.prec());
    if prec == EXACT {
        return Err(SeriesError::Valuation(0));
    }
    let v = a.valuation().min(b.valuation());
    if v == 0 {
        return Err(SeriesError::Valuation(0));
    }
    let n = terms(v, prec);
    let a = a.truncate(prec);
    let b = b.truncate(prec);
    // h_m(a, b) = a h_(m-1) + b^m
    let mut h = Series::rational(Rational::from(1));
    let mut bpow = Series::rational(Rational::from(1));
    let mut acc = Series::rational(Rational::from(1));
    for k in 2..=n {
        bpow = bpow.mul(&b).truncate(prec);
        h = a.mul(&h).add(&bpow).truncate(prec);
        if h.valuation() >= prec {
            break;
        }
        acc = acc.add(&h.scale(&c(k)));
    }
    Ok(acc.truncate(prec).scale(c1))
}

/// `f[alpha + z, alpha + x, alpha + x] = c1 sum_k c_k sum_(i+j=k-2) (j+1) z^i x^j`.
pub fn dd2(z: &Series, x: &Series) -> Result<Series, SeriesError> {
    dd2_with(z, x, &c(1))
}

fn dd2_with(z: &Series, x: &Series, c1: &Poly) -> Result<Series, SeriesError> {
    let prec = z.prec().min(x.prec());
    if prec == EXACT {
        return Err(SeriesError::Valuation(0));
    }
    let v = z.valuation().min(x.valuation());
    if v == 0 {
        return Err(SeriesError::Valuation(0));
    }
    let n = terms(v, prec) + 1;
    let z = z.truncate(prec);
    let x = x.truncate(prec);
    let mut zp = vec![Series::rational(Rational::from(1))];
    let mut xp = vec![Series::rational(Rational::from(1))];
    for _ in 1..n {
        zp.push(zp.last().unwrap().mul(&z).truncate(prec));
        xp.push(xp.last().unwrap().mul(&x).truncate(prec));
    }
    let mut acc = Series::constant(c(2));
    for k in 3..=n {
        let mut inner = Series::zero();
        for i in 0..=(k - 2) {
            let j = k - 2 - i;
            let term = zp[i].mul(&xp[j]).truncate(prec);
            inner = inner.add(&term.scale(&Poly::int(j as i64 + 1)));
        }
        if inner.valuation() >= prec {
            continue;
        }
        acc = acc.add(&inner.scale(&c(k)));
    }
    Ok(acc.truncate(prec).scale(c1))
}

/// Name of the free coefficient of `index` in a generic weight.
pub fn generic_symbol(weight: &str, index: &MultiIndex) -> String {
    let mut name = format!("{weight}_");
    if index.iter().all(|&e| e == 0) {
        name.push('0');
    }
    for (i, &e) in index.iter().enumerate() {
        for _ in 0..e {
            name.push_str(&format!("t{}", i + 1));
        }
    }
    name
}

fn coef_poly(coef: &GenericCoef) -> Result<Poly, SeriesError> {
    Ok(match coef {
        GenericCoef::Value(q) => Poly::constant(q.clone()),
        GenericCoef::Symbol(name) => Poly::symbol(name),
        GenericCoef::Poly(src) => Poly::parse(src)?,
    })
}

/// Taylor coefficients (derivative over the multi-index factorial) of a
/// generic weight, expanded to absolute precision `prec`.
pub fn expand_weight(
    w: &WeightFn,
    slots: &Slots<Series>,
    prec: u32,
) -> Result<Series, SeriesError> {
    let WeightForm::Generic(g) = w.form() else {
        return Err(SeriesError::Valuation(0));
    };
    let active: Vec<usize> = w.slots().iter().map(|&s| s as usize - 1).collect();
    let mut args = Vec::with_capacity(active.len());
    let mut prec = prec;
    for &i in &active {
        let t = slots[i].as_ref().ok_or(SeriesError::Valuation(0))?;
        if !t.coeff(0).is_zero() {
            return Err(SeriesError::Valuation(0));
        }
        prec = prec.min(t.prec());
        args.push(t.clone());
    }
    if prec == EXACT {
        return Err(SeriesError::Valuation(0));
    }
    let vals: Vec<u32> = args.iter().map(|t| t.valuation().max(1)).collect();
    let mut powers: Vec<Vec<Series>> = args
        .iter()
        .map(|_| vec![Series::rational(Rational::from(1))])
        .collect();
    let mut out = Series::zero();
    let mut idx = vec![0u8; active.len()];
    loop {
        let weight_val: u32 = idx.iter().zip(&vals).map(|(e, v)| *e as u32 * v).sum();
        if weight_val < prec {
            let mut full: MultiIndex = [0; 5];
            for (k, &i) in active.iter().enumerate() {
                full[i] = idx[k];
            }
            let coef = match g.fixed.iter().find(|(m, _)| *m == full) {
                Some((_, c)) => coef_poly(c)?,
                None => Poly::symbol(&generic_symbol(w.name(), &full)),
            };
            if !coef.is_zero() {
                let mut term = Series::constant(coef);
                for (k, &e) in idx.iter().enumerate() {
                    while powers[k].len() <= e as usize {
                        let next = powers[k].last().unwrap().mul(&args[k]).truncate(prec);
                        powers[k].push(next);
                    }
                    term = term.mul(&powers[k][e as usize]).truncate(prec);
                }
                out = out.add(&term);
            }
        }
        // odometer over multi-indices bounded by valuation
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Ok(out.truncate(prec));
            }
            idx[k] += 1;
            let val: u32 = idx.iter().zip(&vals).map(|(e, v)| *e as u32 * v).sum();
            if val < prec {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Parameters as coefficients; a missing name is an error.
pub type SymParams = BTreeMap<String, Poly>;

/// Rational values for `c1` and the offset parameter. Needed by schemes
/// that divide by `kappa*f[x, w]`, whose leading coefficient `1 - sigma`
/// is not a unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Specialization {
    pub c1: Rational,
    pub kappa: Rational,
}

pub struct SymbolicOracle<'a> {
    params: &'a SymParams,
    c1: Poly,
    offset: Poly,
}

impl<'a> SymbolicOracle<'a> {
    pub fn new(params: &'a SymParams) -> Self {
        SymbolicOracle {
            params,
            c1: c(1),
            offset: offset_poly(),
        }
    }

    pub fn specialized(params: &'a SymParams, sp: &Specialization) -> Self {
        SymbolicOracle {
            params,
            c1: Poly::constant(sp.c1.clone()),
            offset: Poly::constant(sp.kappa.clone()),
        }
    }
}

impl Scalars<Series> for SymbolicOracle<'_> {
    fn constant(&self, q: &Rational) -> Series {
        Series::rational(q.clone())
    }

    fn param(&self, name: &str) -> StepResult<Series> {
        self.params
            .get(name)
            .map(|p| Series::constant(p.clone()))
            .ok_or_else(|| StepFault::Algebra(format!("unknown parameter {name}")))
    }

    fn param_exact(&self, name: &str) -> Option<Rational> {
        self.params.get(name).and_then(Poly::as_constant)
    }
}

impl Oracle<Series> for SymbolicOracle<'_> {
    fn offset(&self) -> StepResult<Series> {
        Ok(Series::constant(self.offset.clone()))
    }

    fn f(&mut self, _node: Node, at: &Series) -> StepResult<Series> {
        compose_with(at, false, &self.c1).map_err(fault)
    }

    fn df(&mut self, at: &Series) -> StepResult<Series> {
        compose_with(at, true, &self.c1).map_err(fault)
    }

    fn dd(&mut self, a: (Node, &Series), b: (Node, &Series)) -> StepResult<Series> {
        dd_with(a.1, b.1, &self.c1).map_err(fault)
    }

    fn dd2(&mut self, z: &Series, x: &Series) -> StepResult<Series> {
        dd2_with(z, x, &self.c1).map_err(fault)
    }

    fn weighted(
        &mut self,
        w: &WeightFn,
        slots: &Slots<Series>,
        mult: &Series,
    ) -> StepResult<Series> {
        let value = match w.form() {
            WeightForm::Expr { .. } => w.eval(slots, self)?,
            WeightForm::Generic(_) => {
                let need = mult.prec().saturating_sub(mult.valuation());
                expand_weight(w, slots, need).map_err(fault)?
            }
        };
        Ok(value.mul(mult))
    }
}
