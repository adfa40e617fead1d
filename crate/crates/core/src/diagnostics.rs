//! Computational order of convergence, efficiency indices and run
//! classification.

use std::fmt;

use rug::Rational;
use thiserror::Error;

use crate::bigreal::{BigReal, PrecisionContext};
use crate::schemes::{IterationTrace, RunStatus};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CocError {
    #[error("need three iterates, have {0}")]
    TooFewIterates(usize),
    #[error("an iterate coincides with the root")]
    ExactHit,
    #[error("consecutive errors are equal")]
    Stalled,
    #[error("run ended with status {0}")]
    Status(RunStatus),
}

/// COC from the last three absolute errors `e_{n-1}, e_n, e_{n+1}`.
pub fn coc_from_errors(errors: &[BigReal]) -> Result<f64, CocError> {
    let [.., a, b, c] = errors else {
        return Err(CocError::TooFewIterates(errors.len()));
    };
    if a.is_zero() || b.is_zero() || c.is_zero() {
        return Err(CocError::ExactHit);
    }
    let ln = |x: &BigReal| x.abs().ln().map_err(|_| CocError::ExactHit);
    let (la, lb, lc) = (ln(a)?, ln(b)?, ln(c)?);
    let den = &lb - &la;
    if den.is_zero() {
        return Err(CocError::Stalled);
    }
    let q = (&lc - &lb)
        .checked_div(&den)
        .map_err(|_| CocError::Stalled)?;
    Ok(q.to_f64())
}

/// COC of a trace against a known root, using its final three iterates.
pub fn coc(trace: &IterationTrace, alpha: &BigReal) -> Result<f64, CocError> {
    if !matches!(
        trace.status,
        RunStatus::Converged | RunStatus::BudgetExhausted
    ) {
        return Err(CocError::Status(trace.status));
    }
    let errors: Vec<BigReal> = trace
        .iterates
        .iter()
        .rev()
        .take(3)
        .rev()
        .map(|x| (x - alpha).abs())
        .collect();
    coc_from_errors(&errors)
}

/// `p^(1/d)`.
pub fn efficiency_index(p: u32, d: u32, ctx: PrecisionContext) -> BigReal {
    assert!(p >= 1 && d >= 1, "efficiency index needs p, d >= 1");
    ctx.int(p as i64)
        .powr(&Rational::from((1, d)))
        .expect("positive base")
}

/// `2^(n/(n+1))`, the optimal index of an `n+1`-evaluation method.
pub fn optimal_efficiency(n: u32, ctx: PrecisionContext) -> BigReal {
    assert!(n >= 1, "optimal efficiency needs n >= 1");
    ctx.int(2)
        .powr(&Rational::from((n, n + 1)))
        .expect("positive base")
}

/// Decimal exponent of a final error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorExponent {
    /// `floor(log10 |e|)`.
    Exponent(i64),
    /// The error is below what the working precision resolves.
    Below(i64),
}

impl ErrorExponent {
    /// Digits kept in reserve below the working precision.
    pub const RESERVE: i64 = 10;

    pub fn of(err: &BigReal) -> ErrorExponent {
        let floor = -(err.context().decimal_digits() as i64 - Self::RESERVE);
        match err.decimal_exponent() {
            Some(k) if k >= floor => ErrorExponent::Exponent(k),
            _ => ErrorExponent::Below(floor),
        }
    }

    /// The exponent, or the resolution bound for `Below`.
    pub fn value(self) -> i64 {
        match self {
            ErrorExponent::Exponent(k) | ErrorExponent::Below(k) => k,
        }
    }
}

impl fmt::Display for ErrorExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorExponent::Exponent(k) => write!(f, "{k}"),
            ErrorExponent::Below(k) => write!(f, "<{k}"),
        }
    }
}

/// Final errors at or above this are not a convergent run.
pub const NONCONVERGENT_ERROR: f64 = 1e-3;
/// COC further than this from the claimed order is anomalous.
pub const COC_SLACK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunClass {
    /// Converged with a COC near the claimed order, or onto the root itself.
    Nominal,
    /// Converged, but the COC is far from the claimed order or unknown.
    Anomalous,
    /// Stayed away from the root without blowing up.
    NonConvergent,
    Divergent,
    /// Stopped on a domain error or a singular step away from the root.
    Failed,
}

impl RunClass {
    pub fn name(self) -> &'static str {
        match self {
            RunClass::Nominal => "nominal",
            RunClass::Anomalous => "anomalous",
            RunClass::NonConvergent => "nonconvergent",
            RunClass::Divergent => "divergent",
            RunClass::Failed => "failed",
        }
    }
}

impl fmt::Display for RunClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub method: String,
    pub function: String,
    pub x0: Option<BigReal>,
    pub claimed_order: u32,
    /// `|x_last - alpha|`.
    pub final_abs_error: Option<BigReal>,
    pub error_exponent: Option<ErrorExponent>,
    pub coc: Result<f64, CocError>,
    pub status: RunStatus,
    pub tnfe_used: u64,
    pub iterations: usize,
    pub class: RunClass,
}

impl RunReport {
    /// Error cell: the exponent, or "dgt" for a divergent run.
    pub fn error_cell(&self) -> String {
        match (self.status, self.error_exponent) {
            (RunStatus::Divergent, _) => "dgt".into(),
            (_, Some(e)) => e.to_string(),
            (_, None) => "X".into(),
        }
    }

    /// A computed COC more than `COC_SLACK` away from the claimed order.
    /// Independent of the class: a nonconvergent run can also have one.
    pub fn coc_anomalous(&self) -> bool {
        matches!(self.coc, Ok(v) if !v.is_finite() || (v - self.claimed_order as f64).abs() > COC_SLACK)
    }

    /// COC cell, four decimals, or "X" when undefined.
    pub fn coc_cell(&self) -> String {
        match &self.coc {
            Ok(v) if v.is_finite() => format!("{v:.4}"),
            _ => "X".into(),
        }
    }
}

pub fn classify(trace: &IterationTrace, alpha: &BigReal) -> RunReport {
    let final_abs_error = trace.last().map(|x| (x - alpha).abs());
    let error_exponent = final_abs_error.as_ref().map(ErrorExponent::of);
    let coc = coc(trace, alpha);
    let small = final_abs_error
        .as_ref()
        .is_some_and(|e| e.to_f64() < NONCONVERGENT_ERROR);
    let at_root = final_abs_error
        .as_ref()
        .is_some_and(|e| matches!(ErrorExponent::of(e), ErrorExponent::Below(_)));
    let class = match trace.status {
        RunStatus::Divergent => RunClass::Divergent,
        _ if final_abs_error.is_none() => RunClass::Failed,
        _ if !small => {
            if matches!(
                trace.status,
                RunStatus::DomainError | RunStatus::DegenerateStep
            ) {
                RunClass::Failed
            } else {
                RunClass::NonConvergent
            }
        }
        _ => match &coc {
            Ok(v) if (v - trace.claimed_order as f64).abs() <= COC_SLACK => RunClass::Nominal,
            Err(CocError::ExactHit) => RunClass::Nominal,
            _ if at_root => RunClass::Nominal,
            _ => RunClass::Anomalous,
        },
    };
    RunReport {
        method: trace.method.clone(),
        function: trace.function.clone(),
        x0: trace.iterates.first().cloned(),
        claimed_order: trace.claimed_order,
        final_abs_error,
        error_exponent,
        coc,
        status: trace.status,
        tnfe_used: trace.tnfe_used,
        iterations: trace.iterations(),
        class,
    }
}
