//! Exact truncated Taylor algebra for certifying convergence orders.
//!
//! The numeric steppers are rerun with scalars replaced by power series in
//! the error `e = x - alpha`; coefficients are polynomials over the
//! rationals in `c1, c2, ...` (`c_k = f^(k)(alpha) / (k! f'(alpha))`, `c1 =
//! f'(alpha)`), the weight-function Taylor coefficients and the method
//! parameters.

mod families;
mod oracle;
pub mod poly;
mod reductions;
pub mod series;
mod verify;

use thiserror::Error;

pub use families::{family_scheme, method_scheme, ConditionSet, Family, SymbolicScheme};
pub use oracle::{
    c, compose_f, dd, dd2, expand_weight, generic_symbol, kappa_to_sigma, offset_poly,
    sigma_to_kappa, Specialization, SymParams, SymbolicOracle, SIGMA,
};
pub use poly::{Monomial, Poly, PolyError, Symbol};
pub use reductions::{reduction_checks, Reduction};
pub use series::{Series, SeriesError};
pub use verify::{error_series, verify_order, ErrorSeries, OrderCertificate, DEFAULT_TRUNCATION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("unknown condition set {0:?}; expected base, seventh or none")]
    UnknownConditionSet(String),
    #[error("condition set {set:?} does not apply to {family}")]
    UnknownConditions { family: String, set: String },
    #[error("all coefficients below e^{truncation} vanish (valuation {valuation}); raise the truncation")]
    TruncationTooLow { valuation: u32, truncation: u32 },
    #[error("symbolic step failed: {0}")]
    Step(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Scheme(#[from] crate::schemes::SchemeError),
}
