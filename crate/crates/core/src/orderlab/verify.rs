//! Error series of one iteration and order certificates.

use std::fmt;

use crate::schemes::{step, Node, StepFault};

use super::families::SymbolicScheme;
use super::oracle::{sigma_to_kappa, SymbolicOracle};
use super::poly::Poly;
use super::series::Series;
use super::OrderError;

/// Default truncation: coefficients through `e^8` are computed.
pub const DEFAULT_TRUNCATION: u32 = 8;

/// `x_{n+1} - alpha` and the intermediate offsets, all exact through `e^T`.
#[derive(Debug, Clone)]
pub struct ErrorSeries {
    pub truncation: u32,
    pub next: Series,
    pub stages: Vec<(Node, Series)>,
}

impl ErrorSeries {
    pub fn stage(&self, node: Node) -> Option<&Series> {
        self.stages.iter().find(|(n, _)| *n == node).map(|(_, s)| s)
    }

    /// Coefficient of `e^k` with `sigma` rewritten in terms of `kappa`.
    pub fn coeff(&self, k: usize) -> Poly {
        sigma_to_kappa(&self.next.coeff(k))
    }
}

fn step_fault(f: StepFault<Series>) -> OrderError {
    match f {
        StepFault::Algebra(m) | StepFault::Singular(m) | StepFault::Domain(m) => {
            OrderError::Step(m)
        }
        StepFault::Root(_) | StepFault::Degenerate { .. } => {
            OrderError::Step("numeric-only stop in a symbolic step".into())
        }
    }
}

/// Runs one iteration from `x = alpha + e`. Divisions by series of
/// positive valuation eat absolute precision, so the starting precision is
/// raised until the result is known through `e^truncation`.
pub fn error_series(scheme: &SymbolicScheme, truncation: u32) -> Result<ErrorSeries, OrderError> {
    let target = truncation + 1;
    let mut start = target;
    for _ in 0..8 {
        let mut oracle = match &scheme.specialization {
            Some(sp) => SymbolicOracle::specialized(&scheme.params, sp),
            None => SymbolicOracle::new(&scheme.params),
        };
        let x = Series::variable(start);
        let s = step(&scheme.stepper, &scheme.weights, &x, &mut oracle).map_err(step_fault)?;
        if s.next.prec() >= target {
            let cut = |v: Series| v.truncate(target);
            return Ok(ErrorSeries {
                truncation,
                next: cut(s.next),
                stages: s.stages.into_iter().map(|(n, v)| (n, cut(v))).collect(),
            });
        }
        start += target - s.next.prec();
    }
    Err(OrderError::Step(format!(
        "{}: precision did not stabilise",
        scheme.label
    )))
}

/// Outcome of a certification run.
#[derive(Debug, Clone)]
pub struct OrderCertificate {
    pub label: String,
    pub claimed: u32,
    pub order: u32,
    /// The first nonzero coefficient, in terms of `kappa`.
    pub leading: Poly,
    /// Indices of coefficients that are the zero polynomial.
    pub vanishing: Vec<u32>,
    pub truncation: u32,
    pub constraints: Vec<String>,
}

impl OrderCertificate {
    pub fn certified(&self) -> bool {
        self.order >= self.claimed
    }
}

pub fn verify_order(
    scheme: &SymbolicScheme,
    truncation: u32,
) -> Result<OrderCertificate, OrderError> {
    let es = error_series(scheme, truncation)?;
    let order = es.next.valuation();
    if order >= truncation {
        return Err(OrderError::TruncationTooLow {
            valuation: order,
            truncation,
        });
    }
    Ok(OrderCertificate {
        label: scheme.label.clone(),
        claimed: scheme.claimed_order,
        order,
        leading: es.coeff(order as usize),
        vanishing: (0..order).collect(),
        truncation,
        constraints: scheme.constraints.clone(),
    })
}

/// Plain-text proof report.
impl fmt::Display for OrderCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme: {}", self.label)?;
        writeln!(f, "truncation: O(e^{})", self.truncation + 1)?;
        writeln!(f, "constraints:")?;
        for c in &self.constraints {
            writeln!(f, "  {c}")?;
        }
        let zeros: Vec<String> = self.vanishing.iter().map(|k| format!("e^{k}")).collect();
        writeln!(f, "vanishing: {}", zeros.join(" "))?;
        writeln!(f, "claimed order: {}", self.claimed)?;
        writeln!(f, "certified order: {}", self.order)?;
        writeln!(
            f,
            "leading coefficient (e^{}): {}",
            self.order, self.leading
        )?;
        write!(
            f,
            "status: {}",
            if self.certified() {
                "certified"
            } else {
                "FAILED"
            }
        )
    }
}
