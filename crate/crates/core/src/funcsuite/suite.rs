use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use super::expr::{parse_expression, Expr, ExprError};
use crate::bigreal::{BigReal, NumericError, PrecisionContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RootError {
    #[error("Newton refinement did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("derivative vanishes near the root (|f'| ~ 1e{exponent})")]
    MultipleRootSuspected { exponent: i64 },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SuiteError {
    #[error("expression for {id}: {source}")]
    Expr { id: String, source: ExprError },
    #[error("root for {id}: {source}")]
    Root { id: String, source: RootError },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Counts objective evaluations. Shared across threads.
#[derive(Debug, Default)]
pub struct EvalCounter {
    count: AtomicU64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn increment(&self) {
        self.count.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    id: String,
    source: String,
    body: Expr,
    derivative: Expr,
    reference_root: Option<BigReal>,
    default_x0: Option<BigReal>,
}

impl TestFunction {
    pub fn from_source(id: &str, source: &str) -> Result<Self, ExprError> {
        let body = parse_expression(source)?;
        let derivative = body.differentiate();
        Ok(Self {
            id: id.to_string(),
            source: source.to_string(),
            body,
            derivative,
            reference_root: None,
            default_x0: None,
        })
    }

    pub fn with_root(mut self, root: BigReal) -> Self {
        self.reference_root = Some(root);
        self
    }

    pub fn with_x0(mut self, x0: BigReal) -> Self {
        self.default_x0 = Some(x0);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn derivative(&self) -> &Expr {
        &self.derivative
    }

    pub fn reference_root(&self) -> Option<&BigReal> {
        self.reference_root.as_ref()
    }

    pub fn default_x0(&self) -> Option<&BigReal> {
        self.default_x0.as_ref()
    }

    pub fn value(&self, x: &BigReal) -> Result<BigReal, NumericError> {
        self.body.evaluate(x)
    }

    pub fn slope(&self, x: &BigReal) -> Result<BigReal, NumericError> {
        self.derivative.evaluate(x)
    }
}

/// `f(x)`, counting one evaluation.
pub fn evaluate(
    f: &TestFunction,
    x: &BigReal,
    counter: &EvalCounter,
) -> Result<BigReal, NumericError> {
    counter.increment();
    f.value(x)
}

/// `f'(x)`, counting one evaluation.
pub fn evaluate_derivative(
    f: &TestFunction,
    x: &BigReal,
    counter: &EvalCounter,
) -> Result<BigReal, NumericError> {
    counter.increment();
    f.slope(x)
}

const MAX_NEWTON: usize = 200;

/// Polishes `seed` to a simple root of `f` at the seed's precision.
///
/// Newton steps run at a working precision that doubles each time the step
/// size has settled, so most of the work happens in cheap arithmetic. The
/// result satisfies `|f(root)| < 10^(10 - target_digits)`.
pub fn refine_root(
    f: &TestFunction,
    seed: &BigReal,
    target_digits: u32,
) -> Result<BigReal, RootError> {
    let full = seed.context();
    let tol = full.pow10(10 - target_digits as i64);
    let mut bits = full.bits().min(128);
    let mut x = seed.with_context(PrecisionContext::new(bits)?);
    let mut iterations = 0usize;

    loop {
        let ctx = x.context();
        let settle = ctx.pow10(-(ctx.decimal_digits() as i64) / 2);
        loop {
            iterations += 1;
            if iterations > MAX_NEWTON {
                return Err(RootError::NoConvergence {
                    iterations: MAX_NEWTON,
                });
            }
            let fx = f.value(&x)?;
            if fx.is_zero() {
                break;
            }
            let dfx = f.slope(&x)?;
            if dfx.is_zero() {
                return Err(RootError::MultipleRootSuspected { exponent: i64::MIN });
            }
            let step = fx.checked_div(&dfx)?;
            x = &x - &step;
            let scale = x.abs().max(ctx.one());
            if step.abs() <= &settle * &scale {
                break;
            }
        }
        if bits == full.bits() {
            break;
        }
        bits = (bits * 2).min(full.bits());
        x = x.with_context(PrecisionContext::new(bits)?);
    }

    // Final steps at full precision until the update is at rounding level.
    let ulp_scale = full.int(8);
    for _ in 0..8 {
        let fx = f.value(&x)?;
        if fx.is_zero() {
            break;
        }
        let dfx = f.slope(&x)?;
        if dfx.is_zero() {
            return Err(RootError::MultipleRootSuspected { exponent: i64::MIN });
        }
        let step = fx.checked_div(&dfx)?;
        x = &x - &step;
        if step.abs() <= &ulp_scale * &x.abs().max(full.one()).ulp() {
            break;
        }
    }

    let residual = f.value(&x)?.abs();
    if residual >= tol {
        return Err(RootError::NoConvergence { iterations });
    }
    let slope = f.slope(&x)?.abs();
    if slope < full.pow10(-(target_digits as i64) / 2) {
        return Err(RootError::MultipleRootSuspected {
            exponent: slope.decimal_exponent().unwrap_or(i64::MIN),
        });
    }
    Ok(x)
}

struct Entry {
    id: &'static str,
    source: &'static str,
    root_hint: &'static str,
    x0: &'static str,
}

const ENTRIES: [Entry; 12] = [
    Entry {
        id: "f1",
        source: "exp(x)*sin(x)+ln(1+x^2)",
        root_hint: "0",
        x0: "0.25",
    },
    Entry {
        id: "f2",
        source: "x^15+x^4+4*x^2-15",
        root_hint: "1.148538",
        x0: "1.1",
    },
    Entry {
        id: "f3",
        source: "(x-2)*(x^10+x+1)*exp(-x-1)",
        root_hint: "2",
        x0: "2.1",
    },
    Entry {
        id: "f4",
        source: "exp(-x^2+x+2)-cos(x+1)+x^3+1",
        root_hint: "-1",
        x0: "-0.5",
    },
    Entry {
        id: "f5",
        source: "(x+1)*exp(sin(x))-x^2*exp(cos(x))-1",
        root_hint: "0",
        x0: "0.25",
    },
    Entry {
        id: "f6",
        source: "sin(x)^2-x^2+1",
        root_hint: "1.40449165",
        x0: "1.2",
    },
    Entry {
        id: "f7",
        source: "10*exp(-x^2)-1",
        root_hint: "1.517427",
        x0: "1.0",
    },
    Entry {
        id: "f8",
        source: "(x^2-1)^-1-1",
        root_hint: "1.414214",
        x0: "1.6",
    },
    Entry {
        id: "f9",
        source: "ln(x^2+x+2)-x+1",
        root_hint: "4.15259074",
        x0: "4.4",
    },
    Entry {
        id: "f10",
        source: "cos(x)^2-x/5",
        root_hint: "1.08598268",
        x0: "1.5",
    },
    Entry {
        id: "f11",
        source: "x^10-2*x^3-x+1",
        root_hint: "0.591448093",
        x0: "0.25",
    },
    Entry {
        id: "f12",
        source: "exp(sin(x))-x+1",
        root_hint: "2.63066415",
        x0: "2.0",
    },
];

/// Identifiers of the built-in test functions, in order.
pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
    ENTRIES.iter().map(|e| e.id)
}

/// The twelve built-in test functions with roots polished at `ctx`.
pub fn builtin_suite(ctx: PrecisionContext) -> Result<Vec<TestFunction>, SuiteError> {
    ENTRIES.iter().map(|e| build(e, ctx)).collect()
}

/// A single built-in function by id.
pub fn builtin_function(
    id: &str,
    ctx: PrecisionContext,
) -> Result<Option<TestFunction>, SuiteError> {
    ENTRIES
        .iter()
        .find(|e| e.id == id)
        .map(|e| build(e, ctx))
        .transpose()
}

fn build(e: &Entry, ctx: PrecisionContext) -> Result<TestFunction, SuiteError> {
    let f = TestFunction::from_source(e.id, e.source).map_err(|source| SuiteError::Expr {
        id: e.id.into(),
        source,
    })?;
    let hint = ctx.parse(e.root_hint)?;
    let root = refine_root(&f, &hint, ctx.decimal_digits()).map_err(|source| SuiteError::Root {
        id: e.id.into(),
        source,
    })?;
    Ok(f.with_root(root).with_x0(ctx.parse(e.x0)?))
}
