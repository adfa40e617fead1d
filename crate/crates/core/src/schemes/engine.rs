//! Numeric iteration: the counting function probe and the run loop.

use std::fmt;

use rug::Rational;

use crate::bigreal::{BigReal, NumericError, PrecisionContext};
use crate::funcsuite::{evaluate, evaluate_derivative, EvalCounter, TestFunction};

use super::arith::{Node, Oracle, Scalars, Slots, StepFault, StepResult};
use super::registry::MethodScheme;
use super::steppers::{step, Step};
use super::weights::{Params, WeightFn};
use super::SchemeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunStatus {
    Converged,
    BudgetExhausted,
    Divergent,
    DegenerateStep,
    DomainError,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::BudgetExhausted => "budget-exhausted",
            RunStatus::Divergent => "divergent",
            RunStatus::DegenerateStep => "degenerate-step",
            RunStatus::DomainError => "domain-error",
        })
    }
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub method: String,
    pub function: String,
    pub claimed_order: u32,
    pub iterates: Vec<BigReal>,
    pub residuals: Vec<BigReal>,
    pub tnfe_used: u64,
    pub status: RunStatus,
    /// Why the run stopped early, when it did.
    pub note: Option<String>,
}

impl IterationTrace {
    pub fn last(&self) -> Option<&BigReal> {
        self.iterates.last()
    }

    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }
}

/// Extra bits carried inside one iteration. Divided differences over
/// nearby nodes cancel leading digits; iterates are rounded back to the
/// caller's precision afterwards.
pub const GUARD_BITS: u32 = 64;

fn guarded(ctx: PrecisionContext) -> PrecisionContext {
    PrecisionContext::new(ctx.bits() + GUARD_BITS).expect("guarded precision is valid")
}

/// Counting access to `f` within one iteration.
///
/// Values are cached per node, so a divided difference never pays for a
/// point that was already evaluated. Arithmetic runs at the working
/// precision plus [`GUARD_BITS`]; node collapse is judged at the working
/// precision.
pub struct Probe<'a> {
    f: &'a TestFunction,
    counter: &'a EvalCounter,
    params: &'a Params,
    offset: Option<&'a str>,
    ctx: PrecisionContext,
    values: [Option<(BigReal, BigReal)>; 4],
    slope: Option<(BigReal, BigReal)>,
    latest: Option<BigReal>,
    collapse: BigReal,
}

impl<'a> Probe<'a> {
    pub fn new(
        f: &'a TestFunction,
        counter: &'a EvalCounter,
        params: &'a Params,
        offset: Option<&'a str>,
        working: PrecisionContext,
    ) -> Self {
        let ctx = guarded(working);
        Probe {
            f,
            counter,
            params,
            offset,
            ctx,
            values: Default::default(),
            slope: None,
            latest: None,
            collapse: ctx.pow10(4 - working.decimal_digits() as i64),
        }
    }

    /// Lifts a working-precision value into the probe's arithmetic.
    pub fn lift(&self, x: &BigReal) -> BigReal {
        x.with_context(self.ctx)
    }

    pub fn value_at(&self, node: Node) -> Option<&BigReal> {
        self.values[node.index()].as_ref().map(|(_, v)| v)
    }

    fn lookup(&mut self, node: Node, at: &BigReal) -> StepResult<BigReal> {
        match &self.values[node.index()] {
            Some((p, v)) if p == at => Ok(v.clone()),
            _ => self.f(node, at),
        }
    }

    fn check_distinct(&self, a: &BigReal, b: &BigReal) -> StepResult<BigReal, ()> {
        let scale = a.abs().max(self.ctx.one());
        if (a - b).abs() < &self.collapse * &scale {
            let latest = self.latest.clone().unwrap_or_else(|| b.clone());
            return Err(StepFault::Degenerate { latest });
        }
        Ok(())
    }
}

fn numeric_fault(e: NumericError) -> StepFault<BigReal> {
    match e {
        NumericError::DivisionByZero => StepFault::Domain("division by zero in f".into()),
        other => StepFault::Domain(other.to_string()),
    }
}

impl Scalars<BigReal> for Probe<'_> {
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

impl Oracle<BigReal> for Probe<'_> {
    fn offset(&self) -> StepResult<BigReal> {
        match self.offset {
            Some(name) => self.param(name),
            None => Err(StepFault::Algebra("method has no offset parameter".into())),
        }
    }

    fn f(&mut self, node: Node, at: &BigReal) -> StepResult<BigReal> {
        let v = evaluate(self.f, at, self.counter).map_err(numeric_fault)?;
        if !v.is_finite() {
            return Err(StepFault::Domain(format!(
                "f({}) is not finite",
                node.label()
            )));
        }
        self.values[node.index()] = Some((at.clone(), v.clone()));
        self.latest = Some(at.clone());
        if v.is_zero() {
            return Err(StepFault::Root(at.clone()));
        }
        Ok(v)
    }

    fn df(&mut self, at: &BigReal) -> StepResult<BigReal> {
        let v = evaluate_derivative(self.f, at, self.counter).map_err(numeric_fault)?;
        self.slope = Some((at.clone(), v.clone()));
        if v.is_zero() {
            return Err(StepFault::Singular("f' vanished".into()));
        }
        Ok(v)
    }

    fn dd(&mut self, a: (Node, &BigReal), b: (Node, &BigReal)) -> StepResult<BigReal> {
        self.check_distinct(a.1, b.1)?;
        let fa = self.lookup(a.0, a.1)?;
        let fb = self.lookup(b.0, b.1)?;
        (fb - fa)
            .checked_div(&(b.1 - a.1))
            .map_err(|_| StepFault::Degenerate {
                latest: b.1.clone(),
            })
    }

    fn dd2(&mut self, z: &BigReal, x: &BigReal) -> StepResult<BigReal> {
        let fzx = self.dd((Node::Z, z), (Node::X, x))?;
        let d = match &self.slope {
            Some((p, v)) if p == x => v.clone(),
            _ => self.df(x)?,
        };
        (fzx - d)
            .checked_div(&(z - x))
            .map_err(|_| StepFault::Degenerate { latest: z.clone() })
    }

    fn weighted(
        &mut self,
        w: &WeightFn,
        slots: &Slots<BigReal>,
        mult: &BigReal,
    ) -> StepResult<BigReal> {
        let v = w.eval(slots, self)?;
        Ok(v * mult)
    }
}

/// `f[a, b]`, counting the two evaluations.
pub fn divided_difference(
    f: &TestFunction,
    a: &BigReal,
    b: &BigReal,
    counter: &EvalCounter,
) -> Result<BigReal, SchemeError> {
    let params = Params::new();
    let ctx = a.context();
    let mut probe = Probe::new(f, counter, &params, None, ctx);
    let (a, b) = (probe.lift(a), probe.lift(b));
    probe.f(Node::X, &a).or_else(root_is_value)?;
    probe.f(Node::W, &b).or_else(root_is_value)?;
    let v = probe
        .dd((Node::X, &a), (Node::W, &b))
        .map_err(SchemeError::from_fault)?;
    Ok(v.with_context(ctx))
}

/// `f[z, x, x] = (f[z, x] - f'(x)) / (z - x)`.
pub fn second_divided_difference(
    f: &TestFunction,
    z: &BigReal,
    x: &BigReal,
    counter: &EvalCounter,
) -> Result<BigReal, SchemeError> {
    let params = Params::new();
    let ctx = x.context();
    let mut probe = Probe::new(f, counter, &params, None, ctx);
    let (z, x) = (probe.lift(z), probe.lift(x));
    probe.f(Node::Z, &z).or_else(root_is_value)?;
    probe.f(Node::X, &x).or_else(root_is_value)?;
    probe.df(&x).or_else(|e| match e {
        StepFault::Singular(_) => Ok(ctx.zero()),
        other => Err(SchemeError::from_fault(other)),
    })?;
    let v = probe.dd2(&z, &x).map_err(SchemeError::from_fault)?;
    Ok(v.with_context(ctx))
}

fn root_is_value(e: StepFault<BigReal>) -> Result<BigReal, SchemeError> {
    match e {
        StepFault::Root(p) => Ok(p.context().zero()),
        other => Err(SchemeError::from_fault(other)),
    }
}

/// One full iteration from `x`; the step and its stages are rounded to the
/// precision of `x`.
pub fn single_step(
    method: &MethodScheme,
    f: &TestFunction,
    x: &BigReal,
    counter: &EvalCounter,
) -> StepResult<BigReal, Step<BigReal>> {
    let ctx = x.context();
    let mut probe = Probe::new(f, counter, &method.params, method.offset.as_deref(), ctx);
    let lifted = probe.lift(x);
    round_outcome(
        step(&method.stepper, &method.weights, &lifted, &mut probe),
        ctx,
    )
}

fn round_outcome(
    outcome: StepResult<BigReal, Step<BigReal>>,
    ctx: PrecisionContext,
) -> StepResult<BigReal, Step<BigReal>> {
    let r = |v: BigReal| v.with_context(ctx);
    match outcome {
        Ok(s) => Ok(Step {
            next: r(s.next),
            stages: s.stages.into_iter().map(|(n, v)| (n, r(v))).collect(),
        }),
        Err(StepFault::Root(p)) => Err(StepFault::Root(r(p))),
        Err(StepFault::Degenerate { latest }) => Err(StepFault::Degenerate { latest: r(latest) }),
        Err(e) => Err(e),
    }
}

const DIVERGENCE_BOUND: i64 = 8;

/// Runs `floor(budget / d)` iterations, stopping early on a root,
/// divergence, a collapsed step or a domain error.
pub fn iterate(
    method: &MethodScheme,
    f: &TestFunction,
    x0: &BigReal,
    tnfe_budget: u32,
) -> IterationTrace {
    let ctx = x0.context();
    let counter = EvalCounter::new();
    let mut trace = IterationTrace {
        method: method.name.clone(),
        function: f.id().to_string(),
        claimed_order: method.claimed_order,
        iterates: Vec::new(),
        residuals: Vec::new(),
        tnfe_used: 0,
        status: RunStatus::BudgetExhausted,
        note: None,
    };
    let bound = ctx.pow10(DIVERGENCE_BOUND);
    let iterations = tnfe_budget / method.evals_per_iteration.max(1);
    let mut x = x0.clone();
    let mut growth = 0;
    let mut finished = false;
    for _ in 0..iterations {
        let mut probe = Probe::new(f, &counter, &method.params, method.offset.as_deref(), ctx);
        let lifted = probe.lift(&x);
        let raw = step(&method.stepper, &method.weights, &lifted, &mut probe);
        let latest_value = match &raw {
            Err(StepFault::Degenerate { latest }) => {
                find_value(&probe, latest).map(|v| v.with_context(ctx))
            }
            _ => None,
        };
        let outcome = round_outcome(raw, ctx);
        let fx = probe.value_at(Node::X).map(|v| v.with_context(ctx));
        let Some(fx) = fx else {
            trace.status = RunStatus::DomainError;
            trace.note = outcome.err().map(|e| describe(&e));
            finished = true;
            break;
        };
        if let Some(prev) = trace.residuals.last() {
            if fx.abs() > prev.abs() * ctx.int(10) {
                growth += 1;
            } else {
                growth = 0;
            }
        }
        trace.iterates.push(x.clone());
        trace.residuals.push(fx);
        if growth >= 3 {
            trace.status = RunStatus::Divergent;
            finished = true;
            break;
        }
        match outcome {
            Ok(s) => {
                x = s.next;
                if x.abs() > bound {
                    trace.status = RunStatus::Divergent;
                    push_final(&mut trace, &x, f);
                    finished = true;
                    break;
                }
            }
            Err(StepFault::Root(p)) => {
                if p != x {
                    trace.iterates.push(p.clone());
                    trace.residuals.push(ctx.zero());
                }
                trace.status = RunStatus::Converged;
                finished = true;
                break;
            }
            Err(StepFault::Degenerate { latest }) => {
                if latest != x {
                    if let Some(fl) = latest_value {
                        trace.iterates.push(latest);
                        trace.residuals.push(fl);
                    }
                }
                trace.status = RunStatus::DegenerateStep;
                trace.note = Some("interpolation nodes collapsed".into());
                finished = true;
                break;
            }
            // a vanishing denominator sends the next iterate to infinity
            Err(e @ StepFault::Singular(_)) => {
                trace.status = RunStatus::Divergent;
                trace.note = Some(format!("unbounded step: {}", describe(&e)));
                finished = true;
                break;
            }
            Err(e) => {
                trace.status = RunStatus::DomainError;
                trace.note = Some(describe(&e));
                finished = true;
                break;
            }
        }
    }
    if !finished {
        push_final(&mut trace, &x, f);
        if trace.status == RunStatus::BudgetExhausted {
            if let [.., a, b] = trace.residuals.as_slice() {
                if b.abs() > a.abs() * ctx.int(10) {
                    growth += 1;
                } else {
                    growth = 0;
                }
                if growth >= 3 {
                    trace.status = RunStatus::Divergent;
                }
            }
            if trace.residuals.last().is_some_and(BigReal::is_zero) {
                trace.status = RunStatus::Converged;
            }
        }
    }
    trace.tnfe_used = counter.get();
    trace
}

fn find_value(probe: &Probe<'_>, at: &BigReal) -> Option<BigReal> {
    probe
        .values
        .iter()
        .flatten()
        .find(|(p, _)| p == at)
        .map(|(_, v)| v.clone())
}

/// Appends `x` with an uncounted residual; a failing evaluation marks the
/// trace as a domain error instead.
fn push_final(trace: &mut IterationTrace, x: &BigReal, f: &TestFunction) {
    match f.value(x) {
        Ok(v) => {
            trace.iterates.push(x.clone());
            trace.residuals.push(v);
        }
        Err(e) => {
            trace.status = RunStatus::DomainError;
            trace.note = Some(format!("final residual: {e}"));
        }
    }
}

fn describe(e: &StepFault<BigReal>) -> String {
    match e {
        StepFault::Root(_) => "landed on a root".into(),
        StepFault::Degenerate { .. } => "interpolation nodes collapsed".into(),
        StepFault::Singular(m) | StepFault::Domain(m) | StepFault::Algebra(m) => m.clone(),
    }
}
