//! The scalar abstraction shared by numeric runs and symbolic expansions.
//!
//! Every stepper is written once against [`Arith`] and [`Oracle`]; the
//! numeric engine plugs in `BigReal` with a counting function probe, the
//! order verifier plugs in truncated series.

use rug::Rational;

use crate::bigreal::{BigReal, NumericError};

use super::weights::WeightFn;

/// Why a step could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFault<S> {
    /// A sub-step landed exactly on a zero of `f`.
    Root(S),
    /// Two interpolation nodes collapsed; `latest` is the last point that
    /// was evaluated.
    Degenerate { latest: S },
    /// A denominator vanished.
    Singular(String),
    /// The objective was evaluated outside its domain.
    Domain(String),
    /// The symbolic engine could not represent the operation.
    Algebra(String),
}

pub type StepResult<S, T = S> = Result<T, StepFault<S>>;

pub trait Arith: Clone + Sized {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> StepResult<Self>;
    fn powi(&self, n: i32) -> StepResult<Self>;
    fn powr(&self, q: &Rational) -> StepResult<Self>;
    /// True only for a value known to be exactly zero.
    fn is_exact_zero(&self) -> bool;
}

/// Interpolation nodes of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    X,
    W,
    Y,
    Z,
}

impl Node {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Node::X => "x",
            Node::W => "w",
            Node::Y => "y",
            Node::Z => "z",
        }
    }
}

/// Arguments `t1..t5` of a weight function.
pub type Slots<S> = [Option<S>; 5];

/// Constants and named parameters in the scalar domain.
pub trait Scalars<S> {
    fn constant(&self, q: &Rational) -> S;
    fn param(&self, name: &str) -> StepResult<S>;
    /// Exact value of a parameter, when it has one.
    fn param_exact(&self, name: &str) -> Option<Rational>;
}

/// Access to the objective during one iteration.
pub trait Oracle<S: Arith>: Scalars<S> {
    /// The derivative-free offset parameter (`kappa` or `beta`).
    fn offset(&self) -> StepResult<S>;
    fn f(&mut self, node: Node, at: &S) -> StepResult<S>;
    fn df(&mut self, at: &S) -> StepResult<S>;
    /// `f[a, b]`.
    fn dd(&mut self, a: (Node, &S), b: (Node, &S)) -> StepResult<S>;
    /// `f[z, x, x]`.
    fn dd2(&mut self, z: &S, x: &S) -> StepResult<S>;
    /// `w(t) * mult`.
    fn weighted(&mut self, w: &WeightFn, slots: &Slots<S>, mult: &S) -> StepResult<S>;
}

fn domain<S>(e: NumericError) -> StepFault<S> {
    match e {
        NumericError::DivisionByZero => StepFault::Singular("division by zero".into()),
        other => StepFault::Domain(other.to_string()),
    }
}

impl Arith for BigReal {
    fn add(&self, o: &Self) -> Self {
        self + o
    }

    fn sub(&self, o: &Self) -> Self {
        self - o
    }

    fn mul(&self, o: &Self) -> Self {
        self * o
    }

    fn neg(&self) -> Self {
        -self
    }

    fn div(&self, o: &Self) -> StepResult<Self> {
        if o.is_zero() {
            return Err(StepFault::Singular("zero denominator".into()));
        }
        self.checked_div(o).map_err(domain)
    }

    fn powi(&self, n: i32) -> StepResult<Self> {
        if n < 0 && self.is_zero() {
            return Err(StepFault::Singular("zero to a negative power".into()));
        }
        BigReal::powi(self, n).map_err(domain)
    }

    fn powr(&self, q: &Rational) -> StepResult<Self> {
        BigReal::powr(self, q).map_err(domain)
    }

    fn is_exact_zero(&self) -> bool {
        self.is_zero()
    }
}
