//! Iteration engine: divided differences, weight functions, the FD
//! families and the registry of reference methods.

mod arith;
mod engine;
mod registry;
mod steppers;
mod weights;

use thiserror::Error;

use crate::bigreal::BigReal;

pub use arith::{Arith, Node, Oracle, Scalars, Slots, StepFault, StepResult};
pub use engine::{
    divided_difference, iterate, second_divided_difference, single_step, IterationTrace, Probe,
    RunStatus,
};
pub use registry::{
    builtin_method, parse_method_spec, parse_rational, MethodKind, MethodScheme, BUILTIN_METHODS,
};
pub use steppers::{step, Step, Stepper, Weights};
pub use weights::{
    multi_index_label, Condition, GenericCoef, GenericWeight, MultiIndex, NumericParams, Params,
    WExpr, WeightError, WeightFn, WeightForm,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("cannot read method {spec:?}: {message}")]
    MethodSyntax { spec: String, message: String },
    #[error("method {method} has no parameter {param}")]
    UnknownParameter { method: String, param: String },
    #[error("method {0}: the offset parameter must be nonzero")]
    ZeroOffset(String),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("interpolation nodes coincide")]
    DegenerateNodes,
    #[error("singular step: {0}")]
    SingularStep(String),
    #[error("domain error: {0}")]
    Domain(String),
}

impl SchemeError {
    pub(crate) fn from_fault(e: StepFault<BigReal>) -> Self {
        match e {
            StepFault::Degenerate { .. } => SchemeError::DegenerateNodes,
            StepFault::Singular(m) => SchemeError::SingularStep(m),
            StepFault::Root(_) => SchemeError::SingularStep("unexpected root".into()),
            StepFault::Domain(m) | StepFault::Algebra(m) => SchemeError::Domain(m),
        }
    }
}
