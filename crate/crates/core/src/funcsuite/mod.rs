//! Test functions: expression parsing, derivatives and reference roots.

mod expr;
mod suite;

pub use expr::{parse_expression, Expr, ExprError, Literal};
pub use suite::{
    builtin_function, builtin_ids, builtin_suite, evaluate, evaluate_derivative, refine_root,
    EvalCounter, RootError, SuiteError, TestFunction,
};
