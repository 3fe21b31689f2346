//! Untyped lambda calculus: terms, surface syntax and bounded reduction.

mod expr;
mod reduce;
mod syntax;

pub use expr::{alpha_equivalent, Kind, LambdaExpr};
pub use reduce::{
    apply_and_reduce, reduce_to_normal_form, step, LimitKind, ReductionLimits, ReductionOutcome,
};
pub use syntax::{parse, parse_closed, print, ParseError};
