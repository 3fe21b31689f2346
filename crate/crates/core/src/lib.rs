//! Algorithmic chemistry over the untyped lambda calculus.
//!
//! A soup of normal-form lambda expressions evolves by random pairwise
//! collisions. Amplifier elements embed a unit test and copy any molecule that
//! passes it back into the soup, steering the population toward target
//! functions such as successor or addition on Church numerals.

pub mod amplifier;
pub mod experiments;
pub mod lambda;
pub mod metrics;
pub mod soup;
pub mod stdlib;

pub use lambda::{LambdaExpr, ReductionLimits, ReductionOutcome};
