//! Leftmost-outermost β-reduction under step and vertex budgets.

use serde::{Deserialize, Serialize};

use super::expr::{Kind, LambdaExpr};

/// Budget for a single reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionLimits {
    /// Maximum number of β-reductions.
    pub max_steps: u32,
    /// Maximum vertex count of any intermediate expression.
    pub max_vertices: u32,
}

impl Default for ReductionLimits {
    fn default() -> Self {
        Self {
            max_steps: 8000,
            max_vertices: 1000,
        }
    }
}

impl ReductionLimits {
    pub fn new(max_steps: u32, max_vertices: u32) -> Option<Self> {
        (max_steps > 0 && max_vertices > 0).then_some(Self {
            max_steps,
            max_vertices,
        })
    }
}

/// Which budget a reduction ran out of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimitKind {
    Steps,
    Vertices,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionOutcome {
    NormalForm { expr: LambdaExpr, steps_used: u32 },
    StepLimitExceeded,
    SizeLimitExceeded,
}

impl ReductionOutcome {
    pub fn normal_form(&self) -> Option<&LambdaExpr> {
        match self {
            ReductionOutcome::NormalForm { expr, .. } => Some(expr),
            _ => None,
        }
    }

    pub fn into_normal_form(self) -> Option<LambdaExpr> {
        match self {
            ReductionOutcome::NormalForm { expr, .. } => Some(expr),
            _ => None,
        }
    }

    pub fn limit(&self) -> Option<LimitKind> {
        match self {
            ReductionOutcome::NormalForm { .. } => None,
            ReductionOutcome::StepLimitExceeded => Some(LimitKind::Steps),
            ReductionOutcome::SizeLimitExceeded => Some(LimitKind::Vertices),
        }
    }
}

/// Reduces `expr` to normal form, contracting the leftmost-outermost redex
/// first.
///
/// The vertex budget is checked against the whole term before the first step
/// and after every contraction. Exactly `max_steps` contractions are allowed;
/// a term still reducible after that is reported as `StepLimitExceeded`.
pub fn reduce_to_normal_form(expr: &LambdaExpr, limits: ReductionLimits) -> ReductionOutcome {
    let mut term = expr.clone();
    if term.size_u32() > limits.max_vertices {
        return ReductionOutcome::SizeLimitExceeded;
    }
    let mut steps = 0u32;
    while !term.is_normal() {
        if steps >= limits.max_steps {
            return ReductionOutcome::StepLimitExceeded;
        }
        term = contract_leftmost(&term);
        steps += 1;
        if term.size_u32() > limits.max_vertices {
            return ReductionOutcome::SizeLimitExceeded;
        }
    }
    ReductionOutcome::NormalForm {
        expr: term,
        steps_used: steps,
    }
}

/// Reduces the application `a b`.
pub fn apply_and_reduce(a: &LambdaExpr, b: &LambdaExpr, limits: ReductionLimits) -> ReductionOutcome {
    reduce_to_normal_form(&LambdaExpr::app(a.clone(), b.clone()), limits)
}

/// Performs a single leftmost-outermost β-contraction. Returns `None` for a
/// term already in normal form.
pub fn step(expr: &LambdaExpr) -> Option<LambdaExpr> {
    (!expr.is_normal()).then(|| contract_leftmost(expr))
}

// Normal subterms are skipped via the cached flag, so locating the redex costs
// the length of the path to it.
fn contract_leftmost(term: &LambdaExpr) -> LambdaExpr {
    debug_assert!(!term.is_normal());
    match term.kind() {
        Kind::Abs(body) => LambdaExpr::abs(contract_leftmost(body)),
        Kind::App(f, a) => match f.kind() {
            Kind::Abs(body) => beta(body, a),
            _ if !f.is_normal() => LambdaExpr::app(contract_leftmost(f), a.clone()),
            _ => LambdaExpr::app(f.clone(), contract_leftmost(a)),
        },
        Kind::Var(_) | Kind::Free(_) => unreachable!("variables are always normal"),
    }
}

/// `(\. body) arg`: substitute `arg` for index 0 of `body` and drop the binder.
pub(crate) fn beta(body: &LambdaExpr, arg: &LambdaExpr) -> LambdaExpr {
    let mut shifted = Vec::new();
    instantiate(body, arg, 0, &mut shifted)
}

fn instantiate(
    term: &LambdaExpr,
    arg: &LambdaExpr,
    depth: u32,
    shifted: &mut Vec<Option<LambdaExpr>>,
) -> LambdaExpr {
    if term.loose_bound() <= depth {
        return term.clone();
    }
    match term.kind() {
        Kind::Var(i) if *i == depth => {
            let slot = depth as usize;
            if shifted.len() <= slot {
                shifted.resize(slot + 1, None);
            }
            shifted[slot]
                .get_or_insert_with(|| arg.shift(depth, 0))
                .clone()
        }
        Kind::Var(i) => LambdaExpr::var(i - 1),
        Kind::Free(_) => term.clone(),
        Kind::Abs(b) => LambdaExpr::abs(instantiate(b, arg, depth + 1, shifted)),
        Kind::App(f, a) => LambdaExpr::app(
            instantiate(f, arg, depth, shifted),
            instantiate(a, arg, depth, shifted),
        ),
    }
}
