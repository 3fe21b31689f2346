//! Amplifier test functions.
//!
//! An amplifier embeds one unit test `\f. eq (f n1 .. nk) m`. Colliding it
//! with a candidate that passes returns copies of the candidate; a failing
//! candidate returns the amplifier itself. The copying is carried out by the
//! soup engine; this module decides pass, fail or inert.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda::{reduce_to_normal_form, LambdaExpr, LimitKind, ReductionLimits, ReductionOutcome};
use crate::stdlib::{church, decode_bool, Combinator};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmplifierError {
    #[error("a unit test needs at least one input")]
    NoInputs,
    #[error("test expression for {0} does not normalize within the construction budget")]
    Unnormalizable(String),
    #[error("amplification factor must be at least 1")]
    ZeroFactor,
}

/// `f(inputs) == expected`, encoded as a closed normal-form lambda term that
/// takes `f` and returns a Church boolean.
#[derive(Debug, Clone)]
pub struct UnitTest {
    inputs: Vec<u32>,
    expected: u32,
    test_expr: LambdaExpr,
}

/// Generous budget for normalizing test templates at construction time.
const CONSTRUCTION_LIMITS: ReductionLimits = ReductionLimits {
    max_steps: 1_000_000,
    max_vertices: 1_000_000,
};

impl UnitTest {
    pub fn inputs(&self) -> &[u32] {
        &self.inputs
    }

    pub fn expected(&self) -> u32 {
        self.expected
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn test_expr(&self) -> &LambdaExpr {
        &self.test_expr
    }

    /// The unreduced template `\f. EQ (f n1 .. nk) m`.
    pub fn template(inputs: &[u32], expected: u32) -> LambdaExpr {
        let call = LambdaExpr::apply_all(LambdaExpr::var(0), inputs.iter().map(|&n| church(n)));
        LambdaExpr::abs(LambdaExpr::apply_all(
            Combinator::Eq.expr(),
            [call, church(expected)],
        ))
    }
}

impl PartialEq for UnitTest {
    fn eq(&self, other: &Self) -> bool {
        self.inputs == other.inputs && self.expected == other.expected
    }
}

impl Eq for UnitTest {}

impl fmt::Display for UnitTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(= (f")?;
        for n in &self.inputs {
            write!(f, " {n}")?;
        }
        write!(f, ") {})", self.expected)
    }
}

/// Builds the unit test `f(inputs) == expected`.
pub fn make_unit_test(inputs: &[u32], expected: u32) -> Result<UnitTest, AmplifierError> {
    if inputs.is_empty() {
        return Err(AmplifierError::NoInputs);
    }
    let template = UnitTest::template(inputs, expected);
    let test_expr = reduce_to_normal_form(&template, CONSTRUCTION_LIMITS)
        .into_normal_form()
        .ok_or_else(|| AmplifierError::Unnormalizable(format!("{inputs:?} -> {expected}")))?;
    Ok(UnitTest {
        inputs: inputs.to_vec(),
        expected,
        test_expr,
    })
}

/// Which trickster heuristics are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FilterPolicy {
    /// Candidate must have at least `k` leading abstractions.
    pub require_arity: bool,
    /// Candidate's body must reference each of its first `k` binders.
    pub require_argument_use: bool,
    /// Reject `true`/`false` wrapped in any number of abstractions.
    pub reject_wrapped_booleans: bool,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self::ALL
    }
}

impl FilterPolicy {
    pub const ALL: FilterPolicy = FilterPolicy {
        require_arity: true,
        require_argument_use: true,
        reject_wrapped_booleans: true,
    };

    pub const NONE: FilterPolicy = FilterPolicy {
        require_arity: false,
        require_argument_use: false,
        reject_wrapped_booleans: false,
    };
}

/// The heuristic that rejected a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Filter {
    Arity,
    ArgumentUse,
    WrappedBoolean,
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Filter::Arity => "arity",
            Filter::ArgumentUse => "argument-use",
            Filter::WrappedBoolean => "wrapped-boolean",
        })
    }
}

/// Runs the enabled trickster heuristics against a `k`-ary test.
pub fn passes_filters(candidate: &LambdaExpr, arity: usize, policy: FilterPolicy) -> Result<(), Filter> {
    if policy.require_arity && candidate.leading_abstractions() < arity {
        return Err(Filter::Arity);
    }
    if policy.require_argument_use && !uses_leading_arguments(candidate, arity) {
        return Err(Filter::ArgumentUse);
    }
    if policy.reject_wrapped_booleans && is_wrapped_boolean(candidate) {
        return Err(Filter::WrappedBoolean);
    }
    Ok(())
}

fn uses_leading_arguments(candidate: &LambdaExpr, arity: usize) -> bool {
    let mut body = candidate;
    for _ in 0..arity {
        match body.as_abs() {
            Some(b) => body = b,
            None => return false,
        }
    }
    // binder j (0 = outermost) sits at index arity - 1 - j inside the body
    (0..arity as u32).all(|index| body.references(index))
}

fn is_wrapped_boolean(candidate: &LambdaExpr) -> bool {
    let (t, f) = (Combinator::True.expr(), Combinator::False.expr());
    let mut cur = candidate;
    loop {
        if *cur == t || *cur == f {
            return true;
        }
        match cur.as_abs() {
            Some(b) => cur = b,
            None => return false,
        }
    }
}

/// Index of an amplifier within a soup's registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AmplifierId(pub u32);

/// A registered amplifier: its test, how many copies a pass yields, and the
/// trickster filters it applies.
#[derive(Debug, Clone)]
pub struct AmplifierSpec {
    /// Family label used for counting, e.g. `scc_test`.
    pub family: String,
    pub test: UnitTest,
    pub amplification_factor: u32,
    pub filters: FilterPolicy,
}

impl AmplifierSpec {
    pub fn new(
        family: impl Into<String>,
        test: UnitTest,
        amplification_factor: u32,
        filters: FilterPolicy,
    ) -> Result<Self, AmplifierError> {
        if amplification_factor == 0 {
            return Err(AmplifierError::ZeroFactor);
        }
        Ok(Self {
            family: family.into(),
            test,
            amplification_factor,
            filters,
        })
    }
}

/// Amplifiers are interchangeable iff they carry the same test.
impl PartialEq for AmplifierSpec {
    fn eq(&self, other: &Self) -> bool {
        self.test == other.test
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmplifierResult {
    /// The test reduced to `true`.
    Pass(LambdaExpr),
    /// The test reduced to something other than `true`, or a filter rejected
    /// the candidate before reduction.
    Fail(Option<Filter>),
    /// The test application ran out of budget.
    Inert(LimitKind),
}

/// Evaluates `test candidate` after the syntactic filters.
pub fn evaluate_candidate(
    spec: &AmplifierSpec,
    candidate: &LambdaExpr,
    limits: ReductionLimits,
) -> AmplifierResult {
    if let Err(filter) = passes_filters(candidate, spec.test.arity(), spec.filters) {
        return AmplifierResult::Fail(Some(filter));
    }
    let application = LambdaExpr::app(spec.test.test_expr.clone(), candidate.clone());
    match reduce_to_normal_form(&application, limits) {
        ReductionOutcome::NormalForm { expr, .. } => match decode_bool(&expr) {
            Some(true) => AmplifierResult::Pass(candidate.clone()),
            _ => AmplifierResult::Fail(None),
        },
        ReductionOutcome::StepLimitExceeded => AmplifierResult::Inert(LimitKind::Steps),
        ReductionOutcome::SizeLimitExceeded => AmplifierResult::Inert(LimitKind::Vertices),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::parse_closed;

    fn p(s: &str) -> LambdaExpr {
        parse_closed(s).unwrap()
    }

    fn spec(inputs: &[u32], expected: u32) -> AmplifierSpec {
        AmplifierSpec::new("t", make_unit_test(inputs, expected).unwrap(), 100, FilterPolicy::ALL).unwrap()
    }

    #[test]
    fn unit_test_is_closed_normal_form() {
        let t = make_unit_test(&[4], 5).unwrap();
        assert!(t.test_expr().is_closed());
        assert!(t.test_expr().is_normal());
        assert_eq!(t.arity(), 1);
        assert_eq!(t.to_string(), "(= (f 4) 5)");
        assert_eq!(make_unit_test(&[2, 3], 5).unwrap().arity(), 2);
        assert_eq!(make_unit_test(&[], 5).unwrap_err(), AmplifierError::NoInputs);
    }

    #[test]
    fn unit_tests_compare_by_contents() {
        assert_eq!(make_unit_test(&[0], 2).unwrap(), make_unit_test(&[0], 2).unwrap());
        assert_ne!(make_unit_test(&[0], 2).unwrap(), make_unit_test(&[0], 1).unwrap());
    }

    #[test]
    fn arity_filter() {
        assert_eq!(passes_filters(&p(r"\x.x"), 2, FilterPolicy::ALL), Err(Filter::Arity));
        assert_eq!(passes_filters(&p(r"\x.x"), 1, FilterPolicy::ALL), Ok(()));
    }

    #[test]
    fn argument_use_filter() {
        let ignores_n = p(r"\n.\a.\b.a b");
        assert_eq!(passes_filters(&ignores_n, 1, FilterPolicy::ALL), Err(Filter::ArgumentUse));
        let ignores_m = p(r"\n.\m.n");
        assert_eq!(passes_filters(&ignores_m, 2, FilterPolicy::ALL), Err(Filter::ArgumentUse));
        let only_arity = FilterPolicy {
            require_argument_use: false,
            ..FilterPolicy::ALL
        };
        assert_eq!(passes_filters(&ignores_n, 1, only_arity), Ok(()));
    }

    #[test]
    fn wrapped_boolean_filter() {
        for text in [r"\q.\a.\b.a", r"\a.\b.a", r"\a.\b.b", r"\x.\y.\z.\a.\b.b"] {
            assert_eq!(
                passes_filters(&p(text), 0, FilterPolicy::ALL),
                Err(Filter::WrappedBoolean),
                "{text}"
            );
        }
        // refers outside the inner pair, so not a wrapped constant boolean
        assert_eq!(passes_filters(&p(r"\x.\a.\b.x"), 1, FilterPolicy::ALL), Ok(()));
    }

    #[test]
    fn reference_functions_survive_filters() {
        assert_eq!(passes_filters(&Combinator::Scc.expr(), 1, FilterPolicy::ALL), Ok(()));
        assert_eq!(passes_filters(&Combinator::Add2.expr(), 1, FilterPolicy::ALL), Ok(()));
        assert_eq!(passes_filters(&Combinator::Add.expr(), 2, FilterPolicy::ALL), Ok(()));
    }

    #[test]
    fn successor_candidates() {
        let limits = ReductionLimits::default();
        let s = spec(&[2], 3);
        assert_eq!(
            evaluate_candidate(&s, &Combinator::Scc.expr(), limits),
            AmplifierResult::Pass(Combinator::Scc.expr())
        );
        // K is `true` itself and is rejected by the wrapped-boolean heuristic
        assert_eq!(
            evaluate_candidate(&s, &Combinator::K.expr(), limits),
            AmplifierResult::Fail(Some(Filter::WrappedBoolean))
        );
        let unfiltered = AmplifierSpec { filters: FilterPolicy::NONE, ..s };
        assert_eq!(
            evaluate_candidate(&unfiltered, &Combinator::K.expr(), limits),
            AmplifierResult::Fail(None)
        );
    }

    #[test]
    fn addition_candidate() {
        let s = spec(&[2, 3], 5);
        assert_eq!(
            evaluate_candidate(&s, &Combinator::Add.expr(), ReductionLimits::default()),
            AmplifierResult::Pass(Combinator::Add.expr())
        );
    }

    #[test]
    fn factor_must_be_positive() {
        let t = make_unit_test(&[1], 2).unwrap();
        assert_eq!(
            AmplifierSpec::new("t", t, 0, FilterPolicy::ALL).unwrap_err(),
            AmplifierError::ZeroFactor
        );
    }
}
