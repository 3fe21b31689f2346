//! Random closed expressions by the binary tree method: pick a target vertex
//! count, split it recursively into application subtrees and abstractions,
//! then reduce the result to normal form.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambda::{reduce_to_normal_form, LambdaExpr, ReductionLimits};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Smallest tree (in vertices) sampled before reduction.
    pub min_size: u32,
    /// Largest tree (in vertices) sampled before reduction.
    pub max_size: u32,
    /// Probability that an interior vertex with a binder in scope is an
    /// abstraction rather than an application.
    pub abstraction_probability: f64,
    /// Attempts before giving up on a term that will not normalize.
    pub max_resamples: u32,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            min_size: 8,
            max_size: 24,
            abstraction_probability: 0.3,
            max_resamples: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(&'static str),
    #[error("no normalizing expression after {0} attempts")]
    Exhausted(u32),
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.min_size < 2 {
            return Err(GenerationError::InvalidParams("min_size must be at least 2"));
        }
        if self.max_size < self.min_size {
            return Err(GenerationError::InvalidParams("max_size below min_size"));
        }
        if !(0.0..=1.0).contains(&self.abstraction_probability) {
            return Err(GenerationError::InvalidParams("abstraction_probability outside [0, 1]"));
        }
        if self.max_resamples == 0 {
            return Err(GenerationError::InvalidParams("max_resamples must be positive"));
        }
        Ok(())
    }
}

/// Samples a closed tree with exactly `size` vertices (`size >= 2`).
pub fn random_tree<R: Rng + ?Sized>(size: u32, abstraction_probability: f64, rng: &mut R) -> LambdaExpr {
    grow(size.max(2), 0, abstraction_probability, rng)
}

fn grow<R: Rng + ?Sized>(size: u32, depth: u32, p_abs: f64, rng: &mut R) -> LambdaExpr {
    match size {
        1 => LambdaExpr::var(rng.gen_range(0..depth)),
        2 => LambdaExpr::abs(grow(1, depth + 1, p_abs, rng)),
        _ if depth == 0 || rng.gen_bool(p_abs) => LambdaExpr::abs(grow(size - 1, depth + 1, p_abs, rng)),
        _ => {
            let left = rng.gen_range(1..=size - 2);
            let right = size - 1 - left;
            LambdaExpr::app(grow(left, depth, p_abs, rng), grow(right, depth, p_abs, rng))
        }
    }
}

/// A closed normal-form expression drawn from `params`.
pub fn random_expression<R: Rng + ?Sized>(
    params: &GeneratorParams,
    limits: ReductionLimits,
    rng: &mut R,
) -> Result<LambdaExpr, GenerationError> {
    params.validate()?;
    for _ in 0..params.max_resamples {
        let size = rng.gen_range(params.min_size..=params.max_size);
        let tree = random_tree(size, params.abstraction_probability, rng);
        if let Some(expr) = reduce_to_normal_form(&tree, limits).into_normal_form() {
            return Ok(expr);
        }
    }
    Err(GenerationError::Exhausted(params.max_resamples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smallest_trees_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = GeneratorParams {
            min_size: 2,
            max_size: 2,
            abstraction_probability: 1.0,
            max_resamples: 100,
        };
        for _ in 0..20 {
            let e = random_expression(&params, ReductionLimits::default(), &mut rng).unwrap();
            assert_eq!(e, LambdaExpr::abs(LambdaExpr::var(0)));
        }
    }

    #[test]
    fn trees_have_requested_size_and_are_closed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for size in 2..40 {
            let t = random_tree(size, 0.4, &mut rng);
            assert_eq!(t.size(), size as usize);
            assert!(t.is_closed());
        }
    }

    #[test]
    fn outputs_are_closed_normal_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = GeneratorParams::default();
        for _ in 0..500 {
            let e = random_expression(&params, ReductionLimits::default(), &mut rng).unwrap();
            assert!(e.is_closed() && e.is_normal(), "{e}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = GeneratorParams {
            min_size: 5,
            max_size: 4,
            ..GeneratorParams::default()
        };
        assert!(matches!(
            random_expression(&bad, ReductionLimits::default(), &mut rng),
            Err(GenerationError::InvalidParams(_))
        ));
    }

    #[test]
    fn gives_up_when_nothing_normalizes() {
        // a vertex budget smaller than any sampled tree
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = GeneratorParams {
            min_size: 10,
            max_size: 10,
            abstraction_probability: 0.5,
            max_resamples: 5,
        };
        let tight = ReductionLimits::new(8000, 5).unwrap();
        assert_eq!(
            random_expression(&params, tight, &mut rng),
            Err(GenerationError::Exhausted(5))
        );
    }
}
