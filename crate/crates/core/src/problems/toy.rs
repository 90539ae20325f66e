use std::sync::Arc;

use rand::Rng;

use super::{LossStream, ProblemSpec};
use crate::convex::{Affine, L1NormBound, SharedFn};
use crate::error::Result;
use crate::primitives::{norm, BallDomain, DecisionVector};
use crate::rng::{stream_rng, TOY_LOSS};

/// Linear losses `c_tᵀx` with `c_t` uniform on `[0, 1.2] × [0, 1]`, rescaled
/// to unit norm.
#[derive(Clone, Copy, Debug, Default)]
pub struct ToyStream;

impl ToyStream {
    /// The cost vector before normalization.
    pub fn raw_cost(seed: u64, t: usize) -> [f64; 2] {
        let mut rng = stream_rng(seed, TOY_LOSS, t as u64);
        loop {
            let c = [rng.random_range(0.0..1.2), rng.random_range(0.0..1.0)];
            if norm(&c) > 0.0 {
                return c;
            }
        }
    }

    pub fn cost(seed: u64, t: usize) -> [f64; 2] {
        let c = Self::raw_cost(seed, t);
        let n = norm(&c);
        [c[0] / n, c[1] / n]
    }
}

impl LossStream for ToyStream {
    fn loss(&self, seed: u64, t: usize) -> SharedFn {
        Arc::new(Affine::new(Self::cost(seed, t), 0.0))
    }

    fn mean_loss(&self, seed: u64, horizon: usize) -> SharedFn {
        let mut sum = [0.0, 0.0];
        for t in 1..=horizon {
            let c = Self::cost(seed, t);
            sum[0] += c[0];
            sum[1] += c[1];
        }
        let h = horizon as f64;
        Arc::new(Affine::new([sum[0] / h, sum[1] / h], 0.0))
    }
}

/// The two-dimensional toy problem: linear losses under `|x₁| + |x₂| ≤ 1`.
///
/// `R = 1` (the ℓ1 unit ball sits inside the ℓ2 unit ball) and
/// `G = max(‖c_t‖, ‖∂‖x‖₁‖) = √2`. The seed is only used by the loss stream.
pub fn toy_problem() -> Result<ProblemSpec> {
    let constraint: SharedFn = Arc::new(L1NormBound {
        dim: 2,
        radius: 1.0,
    });
    ProblemSpec::new(
        "toy",
        vec![constraint],
        BallDomain::new(1.0, 2)?,
        2f64.sqrt(),
        DecisionVector::zeros(2),
        Arc::new(ToyStream),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::test_support::assert_lipschitz_bound;

    #[test]
    fn costs_have_unit_norm() {
        for seed in 0..3 {
            for t in 1..500 {
                let c = ToyStream::cost(seed, t);
                assert!((norm(&c) - 1.0).abs() <= 1e-12);
                assert!(c[0] >= 0.0 && c[1] >= 0.0);
            }
        }
    }

    #[test]
    fn origin_is_strictly_feasible() {
        let p = toy_problem().unwrap();
        assert_eq!(p.constraints[0].eval(&[0.0, 0.0]), -1.0);
        assert!(p
            .constraint_values(&p.feasible_point)
            .iter()
            .all(|&g| g < 0.0));
    }

    #[test]
    fn raw_cost_mean_matches_uniform_box() {
        let draws = 100_000;
        let mut mean = [0.0, 0.0];
        for t in 1..=draws {
            let c = ToyStream::raw_cost(11, t);
            mean[0] += c[0] / draws as f64;
            mean[1] += c[1] / draws as f64;
        }
        assert!((mean[0] - 0.6).abs() < 0.01, "{mean:?}");
        assert!((mean[1] - 0.5).abs() < 0.01, "{mean:?}");
    }

    #[test]
    fn stream_is_seed_deterministic() {
        let p = toy_problem().unwrap();
        let x = [0.3, -0.2];
        assert_eq!(p.loss(5, 17).eval(&x), p.loss(5, 17).eval(&x));
        assert_ne!(p.loss(5, 17).eval(&x), p.loss(6, 17).eval(&x));
    }

    #[test]
    fn closed_form_mean_matches_average() {
        let p = toy_problem().unwrap();
        let closed = p.mean_loss(3, 40);
        let generic = super::super::MeanFn::new(p.losses(3, 40));
        for x in [[0.1, 0.9], [-0.5, 0.2]] {
            assert!((closed.eval(&x) - crate::convex::ConvexFn::eval(&generic, &x)).abs() < 1e-14);
        }
    }

    #[test]
    fn declared_g_bounds_subgradients() {
        assert_lipschitz_bound(&toy_problem().unwrap(), 1000);
    }
}
