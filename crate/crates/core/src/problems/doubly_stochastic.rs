use std::sync::Arc;

use rand::seq::SliceRandom;

use super::{LossStream, ProblemSpec};
use crate::convex::{Affine, HalfSquaredDistance, SharedFn, Shifted};
use crate::error::{OcoError, Result};
use crate::primitives::{BallDomain, DecisionVector};
use crate::rng::{stream_rng, PERMUTATION_LOSS};

pub const DEFAULT_MATRIX_DIM: usize = 5;

/// A uniformly random `d × d` permutation matrix, flattened row-major.
pub fn random_permutation(d: usize, seed: u64, t: usize) -> DecisionVector {
    let mut rng = stream_rng(seed, PERMUTATION_LOSS, t as u64);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let mut y = vec![0.0; d * d];
    for (row, &col) in perm.iter().enumerate() {
        y[row * d + col] = 1.0;
    }
    y.into()
}

#[derive(Clone, Copy, Debug)]
struct PermutationStream {
    d: usize,
}

impl LossStream for PermutationStream {
    fn loss(&self, seed: u64, t: usize) -> SharedFn {
        Arc::new(HalfSquaredDistance {
            target: random_permutation(self.d, seed, t),
        })
    }

    /// `(1/T) Σ ½‖Y_t − X‖² = ½‖X − Ȳ‖² + ½(d − ‖Ȳ‖²)` since `‖Y_t‖² = d`.
    fn mean_loss(&self, seed: u64, horizon: usize) -> SharedFn {
        let n = self.d * self.d;
        let mut mean = DecisionVector::zeros(n);
        for t in 1..=horizon {
            mean.axpy(1.0 / horizon as f64, &random_permutation(self.d, seed, t));
        }
        let shift = 0.5 * (self.d as f64 - mean.dot(&mean));
        Arc::new(Shifted {
            inner: Arc::new(HalfSquaredDistance { target: mean }),
            shift,
        })
    }
}

fn unit(n: usize, idx: impl IntoIterator<Item = usize>, sign: f64) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for i in idx {
        c[i] = sign;
    }
    c
}

/// Online approximation by doubly-stochastic matrices.
///
/// `f_t(X) = ½‖Y_t − X‖²_F` for random permutation matrices `Y_t`. The
/// equalities `X1 = 1`, `Xᵀ1 = 1` are split into `≤`/`≥` pairs, giving
/// `m = 4d + d²` linear constraints in the order: row sums `≤ 1`, row sums
/// `≥ 1`, column sums `≤ 1`, column sums `≥ 1`, then `X_ij ≥ 0` row-major.
///
/// `R = d` (a doubly stochastic matrix has `‖X‖_F ≤ √d`), `G = d + √d`
/// (bounds `‖X − Y_t‖` on the ball), and `H1 = 1`.
pub fn doubly_stochastic_problem(d: usize) -> Result<ProblemSpec> {
    if d < 2 {
        return Err(OcoError::InvalidParameter(format!(
            "matrix dimension must be ≥ 2, got {d}"
        )));
    }
    let n = d * d;
    let mut gs: Vec<SharedFn> = Vec::with_capacity(4 * d + n);
    let rows = |i: usize| (0..d).map(move |j| i * d + j);
    let cols = |j: usize| (0..d).map(move |i| i * d + j);
    for i in 0..d {
        gs.push(Arc::new(Affine::new(unit(n, rows(i), 1.0), -1.0)));
    }
    for i in 0..d {
        gs.push(Arc::new(Affine::new(unit(n, rows(i), -1.0), 1.0)));
    }
    for j in 0..d {
        gs.push(Arc::new(Affine::new(unit(n, cols(j), 1.0), -1.0)));
    }
    for j in 0..d {
        gs.push(Arc::new(Affine::new(unit(n, cols(j), -1.0), 1.0)));
    }
    for k in 0..n {
        gs.push(Arc::new(Affine::new(unit(n, [k], -1.0), 0.0)));
    }

    let df = d as f64;
    let radius = df;
    let uniform = DecisionVector::new(vec![1.0 / df; n]);
    Ok(ProblemSpec::new(
        "doubly-stochastic",
        gs,
        BallDomain::new(radius, n)?,
        radius + df.sqrt(),
        uniform,
        Arc::new(PermutationStream { d }),
    )?
    .with_strong_convexity(1.0)
    .with_metadata("matrix_dim", d)
    .with_metadata(
        "radius_note",
        "R = d; doubly stochastic matrices have Frobenius norm at most sqrt(d)",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{finite_diff_grad, relative_error, ConvexFn};
    use crate::problems::test_support::{assert_lipschitz_bound, sample_ball};

    #[test]
    fn rejects_small_dimension() {
        assert!(doubly_stochastic_problem(1).is_err());
        assert!(doubly_stochastic_problem(0).is_err());
    }

    #[test]
    fn shapes_and_constants() {
        let p = doubly_stochastic_problem(5).unwrap();
        assert_eq!(p.dim(), 25);
        assert_eq!(p.num_constraints(), 4 * 5 + 25);
        assert_eq!(p.strong_convexity, Some(1.0));
        assert_eq!(p.radius(), 5.0);
    }

    #[test]
    fn targets_are_permutation_matrices() {
        let d = 6;
        for t in 1..50 {
            let y = random_permutation(d, 3, t);
            for i in 0..d {
                let row: f64 = (0..d).map(|j| y[i * d + j]).sum();
                let col: f64 = (0..d).map(|j| y[j * d + i]).sum();
                assert_eq!(row, 1.0);
                assert_eq!(col, 1.0);
            }
            assert!(y.iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn uniform_matrix_is_feasible() {
        let p = doubly_stochastic_problem(4).unwrap();
        let g = p.constraint_values(&p.feasible_point);
        assert!(g.iter().all(|&v| v <= 1e-15));
        // nonnegativity holds strictly
        assert!(g[16..].iter().all(|&v| v < 0.0));
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let p = doubly_stochastic_problem(3).unwrap();
        let mut rng = crate::rng::stream_rng(1, 2, 3);
        for t in 1..=20 {
            let f = p.loss(4, t);
            let x = sample_ball(&mut rng, 9, p.radius());
            let fd = finite_diff_grad(f.as_ref(), &x, 1e-5);
            let sg = f.subgrad(&x);
            assert_eq!(
                &*sg,
                &*DecisionVector::new(x.clone()).sub(&random_permutation(3, 4, t))
            );
            assert!(relative_error(&sg, &fd) <= 1e-6);
        }
    }

    #[test]
    fn closed_form_mean_matches_average() {
        let p = doubly_stochastic_problem(3).unwrap();
        let closed = p.mean_loss(2, 30);
        let generic = super::super::MeanFn::new(p.losses(2, 30));
        let x = [0.2, -0.1, 0.4, 0.0, 1.0, 0.3, 0.5, 0.5, -0.2];
        assert!((closed.eval(&x) - generic.eval(&x)).abs() < 1e-12);
        assert!(relative_error(&closed.subgrad(&x), &generic.subgrad(&x)) < 1e-12);
    }

    #[test]
    fn declared_g_bounds_subgradients() {
        assert_lipschitz_bound(&doubly_stochastic_problem(4).unwrap(), 1000);
    }
}
