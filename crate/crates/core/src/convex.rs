//! Convex functions with subgradient oracles, and the subgradient calculus of
//! the clipped augmented Lagrangian.

use std::fmt;
use std::sync::Arc;

use crate::error::{OcoError, Result};
use crate::primitives::{clip_pos, norm, DecisionVector};

/// A convex function on `R^n` with a subgradient oracle.
///
/// Used both for the per-step losses `f_t` and for the constraints `g_i`.
pub trait ConvexFn: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// One element of the subdifferential at `x`.
    fn subgrad(&self, x: &[f64]) -> DecisionVector;

    /// Global Lipschitz constant, when the function has one independent of
    /// the domain (affine functions, norms).
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }

    /// Whether the function is differentiable everywhere, so that finite
    /// differences are a valid check on `subgrad`.
    fn is_smooth(&self) -> bool {
        true
    }
}

pub type SharedFn = Arc<dyn ConvexFn>;

/// `cᵀx + b`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub coeffs: DecisionVector,
    pub offset: f64,
}

impl Affine {
    pub fn new(coeffs: impl Into<DecisionVector>, offset: f64) -> Self {
        Affine {
            coeffs: coeffs.into(),
            offset,
        }
    }
}

impl ConvexFn for Affine {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.dot(x) + self.offset
    }

    fn subgrad(&self, _x: &[f64]) -> DecisionVector {
        self.coeffs.clone()
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.coeffs.norm())
    }
}

/// `‖x‖₁ − radius`. The subgradient is the sign vector with `sign(0) = 0`.
#[derive(Clone, Debug)]
pub struct L1NormBound {
    pub dim: usize,
    pub radius: f64,
}

impl ConvexFn for L1NormBound {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum::<f64>() - self.radius
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        x.iter()
            .map(|&v| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect::<Vec<_>>()
            .into()
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some((self.dim as f64).sqrt())
    }

    fn is_smooth(&self) -> bool {
        false
    }
}

/// `½‖x − target‖²` (the Frobenius loss when `x` is a flattened matrix).
#[derive(Clone, Debug)]
pub struct HalfSquaredDistance {
    pub target: DecisionVector,
}

impl ConvexFn for HalfSquaredDistance {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .zip(self.target.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        DecisionVector::new(x.to_vec()).sub(&self.target)
    }
}

/// A constant shifted copy of another function: `inner(x) + shift`.
#[derive(Clone, Debug)]
pub struct Shifted {
    pub inner: SharedFn,
    pub shift: f64,
}

impl ConvexFn for Shifted {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.inner.eval(x) + self.shift
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        self.inner.subgrad(x)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.inner.lipschitz_hint()
    }

    fn is_smooth(&self) -> bool {
        self.inner.is_smooth()
    }
}

/// A subgradient of `[g(x)]_+`: zero where `g(x) ≤ 0`, otherwise `∂g(x)`.
pub fn clipped_subgrad(g: &dyn ConvexFn, x: &[f64]) -> DecisionVector {
    if g.eval(x) <= 0.0 {
        DecisionVector::zeros(x.len())
    } else {
        g.subgrad(x)
    }
}

fn check_duals(gs: &[SharedFn], lambda: &[f64]) -> Result<()> {
    if gs.len() != lambda.len() {
        return Err(OcoError::DimensionMismatch {
            expected: gs.len(),
            got: lambda.len(),
        });
    }
    for (index, &value) in lambda.iter().enumerate() {
        if value.is_nan() {
            return Err(OcoError::NonFinite {
                context: format!("dual variable {index}"),
            });
        }
        if value < 0.0 {
            return Err(OcoError::NegativeDual { index, value });
        }
    }
    Ok(())
}

/// `∂f(x) + Σ λ_i ∂[g_i(x)]_+`, the primal subgradient of the clipped
/// augmented Lagrangian.
///
/// Constraint terms with `λ_i = 0` or `g_i(x) ≤ 0` contribute nothing and are
/// skipped, so a dual-free or all-feasible call returns `∂f(x)` bitwise.
pub fn lagrangian_grad_x(
    f: &dyn ConvexFn,
    gs: &[SharedFn],
    x: &[f64],
    lambda: &[f64],
) -> Result<DecisionVector> {
    check_duals(gs, lambda)?;
    let mut grad = f.subgrad(x);
    for (g, &l) in gs.iter().zip(lambda) {
        if l == 0.0 {
            continue;
        }
        if g.eval(x) > 0.0 {
            grad.axpy(l, &g.subgrad(x));
        }
    }
    Ok(grad)
}

/// `∂f(x) + Σ λ_i ∂g_i(x)`, the primal subgradient of the unclipped
/// augmented Lagrangian.
pub fn plain_lagrangian_grad_x(
    f: &dyn ConvexFn,
    gs: &[SharedFn],
    x: &[f64],
    lambda: &[f64],
) -> Result<DecisionVector> {
    check_duals(gs, lambda)?;
    let mut grad = f.subgrad(x);
    for (g, &l) in gs.iter().zip(lambda) {
        if l != 0.0 {
            grad.axpy(l, &g.subgrad(x));
        }
    }
    Ok(grad)
}

/// Central-difference gradient estimate `(f(x+he_i) − f(x−he_i)) / 2h`.
pub fn finite_diff_grad(f: &dyn ConvexFn, x: &[f64], h: f64) -> DecisionVector {
    assert!(h > 0.0, "finite difference step must be positive");
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f.eval(&probe);
        probe[i] = orig - h;
        let down = f.eval(&probe);
        probe[i] = orig;
        out.push((up - down) / (2.0 * h));
    }
    out.into()
}

/// Relative error `‖a − b‖ / max(1, ‖b‖)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b).max(1.0)
}

/// Value of the clipped augmented Lagrangian
/// `f(x) + Σ (λ_i [g_i(x)]_+ − θ/2 λ_i²)`.
pub fn clipped_lagrangian(
    f: &dyn ConvexFn,
    gs: &[SharedFn],
    x: &[f64],
    lambda: &[f64],
    theta: f64,
) -> f64 {
    f.eval(x)
        + gs.iter()
            .zip(lambda)
            .map(|(g, &l)| l * clip_pos(g.eval(x)) - 0.5 * theta * l * l)
            .sum::<f64>()
}
