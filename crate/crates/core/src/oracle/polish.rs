//! Method of multipliers for smooth problems, used to refine the
//! subgradient solution to high accuracy.

use crate::convex::ConvexFn;
use crate::primitives::{clip_pos, project_ball, DecisionVector};
use crate::problems::ProblemSpec;

const OUTER: usize = 60;
const INNER: usize = 5000;

/// `F(x) + (1/2ρ) Σ_i ([μ_i + ρ g_i(x)]_+² − μ_i²)`.
fn augmented(
    objective: &dyn ConvexFn,
    problem: &ProblemSpec,
    mu: &[f64],
    rho: f64,
    x: &[f64],
) -> f64 {
    let pen: f64 = problem
        .constraints
        .iter()
        .zip(mu)
        .map(|(g, &m)| {
            let s = clip_pos(m + rho * g.eval(x));
            s * s - m * m
        })
        .sum();
    objective.eval(x) + pen / (2.0 * rho)
}

fn augmented_grad(
    objective: &dyn ConvexFn,
    problem: &ProblemSpec,
    mu: &[f64],
    rho: f64,
    x: &[f64],
) -> DecisionVector {
    let mut grad = objective.subgrad(x);
    for (g, &m) in problem.constraints.iter().zip(mu) {
        let s = clip_pos(m + rho * g.eval(x));
        if s > 0.0 {
            grad.axpy(s, &g.subgrad(x));
        }
    }
    grad
}

/// Accelerated projected gradient with backtracking on the augmented
/// Lagrangian, from `x0`.
fn inner_solve(
    objective: &dyn ConvexFn,
    problem: &ProblemSpec,
    mu: &[f64],
    rho: f64,
    x0: DecisionVector,
) -> Option<DecisionVector> {
    let f = |x: &[f64]| augmented(objective, problem, mu, rho, x);
    let mut x = x0.clone();
    let mut y = x0;
    let mut lip = 1.0;
    let mut momentum = 1.0f64;
    for _ in 0..INNER {
        let fy = f(&y);
        let gy = augmented_grad(objective, problem, mu, rho, &y);
        if !gy.is_finite() || !fy.is_finite() {
            return None;
        }
        let next = loop {
            let mut z = y.clone();
            z.axpy(-1.0 / lip, &gy);
            let z = project_ball(&z, &problem.domain).ok()?;
            let step = z.sub(&y);
            let bound = fy + gy.dot(&step) + 0.5 * lip * step.dot(&step);
            if f(&z) <= bound + 1e-15 * fy.abs().max(1.0) || lip > 1e20 {
                break z;
            }
            lip *= 2.0;
        };
        let moved = next.sub(&x).norm();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let mut y_next = next.clone();
        y_next.axpy((momentum - 1.0) / t_next, &next.sub(&x));
        // Restart the momentum when it stops helping.
        if f(&next) > f(&x) {
            y_next = next.clone();
            momentum = 1.0;
        } else {
            momentum = t_next;
        }
        x = next;
        y = y_next;
        lip = (lip * 0.9).max(1e-12);
        if moved <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    Some(x)
}

/// Minimizes `objective` over the ball and the problem's constraints, which
/// must all be smooth. Returns `None` on numerical failure.
pub(super) fn multiplier_method(
    objective: &dyn ConvexFn,
    problem: &ProblemSpec,
    start: DecisionVector,
    tol: f64,
) -> Option<DecisionVector> {
    let m = problem.num_constraints();
    let mut mu = vec![0.0; m];
    let mut rho = 10.0;
    let mut x = start;
    let mut last_violation = f64::INFINITY;
    for _ in 0..OUTER {
        x = inner_solve(objective, problem, &mu, rho, x)?;
        let g: Vec<f64> = problem.constraints.iter().map(|c| c.eval(&x)).collect();
        for (mi, gi) in mu.iter_mut().zip(&g) {
            *mi = clip_pos(*mi + rho * gi);
        }
        let violation = g.iter().copied().fold(0.0, |a: f64, v| a.max(v));
        // Complementarity: active multipliers on tight constraints.
        let slack = mu
            .iter()
            .zip(&g)
            .map(|(mi, gi)| (mi * gi).abs())
            .fold(0.0, f64::max);
        if violation <= tol * 1e-2 && slack <= 1e-12 {
            break;
        }
        if violation > 0.25 * last_violation {
            rho *= 10.0;
        }
        last_violation = violation;
    }
    Some(x)
}
