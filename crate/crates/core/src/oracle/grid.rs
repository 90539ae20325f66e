use crate::convex::ConvexFn;
use crate::error::{OcoError, Result};
use crate::primitives::DecisionVector;
use crate::problems::ProblemSpec;

const FEASIBILITY_SLACK: f64 = 1e-12;

/// Exhaustive search over the lattice `h Z^n` intersected with the ball and
/// the feasible set, for `n ≤ 3`. Halving `h` refines the lattice, so the
/// value can only improve.
pub fn grid_oracle(
    problem: &ProblemSpec,
    objective: &dyn ConvexFn,
    resolution: f64,
) -> Result<(DecisionVector, f64)> {
    let n = problem.dim();
    if n > 3 {
        return Err(OcoError::InvalidParameter(format!(
            "grid oracle supports n ≤ 3, got {n}"
        )));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(OcoError::InvalidParameter(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let r = problem.radius();
    let k = (r / resolution).floor() as i64;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut x = vec![0.0; n];
    let mut idx = vec![-k; n];
    loop {
        for (xi, &i) in x.iter_mut().zip(&idx) {
            *xi = i as f64 * resolution;
        }
        if problem.domain.contains(&x)
            && problem
                .constraints
                .iter()
                .all(|g| g.eval(&x) <= FEASIBILITY_SLACK)
        {
            let v = objective.eval(&x);
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((x.clone(), v));
            }
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                return best
                    .map(|(x, v)| (x.into(), v))
                    .ok_or(OcoError::NoFeasibleGridPoint);
            }
            idx[pos] += 1;
            if idx[pos] <= k {
                break;
            }
            idx[pos] = -k;
            pos += 1;
        }
    }
}
