use serde::{Deserialize, Serialize};

use super::polish::multiplier_method;
use super::OfflineSolution;
use crate::convex::ConvexFn;
use crate::error::{OcoError, Result};
use crate::primitives::{clip_pos, project_ball, DecisionVector};
use crate::problems::ProblemSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Subgradient iterations per penalty weight.
    pub iters: usize,
    /// Required `max_i [g_i(x*)]_+`.
    pub tol: f64,
    /// Restarts per penalty weight.
    pub stages: usize,
    /// Factor applied to the step scale at each restart.
    pub decay: f64,
    pub rho0: f64,
    /// Maximum number of penalty doublings.
    pub max_ramps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            iters: 40_000,
            tol: 1e-8,
            stages: 40,
            decay: 0.5,
            rho0: 1.0,
            max_ramps: 30,
        }
    }
}

fn penalized(objective: &dyn ConvexFn, problem: &ProblemSpec, rho: f64, x: &[f64]) -> f64 {
    objective.eval(x)
        + rho
            * problem
                .constraints
                .iter()
                .map(|g| clip_pos(g.eval(x)))
                .sum::<f64>()
}

fn penalized_subgrad(
    objective: &dyn ConvexFn,
    problem: &ProblemSpec,
    rho: f64,
    x: &[f64],
) -> DecisionVector {
    let mut s = objective.subgrad(x);
    for g in &problem.constraints {
        if g.eval(x) > 0.0 {
            s.axpy(rho, &g.subgrad(x));
        }
    }
    s
}

/// Minimizes `objective` over the ball subject to the problem's constraints
/// through the exact penalty `objective + ρ Σ_i [g_i]_+`.
///
/// For each `ρ` the penalized function is minimized by normalized projected
/// subgradient descent with steps `γ_s/√k`, restarted from the best point
/// with `γ_s` shrinking geometrically from `R`. `ρ` doubles until the best point is feasible
/// to `tol`. Starts from the problem's feasible point.
///
/// When the objective and every constraint are smooth, the result is then
/// refined by the method of multipliers and the refined point is kept if it
/// is feasible to `tol` and has a lower penalized value.
pub fn offline_solve(
    problem: &ProblemSpec,
    objective: &dyn ConvexFn,
    opts: &SolveOptions,
) -> Result<OfflineSolution> {
    if opts.iters == 0 || opts.stages == 0 {
        return Err(OcoError::InvalidParameter(
            "offline solver needs iters, stages ≥ 1".into(),
        ));
    }
    if objective.dim() != problem.dim() {
        return Err(OcoError::DimensionMismatch {
            expected: problem.dim(),
            got: objective.dim(),
        });
    }
    let per_stage = (opts.iters / opts.stages).max(1);
    let mut rho = opts.rho0;
    let mut start = problem.feasible_point.clone();
    let mut best = start.clone();
    for _ in 0..=opts.max_ramps {
        best = start.clone();
        let mut best_p = penalized(objective, problem, rho, &best);
        let mut gamma = problem.radius();
        for _ in 0..opts.stages {
            let mut x = best.clone();
            for k in 1..=per_stage {
                let s = penalized_subgrad(objective, problem, rho, &x);
                let n = s.norm();
                if !n.is_finite() {
                    return Err(OcoError::NonFinite {
                        context: "offline objective subgradient".into(),
                    });
                }
                if n == 0.0 {
                    break;
                }
                x.axpy(-gamma / (n * (k as f64).sqrt()), &s);
                x = project_ball(&x, &problem.domain)?;
                let p = penalized(objective, problem, rho, &x);
                if p < best_p {
                    best_p = p;
                    best = x.clone();
                }
            }
            gamma *= opts.decay;
        }
        let residual = problem.violation(&best);
        if residual <= opts.tol {
            return Ok(refine(problem, objective, opts, best, rho));
        }
        start = best.clone();
        rho *= 2.0;
    }
    if smooth(problem, objective) {
        let sol = refine(
            problem,
            objective,
            opts,
            problem.feasible_point.clone(),
            rho,
        );
        if sol.residual <= opts.tol {
            return Ok(sol);
        }
    }
    let residual = problem.violation(&best);
    Err(OcoError::Infeasible {
        value: objective.eval(&best),
        best,
        residual,
        tol: opts.tol,
    })
}

fn smooth(problem: &ProblemSpec, objective: &dyn ConvexFn) -> bool {
    objective.is_smooth() && problem.constraints.iter().all(|g| g.is_smooth())
}

fn refine(
    problem: &ProblemSpec,
    objective: &dyn ConvexFn,
    opts: &SolveOptions,
    x: DecisionVector,
    rho: f64,
) -> OfflineSolution {
    let solution = |x: DecisionVector| OfflineSolution {
        value: objective.eval(&x),
        residual: problem.violation(&x),
        x,
        rho,
    };
    let base = solution(x);
    if !smooth(problem, objective) {
        return base;
    }
    match multiplier_method(objective, problem, base.x.clone(), opts.tol) {
        Some(y) if y.is_finite() => {
            let cand = solution(y);
            let better = cand.residual <= opts.tol
                && penalized(objective, problem, rho, &cand.x)
                    <= penalized(objective, problem, rho, &base.x);
            if better || base.residual > opts.tol {
                cand
            } else {
                base
            }
        }
        _ => base,
    }
}
