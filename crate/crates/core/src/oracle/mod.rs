//! Best fixed feasible decision in hindsight, `argmin_{x ∈ S} Σ_t f_t(x)`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::primitives::DecisionVector;
use crate::problems::ProblemSpec;

mod birkhoff;
mod grid;
mod penalty;
mod polish;

pub use birkhoff::{birkhoff_projection, DykstraOutcome};
pub use grid::grid_oracle;
pub use penalty::{offline_solve, SolveOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineSolution {
    pub x: DecisionVector,
    /// Objective value at `x`, without the penalty.
    pub value: f64,
    /// `max_i [g_i(x)]_+`.
    pub residual: f64,
    /// Penalty weight at which the residual met the tolerance.
    pub rho: f64,
}

/// The comparator for regret over `horizon` steps: minimizes the average loss
/// and reports the total `Σ_t f_t(x*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestFixed {
    pub horizon: usize,
    pub solution: OfflineSolution,
    pub total: f64,
}

pub fn best_fixed(
    problem: &ProblemSpec,
    seed: u64,
    horizon: usize,
    opts: &SolveOptions,
) -> Result<BestFixed> {
    let mean = problem.mean_loss(seed, horizon);
    let solution = offline_solve(problem, mean.as_ref(), opts)?;
    let total = solution.value * horizon as f64;
    Ok(BestFixed {
        horizon,
        solution,
        total,
    })
}
