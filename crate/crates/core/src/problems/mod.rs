//! Experiment problems: seeded loss streams over a fixed constraint set and
//! ball domain, together with the constants (`G`, `R`, `H1`) the step-size
//! schedules need.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::convex::{ConvexFn, SharedFn};
use crate::error::{OcoError, Result};
use crate::primitives::{BallDomain, DecisionVector};

mod demand;
mod dispatch;
mod doubly_stochastic;
mod toy;

pub use demand::{
    load_demand_csv, rescale_demand, synthetic_demand, write_demand_csv, SLOTS_PER_DAY,
};
pub use dispatch::{dispatch_problem, DispatchCost, DispatchParams, EmissionConstraint};
pub use doubly_stochastic::{doubly_stochastic_problem, random_permutation, DEFAULT_MATRIX_DIM};
pub use toy::{toy_problem, ToyStream};

/// Source of the per-step losses `f_t`.
pub trait LossStream: Send + Sync + fmt::Debug {
    /// The loss revealed at step `t` (1-based) of the sequence keyed by `seed`.
    fn loss(&self, seed: u64, t: usize) -> SharedFn;

    /// `(1/T) Σ_{t=1..T} f_t`. Streams with a closed form override this.
    fn mean_loss(&self, seed: u64, horizon: usize) -> SharedFn {
        let losses = (1..=horizon).map(|t| self.loss(seed, t)).collect();
        Arc::new(MeanFn::new(losses))
    }
}

/// Pointwise average of a list of functions.
#[derive(Debug)]
pub struct MeanFn {
    parts: Vec<SharedFn>,
}

impl MeanFn {
    pub fn new(parts: Vec<SharedFn>) -> Self {
        assert!(!parts.is_empty(), "mean of zero functions");
        MeanFn { parts }
    }
}

impl ConvexFn for MeanFn {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.parts.iter().map(|f| f.eval(x)).sum::<f64>() / self.parts.len() as f64
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        let mut out = DecisionVector::zeros(x.len());
        for f in &self.parts {
            out.axpy(1.0, &f.subgrad(x));
        }
        out.scaled(1.0 / self.parts.len() as f64)
    }

    fn is_smooth(&self) -> bool {
        self.parts.iter().all(|f| f.is_smooth())
    }
}

/// An online problem instance.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub name: String,
    pub constraints: Vec<SharedFn>,
    pub domain: BallDomain,
    /// Upper bound on every `‖∂f_t‖` and `‖∂g_i‖` over the ball.
    pub lipschitz: f64,
    pub strong_convexity: Option<f64>,
    /// A point satisfying every constraint.
    pub feasible_point: DecisionVector,
    pub loss_stream: Arc<dyn LossStream>,
    /// Free-form provenance of derived constants (radius padding, demand
    /// scaling, ...), copied into run outputs.
    pub metadata: BTreeMap<String, String>,
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        constraints: Vec<SharedFn>,
        domain: BallDomain,
        lipschitz: f64,
        feasible_point: DecisionVector,
        loss_stream: Arc<dyn LossStream>,
    ) -> Result<Self> {
        if !(lipschitz.is_finite() && lipschitz > 0.0) {
            return Err(OcoError::InvalidParameter(format!(
                "Lipschitz bound must be positive, got {lipschitz}"
            )));
        }
        if constraints.is_empty() {
            return Err(OcoError::InvalidParameter(
                "problem needs at least one constraint".into(),
            ));
        }
        for g in &constraints {
            if g.dim() != domain.dim() {
                return Err(OcoError::DimensionMismatch {
                    expected: domain.dim(),
                    got: g.dim(),
                });
            }
        }
        if feasible_point.len() != domain.dim() {
            return Err(OcoError::DimensionMismatch {
                expected: domain.dim(),
                got: feasible_point.len(),
            });
        }
        Ok(ProblemSpec {
            name: name.into(),
            constraints,
            domain,
            lipschitz,
            strong_convexity: None,
            feasible_point,
            loss_stream,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_strong_convexity(mut self, h1: f64) -> Self {
        self.strong_convexity = Some(h1);
        self
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn radius(&self) -> f64 {
        self.domain.radius()
    }

    pub fn loss(&self, seed: u64, t: usize) -> SharedFn {
        self.loss_stream.loss(seed, t)
    }

    pub fn mean_loss(&self, seed: u64, horizon: usize) -> SharedFn {
        self.loss_stream.mean_loss(seed, horizon)
    }

    pub fn losses(&self, seed: u64, horizon: usize) -> Vec<SharedFn> {
        (1..=horizon).map(|t| self.loss(seed, t)).collect()
    }

    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|g| g.eval(x)).collect()
    }

    /// `max_i [g_i(x)]_+`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|g| g.eval(x))
            .fold(0.0, f64::max)
    }
}
