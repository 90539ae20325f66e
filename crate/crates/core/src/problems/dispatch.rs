use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LossStream, ProblemSpec};
use crate::convex::{Affine, ConvexFn, SharedFn};
use crate::error::{OcoError, Result};
use crate::primitives::{norm, BallDomain, DecisionVector};

/// Three-generator economic dispatch data.
///
/// Generation cost `0.5 a_i x_i² + b_i x_i`, emission `d_i x_i² + e_i x_i`,
/// demand mismatch penalty `ξ (Σ x_i − demand_t)²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchParams {
    pub cost_quad: [f64; 3],
    pub cost_lin: [f64; 3],
    pub emission_quad: [f64; 3],
    /// Not published for this data set; zero unless overridden.
    pub emission_lin: [f64; 3],
    pub emission_max: f64,
    pub balance_weight: f64,
    pub capacity: [f64; 3],
    /// Demand per step in MW. Steps beyond the series wrap around.
    pub demand: Vec<f64>,
}

impl DispatchParams {
    /// Published generator coefficients with the given demand series.
    pub fn with_demand(demand: Vec<f64>) -> Self {
        DispatchParams {
            cost_quad: [0.2, 0.12, 0.14],
            cost_lin: [1.5, 1.0, 0.6],
            emission_quad: [0.26, 0.38, 0.37],
            emission_lin: [0.0, 0.0, 0.0],
            emission_max: 100.0,
            balance_weight: 0.5,
            capacity: [20.0, 15.0, 18.0],
            demand,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.demand.is_empty() {
            return Err(OcoError::InvalidParameter(
                "dispatch demand series is empty".into(),
            ));
        }
        if let Some(d) = self.demand.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(OcoError::InvalidParameter(format!(
                "demand must be positive, got {d}"
            )));
        }
        let coeffs = self
            .cost_quad
            .iter()
            .chain(&self.cost_lin)
            .chain(&self.emission_quad)
            .chain(&self.emission_lin)
            .chain(&self.capacity)
            .chain([&self.emission_max, &self.balance_weight]);
        for c in coeffs {
            if !(c.is_finite() && *c >= 0.0) {
                return Err(OcoError::InvalidParameter(format!(
                    "dispatch coefficients must be nonnegative, got {c}"
                )));
            }
        }
        if self.emission_max <= 0.0 {
            return Err(OcoError::InvalidParameter(
                "emission cap must be positive".into(),
            ));
        }
        Ok(())
    }

    fn demand_at(&self, t: usize) -> f64 {
        self.demand[(t - 1) % self.demand.len()]
    }
}

/// `Σ(0.5 a_i x_i² + b_i x_i) + ξ(s² − 2 s d̄ + d²̄)` with `s = Σ x_i`.
///
/// With `d̄ = d_t`, `d²̄ = d_t²` this is the per-step loss; with the mean and
/// mean square of a demand window it is the window-averaged loss.
#[derive(Clone, Debug)]
pub struct DispatchCost {
    pub cost_quad: [f64; 3],
    pub cost_lin: [f64; 3],
    pub balance_weight: f64,
    pub demand_mean: f64,
    pub demand_sq_mean: f64,
}

impl ConvexFn for DispatchCost {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let gen: f64 = (0..3)
            .map(|i| 0.5 * self.cost_quad[i] * x[i] * x[i] + self.cost_lin[i] * x[i])
            .sum();
        let s: f64 = x.iter().sum();
        gen + self.balance_weight * (s * s - 2.0 * s * self.demand_mean + self.demand_sq_mean)
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        let s: f64 = x.iter().sum();
        let shared = 2.0 * self.balance_weight * (s - self.demand_mean);
        (0..3)
            .map(|i| self.cost_quad[i] * x[i] + self.cost_lin[i] + shared)
            .collect::<Vec<_>>()
            .into()
    }
}

/// `Σ(d_i x_i² + e_i x_i) − E_max`.
#[derive(Clone, Debug)]
pub struct EmissionConstraint {
    pub quad: [f64; 3],
    pub lin: [f64; 3],
    pub cap: f64,
}

impl ConvexFn for EmissionConstraint {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (0..3)
            .map(|i| self.quad[i] * x[i] * x[i] + self.lin[i] * x[i])
            .sum::<f64>()
            - self.cap
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        (0..3)
            .map(|i| 2.0 * self.quad[i] * x[i] + self.lin[i])
            .collect::<Vec<_>>()
            .into()
    }
}

#[derive(Clone, Debug)]
struct DemandStream {
    params: Arc<DispatchParams>,
}

impl DemandStream {
    fn cost(&self, mean: f64, sq_mean: f64) -> SharedFn {
        Arc::new(DispatchCost {
            cost_quad: self.params.cost_quad,
            cost_lin: self.params.cost_lin,
            balance_weight: self.params.balance_weight,
            demand_mean: mean,
            demand_sq_mean: sq_mean,
        })
    }
}

impl LossStream for DemandStream {
    fn loss(&self, _seed: u64, t: usize) -> SharedFn {
        let d = self.params.demand_at(t);
        self.cost(d, d * d)
    }

    fn mean_loss(&self, _seed: u64, horizon: usize) -> SharedFn {
        let h = horizon as f64;
        let (mut m1, mut m2) = (0.0, 0.0);
        for t in 1..=horizon {
            let d = self.params.demand_at(t);
            m1 += d / h;
            m2 += d * d / h;
        }
        self.cost(m1, m2)
    }
}

/// Economic dispatch over three generators.
///
/// Constraints, in order: the emission cap, the three capacity limits
/// `x_i ≤ x_i,max`, then the three lower bounds `x_i ≥ 0` (`m = 7`). All are
/// handled through the Lagrangian; only the ball is projected onto.
///
/// `R = 1.1 ‖x_max‖`, `H1 = min_i a_i`, and `G` bounds the cost gradient
/// `a∘x + b + 2ξ(Σx − d)1` and the emission gradient over the ball by the
/// triangle inequality. Demand does not depend on the seed.
pub fn dispatch_problem(params: DispatchParams) -> Result<ProblemSpec> {
    params.validate()?;
    let radius = 1.1 * norm(&params.capacity);
    let n = 3.0f64;
    let a_max = params.cost_quad.iter().copied().fold(0.0, f64::max);
    let d_max = params.demand.iter().copied().fold(0.0, f64::max);
    let cost_bound = a_max * radius
        + norm(&params.cost_lin)
        + 2.0 * params.balance_weight * n.sqrt() * (n.sqrt() * radius + d_max);
    let q_max = params.emission_quad.iter().copied().fold(0.0, f64::max);
    let emission_bound = 2.0 * q_max * radius + norm(&params.emission_lin);
    let lipschitz = cost_bound.max(emission_bound).max(1.0);
    let h1 = params
        .cost_quad
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let emission = EmissionConstraint {
        quad: params.emission_quad,
        lin: params.emission_lin,
        cap: params.emission_max,
    };
    // Strictly interior point: a fraction of capacity, shrunk until the
    // emission cap holds strictly.
    let mut frac = 0.25;
    let mut interior: Vec<f64> = params.capacity.iter().map(|c| c * frac).collect();
    while emission.eval(&interior) >= 0.0 {
        frac *= 0.5;
        interior = params.capacity.iter().map(|c| c * frac).collect();
    }

    let mut gs: Vec<SharedFn> = vec![Arc::new(emission)];
    for i in 0..3 {
        let mut c = [0.0; 3];
        c[i] = 1.0;
        gs.push(Arc::new(Affine::new(c, -params.capacity[i])));
    }
    for i in 0..3 {
        let mut c = [0.0; 3];
        c[i] = -1.0;
        gs.push(Arc::new(Affine::new(c, 0.0)));
    }

    let demand_len = params.demand.len();
    Ok(ProblemSpec::new(
        "dispatch",
        gs,
        BallDomain::new(radius, 3)?,
        lipschitz,
        interior.into(),
        Arc::new(DemandStream {
            params: Arc::new(params),
        }),
    )?
    .with_strong_convexity(h1)
    .with_metadata("radius_note", "R = 1.1 * ||x_max||")
    .with_metadata("demand_len", demand_len))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{finite_diff_grad, relative_error};
    use crate::problems::test_support::{assert_lipschitz_bound, sample_ball};
    use crate::problems::{synthetic_demand, MeanFn};

    fn problem() -> ProblemSpec {
        dispatch_problem(DispatchParams::with_demand(synthetic_demand(2, 5))).unwrap()
    }

    #[test]
    fn rejects_missing_demand() {
        assert!(dispatch_problem(DispatchParams::with_demand(vec![])).is_err());
        assert!(dispatch_problem(DispatchParams::with_demand(vec![10.0, -1.0])).is_err());
        let mut p = DispatchParams::with_demand(vec![10.0]);
        p.cost_quad[0] = -0.1;
        assert!(dispatch_problem(p).is_err());
    }

    #[test]
    fn shapes_and_constants() {
        let p = problem();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.num_constraints(), 7);
        assert_eq!(p.strong_convexity, Some(0.12));
        let expect_r = 1.1 * (20.0f64 * 20.0 + 15.0 * 15.0 + 18.0 * 18.0).sqrt();
        assert!((p.radius() - expect_r).abs() < 1e-12);
    }

    #[test]
    fn origin_cost_and_feasibility() {
        let params = DispatchParams::with_demand(vec![40.0, 35.0]);
        let p = dispatch_problem(params).unwrap();
        let x = [0.0; 3];
        assert_eq!(p.loss(0, 1).eval(&x), 0.5 * 40.0 * 40.0);
        assert_eq!(p.loss(0, 2).eval(&x), 0.5 * 35.0 * 35.0);
        // demand wraps around
        assert_eq!(p.loss(0, 3).eval(&x), 0.5 * 40.0 * 40.0);
        assert!(p.constraint_values(&x).iter().all(|&g| g <= 0.0));
    }

    #[test]
    fn emission_example() {
        let p = problem();
        let g = p.constraints[0].eval(&[10.0, 10.0, 10.0]);
        assert!((g - 1.0).abs() < 1e-12, "{g}");
    }

    #[test]
    fn interior_point_strictly_feasible() {
        let p = problem();
        assert!(p
            .constraint_values(&p.feasible_point)
            .iter()
            .all(|&g| g < 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let p = problem();
        let mut rng = crate::rng::stream_rng(3, 1, 4);
        for k in 0..20 {
            let x = sample_ball(&mut rng, 3, p.radius());
            let f = p.loss(0, 1 + 37 * k);
            let fd = finite_diff_grad(f.as_ref(), &x, 1e-4);
            assert!(relative_error(&f.subgrad(&x), &fd) <= 1e-6);
            let g = &p.constraints[0];
            let fd = finite_diff_grad(g.as_ref(), &x, 1e-4);
            assert!(relative_error(&g.subgrad(&x), &fd) <= 1e-6);
        }
    }

    #[test]
    fn closed_form_mean_matches_average() {
        let p = problem();
        let closed = p.mean_loss(0, 100);
        let generic = MeanFn::new(p.losses(0, 100));
        let x = [3.0, 7.5, 1.25];
        assert!((closed.eval(&x) - generic.eval(&x)).abs() < 1e-9 * generic.eval(&x).abs());
    }

    #[test]
    fn declared_g_bounds_subgradients() {
        assert_lipschitz_bound(&problem(), 1000);
    }
}
