//! The online algorithms and their run loops.

use serde::{Deserialize, Serialize};

use crate::aggregation::{aggregate, AggregateMode};
use crate::convex::{ConvexFn, SharedFn};
use crate::error::{OcoError, Result};
use crate::primitives::{project_ball, DecisionVector};
use crate::problems::ProblemSpec;

mod config;
mod step;

pub use config::{
    balanced_params, eta_for, sigma_for, Aggregation, AlgoConfig, AogdOverrides, LagrangianKind,
    RunParams, Variant,
};
pub use step::{
    aogd_step, clipped_ogd_step, mahdavi_step, strong_clipped_step, AogdSchedule, StepState,
    StrongSchedule,
};

/// One step of a run, recorded before the update at that step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub x: DecisionVector,
    /// `f_t(x_t)`.
    pub loss: f64,
    /// `g_i(x_t)` for every problem constraint.
    pub constraints: Vec<f64>,
    /// The constraint values the duals are attached to: equal to
    /// `constraints` per constraint, or the single aggregate.
    pub aggregated: Vec<f64>,
    pub lambda: Vec<f64>,
    pub eta: f64,
    pub theta: f64,
}

impl TraceRow {
    /// `max_i g_i(x_t)`.
    pub fn g_max(&self) -> f64 {
        self.constraints
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_i [g_i(x_t)]_+`.
    pub fn violation(&self) -> f64 {
        self.g_max().max(0.0)
    }
}

/// A contiguous block of steps sharing one set of parameters. A plain run
/// has one epoch; the doubling scheme has one per doubling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    /// Global index of the first step.
    pub start: usize,
    pub len: usize,
    pub config: AlgoConfig,
    pub params: RunParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub problem: String,
    pub seed: u64,
    pub epochs: Vec<Epoch>,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn variant(&self) -> Variant {
        self.epochs[0].config.variant
    }

    /// The epoch containing global step `t`.
    pub fn epoch_of(&self, t: usize) -> &Epoch {
        self.epochs
            .iter()
            .find(|e| t >= e.start && t < e.start + e.len)
            .expect("step outside the trace")
    }
}

/// The constraints as the algorithm sees them under `aggregation`.
pub fn algorithm_constraints(
    problem: &ProblemSpec,
    aggregation: Aggregation,
) -> Result<Vec<SharedFn>> {
    match aggregation {
        Aggregation::PerConstraint => Ok(problem.constraints.clone()),
        Aggregation::Max => Ok(vec![aggregate(&problem.constraints, AggregateMode::Max)?]),
        Aggregation::LogSumExp => Ok(vec![aggregate(
            &problem.constraints,
            AggregateMode::LogSumExp,
        )?]),
    }
}

enum Rule {
    Clipped {
        eta: f64,
        sigma: f64,
    },
    Strong(StrongSchedule),
    Mahdavi {
        eta: f64,
        sigma: f64,
        kind: LagrangianKind,
    },
    Aogd {
        schedule: AogdSchedule,
        kind: LagrangianKind,
    },
}

impl Rule {
    fn new(cfg: &AlgoConfig, params: &RunParams) -> Result<Self> {
        Ok(match cfg.variant {
            Variant::ClippedOgd => Rule::Clipped {
                eta: params.eta,
                sigma: params.sigma,
            },
            Variant::StrongClippedOgd => {
                let h1 = params
                    .h1
                    .ok_or_else(|| OcoError::InvalidParameter("strong variant needs H1".into()))?;
                Rule::Strong(StrongSchedule::new(h1, params.duals, params.lipschitz)?)
            }
            Variant::MahdaviOgd => Rule::Mahdavi {
                eta: params.eta,
                sigma: params.sigma,
                kind: cfg.lagrangian,
            },
            Variant::Aogd => Rule::Aogd {
                schedule: AogdSchedule {
                    eta0: params.aogd_eta0,
                    mu0: params.aogd_mu0,
                    theta0: params.aogd_theta0,
                    beta: cfg.beta,
                },
                kind: cfg.lagrangian,
            },
        })
    }

    fn initial(&self, x: DecisionVector, duals: usize) -> StepState {
        let (eta, theta) = match self {
            Rule::Clipped { eta, sigma } | Rule::Mahdavi { eta, sigma, .. } => (*eta, sigma * eta),
            Rule::Strong(s) => (s.eta(1), s.theta(1)),
            Rule::Aogd { schedule, .. } => (schedule.eta(1), schedule.theta(1)),
        };
        StepState::initial(x, duals, eta, theta)
    }

    fn step(
        &self,
        s: &StepState,
        f: &dyn ConvexFn,
        gs: &[SharedFn],
        problem: &ProblemSpec,
    ) -> Result<StepState> {
        let dom = &problem.domain;
        match self {
            Rule::Clipped { eta, sigma } => clipped_ogd_step(s, f, gs, dom, *eta, *sigma),
            Rule::Strong(sched) => strong_clipped_step(s, f, gs, dom, sched),
            Rule::Mahdavi { eta, sigma, kind } => mahdavi_step(s, f, gs, dom, *eta, *sigma, *kind),
            Rule::Aogd { schedule, kind } => aogd_step(s, f, gs, dom, schedule, *kind),
        }
    }
}

/// Runs `len` steps starting from `x0` with zero duals, handing rows with
/// global indices `start, start + 1, ...` to `sink`. Returns the iterate
/// after the last step.
fn run_epoch(
    problem: &ProblemSpec,
    cfg: &AlgoConfig,
    seed: u64,
    x0: DecisionVector,
    start: usize,
    len: usize,
    sink: &mut dyn FnMut(TraceRow),
) -> Result<(DecisionVector, Epoch)> {
    let params = RunParams::resolve(problem, cfg)?;
    let gs = algorithm_constraints(problem, cfg.aggregation)?;
    let rule = Rule::new(cfg, &params)?;
    let mut state = rule.initial(x0, params.duals);
    for local in 0..len {
        let t = start + local;
        let f = problem.loss(seed, t);
        sink(TraceRow {
            t,
            x: state.x.clone(),
            loss: f.eval(&state.x),
            constraints: problem.constraint_values(&state.x),
            aggregated: gs.iter().map(|g| g.eval(&state.x)).collect(),
            lambda: state.lambda.clone(),
            eta: state.eta,
            theta: state.theta,
        });
        state = rule
            .step(&state, f.as_ref(), &gs, problem)
            .map_err(|e| e.at_step(t))?;
    }
    let epoch = Epoch {
        start,
        len,
        config: cfg.clone(),
        params,
    };
    Ok((state.x, epoch))
}

/// Runs `cfg.horizon` steps from the center of the ball with zero duals.
pub fn run(problem: &ProblemSpec, cfg: &AlgoConfig, seed: u64) -> Result<RunTrace> {
    let mut rows = Vec::with_capacity(cfg.horizon);
    let epoch = run_streaming(problem, cfg, seed, |row| rows.push(row))?;
    Ok(RunTrace {
        problem: problem.name.clone(),
        seed,
        epochs: vec![epoch],
        rows,
    })
}

/// As [`run`], but hands each row to `sink` instead of storing it.
pub fn run_streaming(
    problem: &ProblemSpec,
    cfg: &AlgoConfig,
    seed: u64,
    mut sink: impl FnMut(TraceRow),
) -> Result<Epoch> {
    let x0 = problem.domain.center();
    let (_, epoch) = run_epoch(problem, cfg, seed, x0, 1, cfg.horizon, &mut sink)?;
    Ok(epoch)
}

/// Epoch lengths `1, 2, 4, ...` covering `total` steps; the last is
/// truncated.
pub fn doubling_epochs(total: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut covered = 0;
    let mut len = 1;
    while covered < total {
        let this = len.min(total - covered);
        out.push(this);
        covered += this;
        len *= 2;
    }
    out
}

/// Horizon-free operation: epoch `k` is configured for horizon `2^k` by
/// `cfg_factory`. The iterate carries over between epochs; the duals restart
/// at zero.
pub fn doubling_run<F>(
    problem: &ProblemSpec,
    cfg_factory: F,
    total: usize,
    seed: u64,
) -> Result<RunTrace>
where
    F: Fn(usize) -> AlgoConfig,
{
    let mut rows = Vec::with_capacity(total);
    let mut epochs = Vec::new();
    let mut x = problem.domain.center();
    let mut start = 1;
    for (k, len) in doubling_epochs(total).into_iter().enumerate() {
        let cfg = cfg_factory(1 << k);
        let (next, epoch) = run_epoch(problem, &cfg, seed, x, start, len, &mut |row| {
            rows.push(row)
        })?;
        x = next;
        epochs.push(epoch);
        start += len;
    }
    Ok(RunTrace {
        problem: problem.name.clone(),
        seed,
        epochs,
        rows,
    })
}

/// Unconstrained projected online gradient descent `x_{t+1} = Π_B(x_t − η ∂f_t(x_t))`
/// from the center. Returns `x_1, ..., x_T`.
pub fn projected_ogd(
    problem: &ProblemSpec,
    eta: f64,
    horizon: usize,
    seed: u64,
) -> Result<Vec<DecisionVector>> {
    let mut x = problem.domain.center();
    let mut out = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let f = problem.loss(seed, t);
        out.push(x.clone());
        let mut y = x.clone();
        y.axpy(-eta, &f.subgrad(&x));
        x = project_ball(&y, &problem.domain).map_err(|e| e.at_step(t))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{doubly_stochastic_problem, toy_problem};

    #[test]
    fn single_step_run() {
        let p = toy_problem().unwrap();
        for v in Variant::ALL {
            if v == Variant::StrongClippedOgd {
                continue;
            }
            let tr = run(&p, &AlgoConfig::new(v, 1), 3).unwrap();
            assert_eq!(tr.len(), 1);
            assert_eq!(&*tr.rows[0].x, &[0.0, 0.0]);
            assert_eq!(tr.rows[0].lambda, vec![0.0]);
        }
    }

    #[test]
    fn strong_requires_h1() {
        let p = toy_problem().unwrap();
        assert!(run(&p, &AlgoConfig::new(Variant::StrongClippedOgd, 5), 0).is_err());
        let mut cfg = AlgoConfig::new(Variant::StrongClippedOgd, 5);
        cfg.h1_override = Some(0.5);
        assert!(run(&p, &cfg, 0).is_ok());
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let p = toy_problem().unwrap();
        let tr = run(&p, &AlgoConfig::new(Variant::ClippedOgd, 50), 3).unwrap();
        assert!(tr.rows.iter().enumerate().all(|(i, r)| r.t == i + 1));
    }

    #[test]
    fn doubling_schedule() {
        assert_eq!(doubling_epochs(7), vec![1, 2, 4]);
        assert_eq!(doubling_epochs(1), vec![1]);
        assert_eq!(doubling_epochs(10), vec![1, 2, 4, 3]);
        assert!(doubling_epochs(0).is_empty());
    }

    #[test]
    fn doubling_single_epoch_equals_run() {
        let p = toy_problem().unwrap();
        let a = doubling_run(&p, |h| AlgoConfig::new(Variant::ClippedOgd, h), 1, 9).unwrap();
        let b = run(&p, &AlgoConfig::new(Variant::ClippedOgd, 1), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn doubling_resets_duals_keeps_iterate() {
        let p = doubly_stochastic_problem(3).unwrap();
        let tr = doubling_run(&p, |h| AlgoConfig::new(Variant::ClippedOgd, h), 15, 2).unwrap();
        assert_eq!(tr.epochs.len(), 4);
        for e in &tr.epochs[1..] {
            let first = &tr.rows[e.start - 1];
            assert_eq!(first.lambda, vec![0.0]);
            assert_eq!(e.config.horizon, e.len);
        }
        // the iterate entering epoch 2 is not the center
        assert!(tr.rows[1].x.norm() > 0.0);
    }

    #[derive(Debug)]
    struct PoisonAt(usize);

    impl crate::problems::LossStream for PoisonAt {
        fn loss(&self, _seed: u64, t: usize) -> SharedFn {
            let c = if t == self.0 { f64::NAN } else { 1.0 };
            std::sync::Arc::new(crate::convex::Affine::new([c, 0.0], 0.0))
        }
    }

    #[test]
    fn step_errors_carry_index() {
        let toy = toy_problem().unwrap();
        let p = ProblemSpec::new(
            "poison",
            toy.constraints.clone(),
            toy.domain,
            toy.lipschitz,
            toy.feasible_point.clone(),
            std::sync::Arc::new(PoisonAt(4)),
        )
        .unwrap();
        match run(&p, &AlgoConfig::new(Variant::ClippedOgd, 10), 0) {
            Err(OcoError::Step { t, .. }) => assert_eq!(t, 4),
            other => panic!("expected step error, got {other:?}"),
        }
    }
}
