//! Single-step update rules.
//!
//! Every rule maps the state at step `t` (iterate `x_t`, duals `λ_t`) and the
//! revealed loss `f_t` to the state at `t + 1`. The primal move is always a
//! projected subgradient step on the augmented Lagrangian; the rules differ in
//! the step sizes and in how the duals are formed.

use serde::{Deserialize, Serialize};

use super::config::LagrangianKind;
use crate::convex::{lagrangian_grad_x, plain_lagrangian_grad_x, ConvexFn, SharedFn};
use crate::error::{OcoError, Result};
use crate::primitives::{clip_pos, project_ball, BallDomain, DecisionVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepState {
    /// Step index within the current run or epoch, starting at 1.
    pub t: usize,
    pub x: DecisionVector,
    pub lambda: Vec<f64>,
    /// Primal step size applied at this step.
    pub eta: f64,
    /// Dual scale at this step: the divisor of the closed-form dual for the
    /// clipped variants, the dual regularization weight for the baselines.
    pub theta: f64,
}

impl StepState {
    pub fn initial(x: DecisionVector, duals: usize, eta: f64, theta: f64) -> Self {
        StepState {
            t: 1,
            x,
            lambda: vec![0.0; duals],
            eta,
            theta,
        }
    }
}

fn primal_step(
    state: &StepState,
    f_t: &dyn ConvexFn,
    gs: &[SharedFn],
    dom: &BallDomain,
    eta: f64,
    kind: LagrangianKind,
) -> Result<DecisionVector> {
    let grad = match kind {
        LagrangianKind::Clipped => lagrangian_grad_x(f_t, gs, &state.x, &state.lambda)?,
        LagrangianKind::Plain => plain_lagrangian_grad_x(f_t, gs, &state.x, &state.lambda)?,
    };
    if !grad.is_finite() {
        return Err(OcoError::NonFinite {
            context: "Lagrangian subgradient".into(),
        });
    }
    let mut y = state.x.clone();
    y.axpy(-eta, &grad);
    project_ball(&y, dom)
}

/// `λ_i = [g_i(x)]_+ / scale`.
fn closed_form_duals(gs: &[SharedFn], x: &[f64], scale: f64) -> Vec<f64> {
    gs.iter()
        .map(|g| {
            let lam = clip_pos(g.eval(x)) / scale;
            if cfg!(feature = "fault-injection") && lam > 0.0 {
                lam * (1.0 + 1e-6)
            } else {
                lam
            }
        })
        .collect()
}

fn check_duals(lambda: &[f64]) -> Result<()> {
    if lambda.iter().all(|l| l.is_finite()) {
        Ok(())
    } else {
        Err(OcoError::NonFinite {
            context: "dual update".into(),
        })
    }
}

/// Clipped-OGD:
/// `x_{t+1} = Π_B(x_t − η ∂_x L_t(x_t, λ_t))`, `λ_{t+1} = [g(x_{t+1})]_+ / (ση)`.
pub fn clipped_ogd_step(
    state: &StepState,
    f_t: &dyn ConvexFn,
    gs: &[SharedFn],
    dom: &BallDomain,
    eta: f64,
    sigma: f64,
) -> Result<StepState> {
    let x = primal_step(state, f_t, gs, dom, eta, LagrangianKind::Clipped)?;
    let scale = sigma * eta;
    let lambda = closed_form_duals(gs, &x, scale);
    check_duals(&lambda)?;
    Ok(StepState {
        t: state.t + 1,
        x,
        lambda,
        eta,
        theta: scale,
    })
}

/// Step sizes of the strongly convex variant:
/// `η_t = 1/(H1 (t+1))`, `θ_t = η_t (k+1) G²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrongSchedule {
    pub h1: f64,
    pub duals: usize,
    pub lipschitz: f64,
}

impl StrongSchedule {
    pub fn new(h1: f64, duals: usize, lipschitz: f64) -> Result<Self> {
        if !(h1.is_finite() && h1 > 0.0) {
            return Err(OcoError::InvalidParameter(format!(
                "H1 must be positive, got {h1}"
            )));
        }
        Ok(StrongSchedule {
            h1,
            duals,
            lipschitz,
        })
    }

    pub fn eta(&self, t: usize) -> f64 {
        1.0 / (self.h1 * (t as f64 + 1.0))
    }

    pub fn theta(&self, t: usize) -> f64 {
        self.eta(t) * (self.duals as f64 + 1.0) * self.lipschitz * self.lipschitz
    }
}

/// Strongly convex Clipped-OGD:
/// `x_{t+1} = Π_B(x_t − η_t ∂_x L_t(x_t, λ_t))`, `λ_{t+1} = [g(x_{t+1})]_+ / θ_{t+1}`.
pub fn strong_clipped_step(
    state: &StepState,
    f_t: &dyn ConvexFn,
    gs: &[SharedFn],
    dom: &BallDomain,
    schedule: &StrongSchedule,
) -> Result<StepState> {
    let eta = schedule.eta(state.t);
    let x = primal_step(state, f_t, gs, dom, eta, LagrangianKind::Clipped)?;
    let next = state.t + 1;
    let theta = schedule.theta(next);
    let lambda = closed_form_duals(gs, &x, theta);
    check_duals(&lambda)?;
    Ok(StepState {
        t: next,
        x,
        lambda,
        eta: schedule.eta(next),
        theta,
    })
}

fn dual_signal(g: f64, kind: LagrangianKind) -> f64 {
    match kind {
        LagrangianKind::Clipped => clip_pos(g),
        LagrangianKind::Plain => g,
    }
}

/// Simultaneous primal descent and projected dual ascent with one fixed step:
/// `λ_{t+1} = Π_{[0,∞)}(λ_t + η (ĝ(x_t) − σηλ_t))`, where `ĝ` is `g` or `[g]_+`
/// depending on the Lagrangian.
pub fn mahdavi_step(
    state: &StepState,
    f_t: &dyn ConvexFn,
    gs: &[SharedFn],
    dom: &BallDomain,
    eta: f64,
    sigma: f64,
    kind: LagrangianKind,
) -> Result<StepState> {
    let x = primal_step(state, f_t, gs, dom, eta, kind)?;
    let reg = sigma * eta;
    let lambda: Vec<f64> = gs
        .iter()
        .zip(&state.lambda)
        .map(|(g, &l)| (l + eta * (dual_signal(g.eval(&state.x), kind) - reg * l)).max(0.0))
        .collect();
    check_duals(&lambda)?;
    Ok(StepState {
        t: state.t + 1,
        x,
        lambda,
        eta,
        theta: reg,
    })
}

/// Time-varying schedules of A-OGD: primal step `η_t = η₀ t^{-β}`, dual step
/// `μ_t = μ₀ t^{-(1-β)}` and dual regularization `θ_t = θ₀ t^{-β}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AogdSchedule {
    pub eta0: f64,
    pub mu0: f64,
    pub theta0: f64,
    pub beta: f64,
}

impl AogdSchedule {
    pub fn eta(&self, t: usize) -> f64 {
        self.eta0 * (t as f64).powf(-self.beta)
    }

    pub fn mu(&self, t: usize) -> f64 {
        self.mu0 * (t as f64).powf(self.beta - 1.0)
    }

    pub fn theta(&self, t: usize) -> f64 {
        self.theta0 * (t as f64).powf(-self.beta)
    }

    /// The dual ascent value before projection onto `[0, ∞)`.
    pub fn raw_dual(&self, t: usize, lambda: f64, g: f64, kind: LagrangianKind) -> f64 {
        lambda + self.mu(t) * (dual_signal(g, kind) - self.theta(t) * lambda)
    }
}

/// A-OGD: `x_{t+1} = Π_B(x_t − η_t ∂_x L_t(x_t, λ_t))`,
/// `λ_{t+1} = Π_{[0,∞)}(λ_t + μ_t (ĝ(x_t) − θ_t λ_t))`.
pub fn aogd_step(
    state: &StepState,
    f_t: &dyn ConvexFn,
    gs: &[SharedFn],
    dom: &BallDomain,
    schedule: &AogdSchedule,
    kind: LagrangianKind,
) -> Result<StepState> {
    let t = state.t;
    let x = primal_step(state, f_t, gs, dom, schedule.eta(t), kind)?;
    let lambda: Vec<f64> = gs
        .iter()
        .zip(&state.lambda)
        .map(|(g, &l)| schedule.raw_dual(t, l, g.eval(&state.x), kind).max(0.0))
        .collect();
    check_duals(&lambda)?;
    Ok(StepState {
        t: t + 1,
        x,
        lambda,
        eta: schedule.eta(t + 1),
        theta: schedule.theta(t + 1),
    })
}
