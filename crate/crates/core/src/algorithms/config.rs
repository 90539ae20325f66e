use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{OcoError, Result};
use crate::problems::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Fixed-step primal descent with the closed-form clipped dual.
    ClippedOgd,
    /// Clipped-OGD with `η_t = 1/(H1 (t+1))` for strongly convex losses.
    StrongClippedOgd,
    /// Primal descent / projected dual ascent with a single fixed step.
    MahdaviOgd,
    /// Primal descent / dual ascent with separate time-varying steps.
    Aogd,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::ClippedOgd,
        Variant::StrongClippedOgd,
        Variant::MahdaviOgd,
        Variant::Aogd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ClippedOgd => "clipped-ogd",
            Variant::StrongClippedOgd => "strong",
            Variant::MahdaviOgd => "ogd",
            Variant::Aogd => "a-ogd",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = OcoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clipped-ogd" | "clipped" => Ok(Variant::ClippedOgd),
            "strong" | "strong-clipped-ogd" | "our-strong" => Ok(Variant::StrongClippedOgd),
            "ogd" | "mahdavi-ogd" | "mahdavi" => Ok(Variant::MahdaviOgd),
            "a-ogd" | "aogd" => Ok(Variant::Aogd),
            other => Err(OcoError::InvalidParameter(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

/// Which augmented Lagrangian the baselines use: `λ g(x)` or `λ [g(x)]_+`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LagrangianKind {
    Clipped,
    Plain,
}

impl FromStr for LagrangianKind {
    type Err = OcoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clipped" => Ok(LagrangianKind::Clipped),
            "plain" => Ok(LagrangianKind::Plain),
            other => Err(OcoError::InvalidParameter(format!(
                "unknown Lagrangian {other:?}"
            ))),
        }
    }
}

/// How the constraints are presented to the algorithm: one dual per
/// constraint, or a single dual on an aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    PerConstraint,
    Max,
    LogSumExp,
}

impl FromStr for Aggregation {
    type Err = OcoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-constraint" | "none" => Ok(Aggregation::PerConstraint),
            "max" => Ok(Aggregation::Max),
            "logsumexp" | "lse" => Ok(Aggregation::LogSumExp),
            other => Err(OcoError::InvalidParameter(format!(
                "unknown aggregation {other:?}"
            ))),
        }
    }
}

/// Overrides for the A-OGD schedules `η_t = η₀ t^{-β}`, `μ_t = μ₀ t^{-(1-β)}`,
/// `θ_t = θ₀ t^{-β}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AogdOverrides {
    pub eta0: Option<f64>,
    pub mu0: Option<f64>,
    pub theta0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub variant: Variant,
    /// Regret / violation trade-off exponent in `η ∝ T^{-β}`.
    pub beta: f64,
    /// Slack in `σ = (k+1)G²/(2(1−α))`.
    pub alpha: f64,
    pub lagrangian: LagrangianKind,
    pub aggregation: Aggregation,
    pub eta_override: Option<f64>,
    pub sigma_override: Option<f64>,
    pub h1_override: Option<f64>,
    pub aogd: AogdOverrides,
    pub horizon: usize,
}

impl AlgoConfig {
    /// Defaults used throughout the experiments: `β = α = 0.5`, clipped
    /// Lagrangian, constraints aggregated by their maximum.
    pub fn new(variant: Variant, horizon: usize) -> Self {
        AlgoConfig {
            variant,
            beta: 0.5,
            alpha: 0.5,
            lagrangian: LagrangianKind::Clipped,
            aggregation: Aggregation::Max,
            eta_override: None,
            sigma_override: None,
            h1_override: None,
            aogd: AogdOverrides::default(),
            horizon,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_aggregation(mut self, aggregation: Aggregation) -> Self {
        self.aggregation = aggregation;
        self
    }

    pub fn with_lagrangian(mut self, kind: LagrangianKind) -> Self {
        self.lagrangian = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(OcoError::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {v}"
                )))
            }
        };
        open_unit("beta", self.beta)?;
        open_unit("alpha", self.alpha)?;
        if self.horizon == 0 {
            return Err(OcoError::InvalidParameter("horizon T must be ≥ 1".into()));
        }
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v.is_finite() && v > 0.0) => Err(OcoError::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            ))),
            _ => Ok(()),
        };
        positive("eta", self.eta_override)?;
        positive("sigma", self.sigma_override)?;
        positive("h1", self.h1_override)?;
        positive("aogd eta0", self.aogd.eta0)?;
        positive("aogd mu0", self.aogd.mu0)?;
        positive("aogd theta0", self.aogd.theta0)?;
        if matches!(
            self.variant,
            Variant::ClippedOgd | Variant::StrongClippedOgd
        ) && self.lagrangian == LagrangianKind::Plain
        {
            return Err(OcoError::InvalidParameter(format!(
                "{} requires the clipped Lagrangian: its closed-form dual is only nonnegative under clipping",
                self.variant
            )));
        }
        Ok(())
    }
}

/// `σ = (m+1)G²/(2(1−α))` and `η = 1/(G √((m+1) R T))`.
pub fn balanced_params(m: usize, g: f64, r: f64, alpha: f64, horizon: usize) -> Result<(f64, f64)> {
    let sigma = sigma_for(m, g, alpha)?;
    let eta = eta_for(m, g, r, horizon, 0.5)?;
    Ok((sigma, eta))
}

pub fn sigma_for(m: usize, g: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(OcoError::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if g.is_nan() || g <= 0.0 || m == 0 {
        return Err(OcoError::InvalidParameter("need m ≥ 1 and G > 0".into()));
    }
    Ok((m as f64 + 1.0) * g * g / (2.0 * (1.0 - alpha)))
}

/// `η = 1/(T^β G √(R(m+1)))`.
pub fn eta_for(m: usize, g: f64, r: f64, horizon: usize, beta: f64) -> Result<f64> {
    if !(g > 0.0 && r > 0.0) || m == 0 || horizon == 0 {
        return Err(OcoError::InvalidParameter(
            "need m, T ≥ 1 and G, R > 0".into(),
        ));
    }
    Ok(1.0 / ((horizon as f64).powf(beta) * g * (r * (m as f64 + 1.0)).sqrt()))
}

/// Constants of one run, resolved from the problem and the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunParams {
    /// Number of dual variables (`m`, or 1 under aggregation).
    pub duals: usize,
    pub lipschitz: f64,
    pub radius: f64,
    pub sigma: f64,
    pub eta: f64,
    pub h1: Option<f64>,
    pub aogd_eta0: f64,
    pub aogd_mu0: f64,
    pub aogd_theta0: f64,
}

impl RunParams {
    pub fn resolve(problem: &ProblemSpec, cfg: &AlgoConfig) -> Result<Self> {
        cfg.validate()?;
        let duals = match cfg.aggregation {
            Aggregation::PerConstraint => problem.num_constraints(),
            Aggregation::Max | Aggregation::LogSumExp => 1,
        };
        let g = problem.lipschitz;
        let r = problem.radius();
        let sigma = match cfg.sigma_override {
            Some(s) => s,
            None => sigma_for(duals, g, cfg.alpha)?,
        };
        let eta = match cfg.eta_override {
            Some(e) => e,
            None => eta_for(duals, g, r, cfg.horizon, cfg.beta)?,
        };
        let h1 = cfg.h1_override.or(problem.strong_convexity);
        if cfg.variant == Variant::StrongClippedOgd {
            match h1 {
                Some(h) if h > 0.0 => {}
                _ => return Err(OcoError::InvalidParameter(format!(
                    "strong variant needs a strong-convexity constant H1 > 0; problem {} has none",
                    problem.name
                ))),
            }
        }
        let base = eta_for(duals, g, r, 1, cfg.beta)?;
        let aogd_eta0 = cfg.aogd.eta0.unwrap_or(base);
        let aogd_mu0 = cfg.aogd.mu0.unwrap_or(base);
        let aogd_theta0 = cfg.aogd.theta0.unwrap_or(sigma * base);
        Ok(RunParams {
            duals,
            lipschitz: g,
            radius: r,
            sigma,
            eta,
            h1,
            aogd_eta0,
            aogd_mu0,
            aogd_theta0,
        })
    }
}
