use oco_lt::algorithms::{Aggregation, AlgoConfig, LagrangianKind, Variant};
use oco_lt::problems::{
    dispatch_problem, doubly_stochastic_problem, load_demand_csv, rescale_demand, synthetic_demand,
    toy_problem, DispatchParams, ProblemSpec, DEFAULT_MATRIX_DIM,
};
use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::CliError;

/// Days and seed of the built-in synthetic demand series.
const FIXTURE_DAYS: usize = 10;
const FIXTURE_SEED: u64 = 2018;

/// A problem together with a string that identifies it for caching.
pub struct Problem {
    pub spec: ProblemSpec,
    pub key: String,
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn problem(s: &Settings) -> Result<Problem, CliError> {
    let name = s.raw("problem").unwrap_or("toy");
    let only_for = |key: &str, problem: &str| {
        if s.raw(key).is_some() {
            Err(CliError::Usage(format!(
                "--{} only applies to --problem {problem}",
                key.replace('_', "-")
            )))
        } else {
            Ok(())
        }
    };
    match name {
        "toy" => {
            only_for("d", "doubly-stochastic")?;
            only_for("demand", "dispatch")?;
            only_for("demand_scale", "dispatch")?;
            Ok(Problem {
                spec: toy_problem()?,
                key: "toy".into(),
            })
        }
        "doubly-stochastic" | "ds" => {
            only_for("demand", "dispatch")?;
            only_for("demand_scale", "dispatch")?;
            let d = s.get("d")?.unwrap_or(DEFAULT_MATRIX_DIM);
            Ok(Problem {
                spec: doubly_stochastic_problem(d).map_err(usage)?,
                key: format!("doubly-stochastic:d={d}"),
            })
        }
        "dispatch" => {
            only_for("d", "doubly-stochastic")?;
            let (demand, source) = match s.path("demand") {
                Some(path) => (load_demand_csv(&path)?, path.display().to_string()),
                None => (
                    synthetic_demand(FIXTURE_DAYS, FIXTURE_SEED),
                    format!("synthetic:days={FIXTURE_DAYS},seed={FIXTURE_SEED}"),
                ),
            };
            let scale: f64 = s.get("demand_scale")?.unwrap_or(1.0);
            if !(scale.is_finite() && scale > 0.0) {
                return Err(CliError::Usage(format!(
                    "demand scale must be positive, got {scale}"
                )));
            }
            let demand = if scale == 1.0 {
                demand
            } else {
                rescale_demand(&demand, scale)
            };
            let bytes: Vec<u8> = demand.iter().flat_map(|v| v.to_le_bytes()).collect();
            let key = format!("dispatch:demand={}", hex_digest(&bytes));
            let spec = dispatch_problem(DispatchParams::with_demand(demand))?
                .with_metadata("demand_source", source)
                .with_metadata("demand_scale", scale);
            Ok(Problem { spec, key })
        }
        other => Err(CliError::Usage(format!(
            "unknown problem {other:?} (expected toy, doubly-stochastic or dispatch)"
        ))),
    }
}

fn usage(e: oco_lt::OcoError) -> CliError {
    CliError::Usage(e.to_string())
}

/// Algorithm settings shared by every cell; `variant` and `horizon` are
/// filled in by the caller.
pub fn algo_config(s: &Settings, variant: Variant, horizon: usize) -> Result<AlgoConfig, CliError> {
    let mut cfg = AlgoConfig::new(variant, horizon);
    if let Some(beta) = s.get("beta")? {
        cfg.beta = beta;
    }
    if let Some(alpha) = s.get("alpha")? {
        cfg.alpha = alpha;
    }
    if let Some(kind) = s.get::<LagrangianKind>("lagrangian")? {
        cfg.lagrangian = kind;
    }
    if let Some(agg) = s.get::<Aggregation>("aggregation")? {
        cfg.aggregation = agg;
    }
    cfg.eta_override = s.get("eta")?;
    cfg.sigma_override = s.get("sigma")?;
    cfg.h1_override = s.get("h1")?;
    cfg.aogd.eta0 = s.get("eta0")?;
    cfg.aogd.mu0 = s.get("mu0")?;
    cfg.aogd.theta0 = s.get("theta0")?;
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}
