//! Regret, violation aggregates and log-log slope fits.

use serde::{Deserialize, Serialize};

use crate::algorithms::{RunTrace, TraceRow};
use crate::error::{OcoError, Result};

/// Values below this are dropped by [`fit_slope_filtered`].
pub const SLOPE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub horizon: usize,
    pub cumulative_loss: f64,
    pub offline_value: f64,
    /// `Σ f_t(x_t) − offline_value`.
    pub regret: f64,
    /// Per constraint `Σ_t g_i(x_t)`.
    pub sum_g: Vec<f64>,
    /// Per constraint `Σ_t [g_i(x_t)]_+`.
    pub sum_clip: Vec<f64>,
    /// Per constraint `Σ_t ([g_i(x_t)]_+)²`.
    pub sum_clip_sq: Vec<f64>,
    /// The same three sums for `max_i g_i(x_t)`.
    pub sum_g_max: f64,
    pub sum_clip_max: f64,
    pub sum_clip_sq_max: f64,
    /// `max_t max_i [g_i(x_t)]_+`.
    pub max_step_violation: f64,
    /// The same maximum over `t > T/10`.
    pub tail_max_violation: f64,
}

impl RunSummary {
    /// `max(regret, 0)`.
    pub fn positive_regret(&self) -> f64 {
        self.regret.max(0.0)
    }
}

/// Running violation sums over a sequence of constraint-value rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ViolationSums {
    pub steps: usize,
    pub sum_g: Vec<f64>,
    pub sum_clip: Vec<f64>,
    pub sum_clip_sq: Vec<f64>,
    pub sum_g_max: f64,
    pub sum_clip_max: f64,
    pub sum_clip_sq_max: f64,
    pub max_step_violation: f64,
}

impl ViolationSums {
    pub fn new(m: usize) -> Self {
        ViolationSums {
            sum_g: vec![0.0; m],
            sum_clip: vec![0.0; m],
            sum_clip_sq: vec![0.0; m],
            ..Default::default()
        }
    }

    pub fn push(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != self.sum_g.len() {
            return Err(OcoError::DimensionMismatch {
                expected: self.sum_g.len(),
                got: g.len(),
            });
        }
        for (i, &v) in g.iter().enumerate() {
            let c = v.max(0.0);
            self.sum_g[i] += v;
            self.sum_clip[i] += c;
            self.sum_clip_sq[i] += c * c;
        }
        let gm = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cm = gm.max(0.0);
        self.sum_g_max += gm;
        self.sum_clip_max += cm;
        self.sum_clip_sq_max += cm * cm;
        self.max_step_violation = self.max_step_violation.max(cm);
        self.steps += 1;
        Ok(())
    }

    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, m: usize) -> Result<Self> {
        let mut s = ViolationSums::new(m);
        for g in rows {
            s.push(g)?;
        }
        Ok(s)
    }
}

/// Accumulates a [`RunSummary`] row by row, so long runs need not be stored.
#[derive(Clone, Debug)]
pub struct SummaryBuilder {
    horizon: usize,
    sums: ViolationSums,
    cumulative_loss: f64,
    tail_max: f64,
}

impl SummaryBuilder {
    pub fn new(num_constraints: usize, horizon: usize) -> Self {
        SummaryBuilder {
            horizon,
            sums: ViolationSums::new(num_constraints),
            cumulative_loss: 0.0,
            tail_max: 0.0,
        }
    }

    pub fn push(&mut self, row: &TraceRow) -> Result<()> {
        self.sums.push(&row.constraints)?;
        self.cumulative_loss += row.loss;
        if row.t > self.horizon / 10 {
            self.tail_max = self.tail_max.max(row.violation());
        }
        Ok(())
    }

    pub fn finish(self, offline_value: f64) -> Result<RunSummary> {
        if self.sums.steps == 0 {
            return Err(OcoError::InvalidParameter("empty trace".into()));
        }
        if self.sums.steps != self.horizon {
            return Err(OcoError::DimensionMismatch {
                expected: self.horizon,
                got: self.sums.steps,
            });
        }
        let v = self.sums;
        Ok(RunSummary {
            horizon: self.horizon,
            cumulative_loss: self.cumulative_loss,
            offline_value,
            regret: self.cumulative_loss - offline_value,
            sum_g: v.sum_g,
            sum_clip: v.sum_clip,
            sum_clip_sq: v.sum_clip_sq,
            sum_g_max: v.sum_g_max,
            sum_clip_max: v.sum_clip_max,
            sum_clip_sq_max: v.sum_clip_sq_max,
            max_step_violation: v.max_step_violation,
            tail_max_violation: self.tail_max,
        })
    }
}

pub fn summarize(trace: &RunTrace, offline_value: f64) -> Result<RunSummary> {
    let first = trace
        .rows
        .first()
        .ok_or_else(|| OcoError::InvalidParameter("empty trace".into()))?;
    let mut b = SummaryBuilder::new(first.constraints.len(), trace.rows.len());
    for row in &trace.rows {
        b.push(row)?;
    }
    b.finish(offline_value)
}

/// Whether `(Σ[g]_+)² ≤ T Σ([g]_+)²` holds for every constraint and for the
/// max aggregate, with relative slack `rel`.
pub fn cauchy_schwarz_holds(s: &RunSummary, rel: f64) -> bool {
    let t = s.horizon as f64;
    let ok = |clip: f64, sq: f64| clip * clip <= t * sq * (1.0 + rel);
    s.sum_clip
        .iter()
        .zip(&s.sum_clip_sq)
        .all(|(&c, &q)| ok(c, q))
        && ok(s.sum_clip_max, s.sum_clip_sq_max)
}

/// `max_{t > after} max_i [g_i(x_t)]_+`; zero if no row qualifies.
pub fn max_violation_after(rows: &[TraceRow], after: usize) -> f64 {
    rows.iter()
        .filter(|r| r.t > after)
        .map(TraceRow::violation)
        .fold(0.0, f64::max)
}

/// Least-squares slope of `ln value` against `ln T`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(OcoError::Fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(t, v)) = points
        .iter()
        .find(|(t, v)| !(*v > 0.0 && v.is_finite() && *t > 0.0))
    {
        return Err(OcoError::Fit(format!(
            "nonpositive or non-finite point (T = {t}, value = {v})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(OcoError::Fit("all horizons equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Result of a slope fit after dropping near-zero values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredFit {
    /// `None` when fewer than three points survive.
    pub slope: Option<f64>,
    pub kept: usize,
    pub dropped: usize,
}

/// Drops points with value below [`SLOPE_FLOOR`], then fits.
pub fn fit_slope_filtered(points: &[(f64, f64)]) -> Result<FilteredFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.1 >= SLOPE_FLOOR)
        .collect();
    let dropped = points.len() - kept.len();
    let slope = if kept.len() >= 3 {
        Some(fit_slope(&kept)?)
    } else {
        None
    };
    Ok(FilteredFit {
        slope,
        kept: kept.len(),
        dropped,
    })
}

/// Sample mean and (n−1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
