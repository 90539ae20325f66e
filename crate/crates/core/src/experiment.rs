//! Grids of runs over algorithms, horizons and seeds.
//!
//! Cells run concurrently on the rayon pool; results come back in the order
//! of the requested configurations and seeds, whatever the scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{run_streaming, AlgoConfig, Variant};
use crate::error::{OcoError, Result};
use crate::metrics::{mean_std, RunSummary, SummaryBuilder};
use crate::oracle::{best_fixed, SolveOptions};
use crate::problems::ProblemSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub variant: Variant,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub outcome: std::result::Result<RunSummary, String>,
}

/// Runs one configuration without storing its trace and summarizes it
/// against `offline_total = Σ_t f_t(x*)`.
pub fn summarize_run(
    problem: &ProblemSpec,
    cfg: &AlgoConfig,
    seed: u64,
    offline_total: f64,
) -> Result<RunSummary> {
    let mut b = SummaryBuilder::new(problem.num_constraints(), cfg.horizon);
    let mut failure: Option<OcoError> = None;
    run_streaming(problem, cfg, seed, |row| {
        if let Err(e) = b.push(&row) {
            failure.get_or_insert(e);
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => b.finish(offline_total),
    }
}

/// Best-fixed totals for every `(horizon, seed)` pair, computed in parallel.
pub fn offline_totals(
    problem: &ProblemSpec,
    horizons: &[usize],
    seeds: &[u64],
    opts: &SolveOptions,
) -> BTreeMap<(usize, u64), std::result::Result<f64, String>> {
    let mut pairs: Vec<(usize, u64)> = horizons
        .iter()
        .flat_map(|&h| seeds.iter().map(move |&s| (h, s)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    pairs
        .into_par_iter()
        .map(|(h, s)| {
            let v = best_fixed(problem, s, h, opts)
                .map(|b| b.total)
                .map_err(|e| e.to_string());
            ((h, s), v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Runs every configuration against every seed. `offline` supplies the
/// comparator total for a `(horizon, seed)` pair.
pub fn sweep<F>(
    problem: &ProblemSpec,
    configs: &[AlgoConfig],
    seeds: &[u64],
    offline: F,
) -> Vec<CellResult>
where
    F: Fn(usize, u64) -> std::result::Result<f64, String> + Sync,
{
    let cells: Vec<(&AlgoConfig, u64)> = configs
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    cells
        .into_par_iter()
        .map(|(cfg, seed)| {
            let key = CellKey {
                variant: cfg.variant,
                horizon: cfg.horizon,
                seed,
            };
            let outcome = offline(cfg.horizon, seed).and_then(|total| {
                summarize_run(problem, cfg, seed, total).map_err(|e| e.to_string())
            });
            CellResult { key, outcome }
        })
        .collect()
}

/// [`sweep`] with the offline comparator solved in-process.
pub fn sweep_with_oracle(
    problem: &ProblemSpec,
    configs: &[AlgoConfig],
    seeds: &[u64],
    opts: &SolveOptions,
) -> Vec<CellResult> {
    let horizons: Vec<usize> = configs.iter().map(|c| c.horizon).collect();
    let totals = offline_totals(problem, &horizons, seeds, opts);
    sweep(problem, configs, seeds, |h, s| totals[&(h, s)].clone())
}

/// Mean and standard deviation across seeds of the scalar metrics, computed
/// on the max-aggregated constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub variant: Variant,
    pub horizon: usize,
    pub runs: usize,
    pub failed: usize,
    pub regret: (f64, f64),
    pub positive_regret: (f64, f64),
    pub sum_g: (f64, f64),
    pub sum_clip: (f64, f64),
    pub sum_clip_sq: (f64, f64),
    pub max_step_violation: (f64, f64),
    pub tail_max_violation: (f64, f64),
}

/// Groups results by `(variant, horizon)`, in first-seen order.
pub fn cell_stats(results: &[CellResult]) -> Vec<CellStats> {
    let mut order: Vec<(Variant, usize)> = Vec::new();
    let mut groups: BTreeMap<(Variant, usize), Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        let k = (r.key.variant, r.key.horizon);
        if !groups.contains_key(&k) {
            order.push(k);
        }
        groups.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let rs = &groups[&k];
            let ok: Vec<&RunSummary> = rs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            let stat = |f: &dyn Fn(&RunSummary) -> f64| {
                mean_std(&ok.iter().map(|s| f(s)).collect::<Vec<_>>())
            };
            CellStats {
                variant: k.0,
                horizon: k.1,
                runs: ok.len(),
                failed: rs.len() - ok.len(),
                regret: stat(&|s| s.regret),
                positive_regret: stat(&|s| s.positive_regret()),
                sum_g: stat(&|s| s.sum_g_max),
                sum_clip: stat(&|s| s.sum_clip_max),
                sum_clip_sq: stat(&|s| s.sum_clip_sq_max),
                max_step_violation: stat(&|s| s.max_step_violation),
                tail_max_violation: stat(&|s| s.tail_max_violation),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run, Variant};
    use crate::metrics::summarize;
    use crate::problems::toy_problem;

    #[test]
    fn streaming_summary_matches_stored_trace() {
        let p = toy_problem().unwrap();
        let cfg = AlgoConfig::new(Variant::MahdaviOgd, 500);
        let a = summarize(&run(&p, &cfg, 7).unwrap(), 3.0).unwrap();
        let b = summarize_run(&p, &cfg, 7, 3.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_order_and_cardinality() {
        let p = toy_problem().unwrap();
        let configs: Vec<AlgoConfig> = [Variant::MahdaviOgd, Variant::Aogd, Variant::ClippedOgd]
            .iter()
            .flat_map(|&v| [100, 200].map(|t| AlgoConfig::new(v, t)))
            .collect();
        let seeds: Vec<u64> = (0..4).collect();
        let res = sweep_with_oracle(&p, &configs, &seeds, &SolveOptions::default());
        assert_eq!(res.len(), 3 * 2 * 4);
        let keys: Vec<CellKey> = res.iter().map(|r| r.key).collect();
        let again: Vec<CellKey> = sweep_with_oracle(&p, &configs, &seeds, &SolveOptions::default())
            .iter()
            .map(|r| r.key)
            .collect();
        assert_eq!(keys, again);
        assert_eq!(keys[0].variant, Variant::MahdaviOgd);
        assert_eq!(keys[4].horizon, 200);
        let stats = cell_stats(&res);
        assert_eq!(stats.len(), 6);
        assert!(stats.iter().all(|s| s.runs == 4 && s.failed == 0));
    }

    #[test]
    fn failed_oracle_marks_cells() {
        let p = toy_problem().unwrap();
        let res = sweep(
            &p,
            &[AlgoConfig::new(Variant::ClippedOgd, 10)],
            &[1, 2],
            |_, s| {
                if s == 2 {
                    Err("boom".into())
                } else {
                    Ok(0.0)
                }
            },
        );
        assert!(res[0].outcome.is_ok());
        assert_eq!(res[1].outcome, Err("boom".to_string()));
    }
}
