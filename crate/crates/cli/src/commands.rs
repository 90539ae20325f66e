use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use oco_lt::algorithms::{doubling_run, run as run_algo, AlgoConfig, Epoch, Variant};
use oco_lt::experiment::{cell_stats, sweep as sweep_cells, CellResult};
use oco_lt::metrics::{summarize, RunSummary};
use oco_lt::oracle::SolveOptions;
use oco_lt::trace_io::{save_json, save_trace_csv};
use oco_lt::validation::{run_check, CHECKS};
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{OracleCache, OracleRecord};
use crate::config::Settings;
use crate::setup::{algo_config, problem};
use crate::{CliError, OUT_ENV};

fn out_dir(s: &Settings) -> PathBuf {
    s.path("out")
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn oracle_cache(s: &Settings, out: &Path) -> OracleCache {
    OracleCache::new(s.path("cache").unwrap_or_else(|| out.join("oracle-cache")))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
struct RunReport<'a> {
    problem: &'a str,
    metadata: &'a BTreeMap<String, String>,
    config: &'a AlgoConfig,
    seed: u64,
    doubling: bool,
    epochs: &'a [Epoch],
    oracle: &'a OracleRecord,
    summary: &'a RunSummary,
}

pub fn run(s: &Settings, doubling: bool) -> Result<(), CliError> {
    let horizon: usize = s.require("T")?;
    let seed: u64 = s.get("seed")?.unwrap_or(0);
    let variant: Variant = s.get("algo")?.unwrap_or(Variant::ClippedOgd);
    let p = problem(s)?;
    let cfg = algo_config(s, variant, horizon)?;
    let out = out_dir(s);

    let trace = if doubling {
        doubling_run(
            &p.spec,
            |h| AlgoConfig {
                horizon: h,
                ..cfg.clone()
            },
            horizon,
            seed,
        )?
    } else {
        run_algo(&p.spec, &cfg, seed)?
    };
    let (oracle, _, _) =
        oracle_cache(s, &out).get_or_solve(&p, seed, horizon, &SolveOptions::default())?;
    let summary = summarize(&trace, oracle.total)?;

    fs::create_dir_all(&out)?;
    save_trace_csv(out.join("trace.csv"), &trace)?;
    let report = RunReport {
        problem: &p.key,
        metadata: &p.spec.metadata,
        config: &cfg,
        seed,
        doubling,
        epochs: &trace.epochs,
        oracle: &oracle,
        summary: &summary,
    };
    save_json(out.join("summary.json"), &report)?;

    let params = &trace.epochs.last().expect("nonempty run").params;
    println!("problem             {}", p.spec.name);
    println!("algorithm           {variant}");
    println!("T                   {horizon}");
    println!("seed                {seed}");
    println!("eta                 {}", num(params.eta));
    println!("sigma               {}", num(params.sigma));
    println!("cumulative_loss     {}", num(summary.cumulative_loss));
    println!("offline_value       {}", num(summary.offline_value));
    println!("regret              {}", num(summary.regret));
    println!("sum_g               {}", num(summary.sum_g_max));
    println!("sum_clip            {}", num(summary.sum_clip_max));
    println!("sum_clip_sq         {}", num(summary.sum_clip_sq_max));
    println!("max_step_violation  {}", num(summary.max_step_violation));
    println!("wrote {}", out.display());
    Ok(())
}

pub fn sweep(s: &Settings) -> Result<(), CliError> {
    let horizons: Vec<usize> = s
        .list("T")?
        .ok_or_else(|| CliError::Usage("missing required setting --T".into()))?;
    let algos: Vec<Variant> = s
        .list("algos")?
        .unwrap_or_else(|| vec![Variant::MahdaviOgd, Variant::Aogd, Variant::ClippedOgd]);
    if horizons.is_empty() || algos.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one horizon and one algorithm".into(),
        ));
    }
    let n_seeds: u64 = s.get("seeds")?.unwrap_or(10);
    if n_seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let jobs: usize = s.get("jobs")?.unwrap_or(0);
    let p = problem(s)?;
    let configs = algos
        .iter()
        .flat_map(|&v| horizons.iter().map(move |&t| (v, t)))
        .map(|(v, t)| algo_config(s, v, t))
        .collect::<Result<Vec<_>, _>>()?;
    let out = out_dir(s);
    let cache = oracle_cache(s, &out);
    let opts = SolveOptions::default();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?;
    let results = pool.install(|| {
        let mut pairs: Vec<(usize, u64)> = horizons
            .iter()
            .flat_map(|&h| seeds.iter().map(move |&s| (h, s)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let totals: BTreeMap<(usize, u64), Result<f64, String>> = pairs
            .par_iter()
            .map(|&(h, seed)| {
                let total = cache
                    .get_or_solve(&p, seed, h, &opts)
                    .map(|(r, _, _)| r.total)
                    .map_err(|e| format!("oracle: {e}"));
                ((h, seed), total)
            })
            .collect();
        sweep_cells(&p.spec, &configs, &seeds, |h, seed| {
            totals[&(h, seed)].clone()
        })
    });

    fs::create_dir_all(&out)?;
    write_cells(&out.join("sweep.csv"), &results)?;
    write_stats(&out.join("sweep_stats.csv"), &results)?;
    let failed: Vec<&CellResult> = results.iter().filter(|r| r.outcome.is_err()).collect();
    for r in &failed {
        if let Err(e) = &r.outcome {
            eprintln!(
                "cell {} T={} seed={} failed: {e}",
                r.key.variant, r.key.horizon, r.key.seed
            );
        }
    }
    println!(
        "{} cells ({} failed) written to {}",
        results.len(),
        failed.len(),
        out.display()
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} of {} cells failed",
            failed.len(),
            results.len()
        )))
    }
}

fn write_cells(path: &Path, results: &[CellResult]) -> Result<(), CliError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(
        w,
        "algo,T,seed,regret,sum_g,sum_clip,sum_clip_sq,max_step_violation"
    )?;
    for r in results {
        let vals = match &r.outcome {
            Ok(s) => [
                s.regret,
                s.sum_g_max,
                s.sum_clip_max,
                s.sum_clip_sq_max,
                s.max_step_violation,
            ],
            Err(_) => [f64::NAN; 5],
        };
        let vals: Vec<String> = vals.iter().map(|&v| num(v)).collect();
        writeln!(
            w,
            "{},{},{},{}",
            r.key.variant,
            r.key.horizon,
            r.key.seed,
            vals.join(",")
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_stats(path: &Path, results: &[CellResult]) -> Result<(), CliError> {
    const METRICS: [&str; 7] = [
        "regret",
        "positive_regret",
        "sum_g",
        "sum_clip",
        "sum_clip_sq",
        "max_step_violation",
        "tail_max_violation",
    ];
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut header = vec![
        "algo".to_string(),
        "T".into(),
        "runs".into(),
        "failed".into(),
    ];
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_std"));
    }
    writeln!(w, "{}", header.join(","))?;
    for c in cell_stats(results) {
        let pairs = [
            c.regret,
            c.positive_regret,
            c.sum_g,
            c.sum_clip,
            c.sum_clip_sq,
            c.max_step_violation,
            c.tail_max_violation,
        ];
        let vals: Vec<String> = pairs.iter().flat_map(|&(m, s)| [num(m), num(s)]).collect();
        writeln!(
            w,
            "{},{},{},{},{}",
            c.variant,
            c.horizon,
            c.runs,
            c.failed,
            vals.join(",")
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn oracle(s: &Settings) -> Result<(), CliError> {
    let horizon: usize = s.require("T")?;
    let seed: u64 = s.get("seed")?.unwrap_or(0);
    let p = problem(s)?;
    let out = out_dir(s);
    let (rec, path, hit) =
        oracle_cache(s, &out).get_or_solve(&p, seed, horizon, &SolveOptions::default())?;
    fs::create_dir_all(&out)?;
    save_json(out.join("oracle.json"), &rec)?;
    println!(
        "{} {}",
        if hit { "cached" } else { "computed" },
        path.display()
    );
    let x: Vec<String> = rec.x.iter().map(|&v| num(v)).collect();
    println!("x         [{}]", x.join(", "));
    println!("value     {}", num(rec.value));
    println!("total     {}", num(rec.total));
    println!("residual  {}", num(rec.residual));
    Ok(())
}

pub fn validate(only: Option<&[usize]>) -> Result<(), CliError> {
    let selected: Vec<_> = CHECKS
        .iter()
        .filter(|c| only.is_none_or(|ids| ids.contains(&c.0)))
        .collect();
    if selected.is_empty() {
        return Err(CliError::Usage("no check matches --only".into()));
    }
    let start = Instant::now();
    let outcomes: Vec<_> = selected
        .par_iter()
        .map(|&&(id, name, f)| {
            let t0 = Instant::now();
            (run_check(id, name, f), t0.elapsed().as_secs_f64())
        })
        .collect();
    println!("{:>3}  {:<6} {:>7}  check", "id", "result", "secs");
    for (o, secs) in &outcomes {
        let tag = if o.verdict.passed { "PASS" } else { "FAIL" };
        println!("{:>3}  {tag:<6} {secs:>7.1}  {}", o.id, o.name);
        println!("{:>20}{}", "", o.verdict.detail);
    }
    let failed = outcomes.iter().filter(|(o, _)| !o.verdict.passed).count();
    println!(
        "{} passed, {failed} failed in {:.1}s",
        outcomes.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{failed} check(s) failed")))
    }
}
