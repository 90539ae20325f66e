//! On-disk cache of best-fixed comparators, one JSON file per
//! `(problem, seed, T, solver options)`.

use std::fs;
use std::path::{Path, PathBuf};

use oco_lt::oracle::{best_fixed, SolveOptions};
use oco_lt::trace_io::save_json;
use serde::{Deserialize, Serialize};

use crate::setup::{hex_digest, Problem};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub problem: String,
    pub seed: u64,
    pub horizon: usize,
    pub x: Vec<f64>,
    /// Average loss at `x`.
    pub value: f64,
    /// `Σ_t f_t(x)`.
    pub total: f64,
    pub residual: f64,
    pub rho: f64,
    pub solver: SolveOptions,
}

pub struct OracleCache {
    dir: PathBuf,
}

impl OracleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        OracleCache { dir: dir.into() }
    }

    pub fn path_for(
        &self,
        problem: &Problem,
        seed: u64,
        horizon: usize,
        opts: &SolveOptions,
    ) -> PathBuf {
        let opts = serde_json::to_string(opts).unwrap_or_default();
        let id = format!("{}|seed={seed}|T={horizon}|{opts}", problem.key);
        self.dir
            .join(format!("{}.json", &hex_digest(id.as_bytes())[..32]))
    }

    fn read(path: &Path) -> Option<OracleRecord> {
        let text = fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// The cached record if present and readable, else a fresh solve that is
    /// then stored. The flag is `true` on a cache hit.
    pub fn get_or_solve(
        &self,
        problem: &Problem,
        seed: u64,
        horizon: usize,
        opts: &SolveOptions,
    ) -> Result<(OracleRecord, PathBuf, bool), CliError> {
        let path = self.path_for(problem, seed, horizon, opts);
        if let Some(rec) = Self::read(&path) {
            if rec.problem == problem.key
                && rec.seed == seed
                && rec.horizon == horizon
                && rec.solver == *opts
            {
                return Ok((rec, path, true));
            }
        }
        let b = best_fixed(&problem.spec, seed, horizon, opts)?;
        let rec = OracleRecord {
            problem: problem.key.clone(),
            seed,
            horizon,
            x: b.solution.x.into_inner(),
            value: b.solution.value,
            total: b.total,
            residual: b.solution.residual,
            rho: b.solution.rho,
            solver: opts.clone(),
        };
        fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        save_json(&tmp, &rec)?;
        fs::rename(&tmp, &path)?;
        Ok((rec, path, false))
    }
}
