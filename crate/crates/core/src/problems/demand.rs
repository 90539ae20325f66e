//! Demand series: CSV ingestion and the synthetic fixture.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::error::{OcoError, Result};
use crate::rng::{stream_rng, DEMAND_NOISE};

/// Five-minute slots per day.
pub const SLOTS_PER_DAY: usize = 288;

/// Reads a two-column `index_or_timestamp,demand` CSV. A header row is
/// accepted when its demand field is not numeric. Blank lines are skipped.
pub fn load_demand_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse_err = |message: String| OcoError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        if fields.len() != 2 {
            return Err(parse_err(format!(
                "expected 2 columns, found {}",
                fields.len()
            )));
        }
        match fields[1].parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => return Err(parse_err(format!("non-finite demand {v}"))),
            Err(_) if line_no == 1 && out.is_empty() => continue,
            Err(_) => return Err(parse_err(format!("demand {:?} is not a number", fields[1]))),
        }
    }
    if out.is_empty() {
        return Err(OcoError::EmptyData(path.to_path_buf()));
    }
    Ok(out)
}

pub fn rescale_demand(values: &[f64], factor: f64) -> Vec<f64> {
    values.iter().map(|v| v * factor).collect()
}

/// Writes `t,demand` rows with 17 significant digits.
pub fn write_demand_csv(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "t,demand")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(f, "{},{:.16e}", i + 1, v)?;
    }
    f.flush()?;
    Ok(())
}

/// Synthetic five-minute demand in MW, scaled to the three-generator fleet:
/// a daily cycle (afternoon peak, night trough) plus uniform noise.
pub fn synthetic_demand(days: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, DEMAND_NOISE, 0);
    (0..days * SLOTS_PER_DAY)
        .map(|k| {
            let phase = 2.0 * PI * (k % SLOTS_PER_DAY) as f64 / SLOTS_PER_DAY as f64;
            let daily = -7.0 * (phase - PI / 6.0).cos() - 2.0 * (2.0 * phase).cos();
            let noise = rng.random_range(-1.0..1.0);
            38.0 + daily + noise
        })
        .collect()
}
