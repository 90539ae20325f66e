//! Trace CSV and summary JSON.
//!
//! The trace CSV has the fixed header `t,fx,g_max,g_clip,lambda_norm,x_norm`
//! followed by one `g_<i>` column per constraint. Reals are written with 17
//! significant digits, which round-trips every `f64`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::algorithms::RunTrace;
use crate::error::{OcoError, Result};
use crate::primitives::norm;

pub const TRACE_HEADER: [&str; 6] = ["t", "fx", "g_max", "g_clip", "lambda_norm", "x_norm"];

/// One parsed row of a trace CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub t: usize,
    pub fx: f64,
    pub g_max: f64,
    pub g_clip: f64,
    pub lambda_norm: f64,
    pub x_norm: f64,
    pub constraints: Vec<f64>,
}

impl CsvRow {
    pub fn from_trace(trace: &RunTrace) -> Vec<CsvRow> {
        trace
            .rows
            .iter()
            .map(|r| CsvRow {
                t: r.t,
                fx: r.loss,
                g_max: r.g_max(),
                g_clip: r.violation(),
                lambda_norm: norm(&r.lambda),
                x_norm: r.x.norm(),
                constraints: r.constraints.clone(),
            })
            .collect()
    }
}

pub fn write_trace_csv<W: Write>(mut w: W, trace: &RunTrace) -> Result<()> {
    let m = trace.rows.first().map_or(0, |r| r.constraints.len());
    let mut header: Vec<String> = TRACE_HEADER.iter().map(|s| s.to_string()).collect();
    header.extend((1..=m).map(|i| format!("g_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for row in CsvRow::from_trace(trace) {
        write!(
            w,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            row.t, row.fx, row.g_max, row.g_clip, row.lambda_norm, row.x_norm
        )?;
        for g in &row.constraints {
            write!(w, ",{g:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_trace_csv(path: impl AsRef<Path>, trace: &RunTrace) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_trace_csv(&mut w, trace)?;
    w.flush()?;
    Ok(())
}

pub fn load_trace_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let err = |line: usize, message: String| OcoError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| OcoError::EmptyData(path.to_path_buf()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < TRACE_HEADER.len() || cols[..TRACE_HEADER.len()] != TRACE_HEADER {
        return Err(err(1, format!("unexpected header {header:?}")));
    }
    let width = cols.len();
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(err(
                line_no,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let t = fields[0]
            .parse::<usize>()
            .map_err(|e| err(line_no, format!("bad step index: {e}")))?;
        let nums = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| err(line_no, format!("bad number: {e}")))?;
        out.push(CsvRow {
            t,
            fx: nums[0],
            g_max: nums[1],
            g_clip: nums[2],
            lambda_norm: nums[3],
            x_norm: nums[4],
            constraints: nums[5..].to_vec(),
        });
    }
    Ok(out)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
