use serde::{Deserialize, Serialize};

use crate::error::{OcoError, Result};
use crate::primitives::{norm, DecisionVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DykstraOutcome {
    pub x: DecisionVector,
    pub iterations: usize,
    /// Largest row or column sum deviation from 1 at exit.
    pub residual: f64,
}

/// Projection onto `{X : X1 = 1, Xᵀ1 = 1}` in closed form.
fn project_affine(x: &mut [f64], d: usize) {
    let df = d as f64;
    let r: Vec<f64> = (0..d)
        .map(|i| 1.0 - x[i * d..(i + 1) * d].iter().sum::<f64>())
        .collect();
    let c: Vec<f64> = (0..d)
        .map(|j| 1.0 - (0..d).map(|i| x[i * d + j]).sum::<f64>())
        .collect();
    let s: f64 = r.iter().sum();
    for i in 0..d {
        for j in 0..d {
            x[i * d + j] += (r[i] + c[j]) / df - s / (df * df);
        }
    }
}

fn sum_residual(x: &[f64], d: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..d {
        worst = worst.max((x[i * d..(i + 1) * d].iter().sum::<f64>() - 1.0).abs());
        worst = worst.max(((0..d).map(|k| x[k * d + i]).sum::<f64>() - 1.0).abs());
    }
    worst
}

/// Euclidean projection of a row-major `d × d` matrix onto the doubly
/// stochastic matrices, by Dykstra's alternating projections between the
/// affine row/column-sum set and the nonnegative orthant.
pub fn birkhoff_projection(
    y: &[f64],
    d: usize,
    tol: f64,
    max_iters: usize,
) -> Result<DykstraOutcome> {
    if d == 0 || y.len() != d * d {
        return Err(OcoError::DimensionMismatch {
            expected: d * d,
            got: y.len(),
        });
    }
    let n = d * d;
    let mut x = y.to_vec();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut z = vec![0.0; n];
    for it in 1..=max_iters {
        for k in 0..n {
            z[k] = x[k] + p[k];
        }
        project_affine(&mut z, d);
        for k in 0..n {
            p[k] += x[k] - z[k];
        }
        let mut change = vec![0.0; n];
        for k in 0..n {
            let next = (z[k] + q[k]).max(0.0);
            q[k] += z[k] - next;
            change[k] = next - x[k];
            x[k] = next;
        }
        let residual = sum_residual(&x, d);
        if norm(&change) <= tol && residual <= tol {
            return Ok(DykstraOutcome {
                x: x.into(),
                iterations: it,
                residual,
            });
        }
    }
    Err(OcoError::InvalidParameter(format!(
        "Dykstra projection did not converge in {max_iters} iterations"
    )))
}
