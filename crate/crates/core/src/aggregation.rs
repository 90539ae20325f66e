//! Collapsing `m` constraints into a single one, either by their pointwise
//! maximum or by the smooth log-sum-exp surrogate.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convex::{ConvexFn, SharedFn};
use crate::error::{OcoError, Result};
use crate::primitives::DecisionVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregateMode {
    Max,
    LogSumExp,
}

fn check_nonempty(gs: &[SharedFn]) -> Result<usize> {
    let first = gs.first().ok_or_else(|| {
        OcoError::InvalidParameter("aggregation needs at least one constraint".into())
    })?;
    let n = first.dim();
    if let Some(bad) = gs.iter().find(|g| g.dim() != n) {
        return Err(OcoError::DimensionMismatch {
            expected: n,
            got: bad.dim(),
        });
    }
    Ok(n)
}

fn max_hint(gs: &[SharedFn]) -> Option<f64> {
    gs.iter()
        .map(|g| g.lipschitz_hint())
        .try_fold(0.0f64, |acc, h| h.map(|h| acc.max(h)))
}

/// `max_i g_i(x)`; the subgradient is taken from the lowest-index maximizer.
#[derive(Debug)]
pub struct MaxAggregate {
    gs: Vec<SharedFn>,
    dim: usize,
}

impl MaxAggregate {
    fn argmax(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, self.gs[0].eval(x));
        for (i, g) in self.gs.iter().enumerate().skip(1) {
            let v = g.eval(x);
            // Strict comparison keeps the lowest index on ties.
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}

impl ConvexFn for MaxAggregate {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.argmax(x).1
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        let (i, _) = self.argmax(x);
        self.gs[i].subgrad(x)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        max_hint(&self.gs)
    }

    fn is_smooth(&self) -> bool {
        self.gs.len() == 1 && self.gs[0].is_smooth()
    }
}

/// `log Σ_i exp g_i(x)`, evaluated with the max-shift so that large
/// constraint values do not overflow.
#[derive(Debug)]
pub struct LogSumExpAggregate {
    gs: Vec<SharedFn>,
    dim: usize,
}

impl LogSumExpAggregate {
    fn values(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let vals: Vec<f64> = self.gs.iter().map(|g| g.eval(x)).collect();
        let shift = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (vals, shift)
    }

    /// Softmax weights of the constraint values at `x`.
    pub fn weights(&self, x: &[f64]) -> Vec<f64> {
        let (vals, shift) = self.values(x);
        let exps: Vec<f64> = vals.iter().map(|v| (v - shift).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }
}

impl ConvexFn for LogSumExpAggregate {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let (vals, shift) = self.values(x);
        if self.gs.len() == 1 {
            return vals[0];
        }
        shift + vals.iter().map(|v| (v - shift).exp()).sum::<f64>().ln()
    }

    fn subgrad(&self, x: &[f64]) -> DecisionVector {
        let mut out = DecisionVector::zeros(self.dim);
        for (g, w) in self.gs.iter().zip(self.weights(x)) {
            if w > 0.0 {
                out.axpy(w, &g.subgrad(x));
            }
        }
        out
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        // A convex combination of subgradients is no longer than the longest.
        max_hint(&self.gs)
    }

    fn is_smooth(&self) -> bool {
        self.gs.iter().all(|g| g.is_smooth())
    }
}

pub fn max_aggregate(gs: &[SharedFn]) -> Result<SharedFn> {
    let dim = check_nonempty(gs)?;
    Ok(Arc::new(MaxAggregate {
        gs: gs.to_vec(),
        dim,
    }))
}

pub fn logsumexp_aggregate(gs: &[SharedFn]) -> Result<SharedFn> {
    let dim = check_nonempty(gs)?;
    Ok(Arc::new(LogSumExpAggregate {
        gs: gs.to_vec(),
        dim,
    }))
}

pub fn aggregate(gs: &[SharedFn], mode: AggregateMode) -> Result<SharedFn> {
    match mode {
        AggregateMode::Max => max_aggregate(gs),
        AggregateMode::LogSumExp => logsumexp_aggregate(gs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::{finite_diff_grad, relative_error, Affine, HalfSquaredDistance, Shifted};

    fn lin(c: [f64; 2], b: f64) -> SharedFn {
        Arc::new(Affine::new(c, b))
    }

    #[test]
    fn empty_is_error() {
        assert!(max_aggregate(&[]).is_err());
        assert!(logsumexp_aggregate(&[]).is_err());
    }

    #[test]
    fn max_single_is_identity() {
        let g = lin([0.5, -2.0], 0.1);
        let agg = max_aggregate(std::slice::from_ref(&g)).unwrap();
        let x = [0.3, 0.7];
        assert_eq!(agg.eval(&x), g.eval(&x));
        assert_eq!(&*agg.subgrad(&x), &*g.subgrad(&x));
    }

    #[test]
    fn max_picks_larger() {
        let agg = max_aggregate(&[lin([1.0, 0.0], 0.0), lin([-1.0, 0.0], 0.0)]).unwrap();
        assert_eq!(agg.eval(&[2.0, 0.0]), 2.0);
        assert_eq!(&*agg.subgrad(&[2.0, 0.0]), &[1.0, 0.0]);
    }

    #[test]
    fn max_tie_breaks_to_lowest_index() {
        let agg = max_aggregate(&[lin([1.0, 0.0], 0.0), lin([0.0, 1.0], 0.0)]).unwrap();
        assert_eq!(&*agg.subgrad(&[1.0, 1.0]), &[1.0, 0.0]);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let g3: SharedFn = Arc::new(Affine::new([1.0, 0.0, 0.0], 0.0));
        assert!(max_aggregate(&[lin([1.0, 0.0], 0.0), g3]).is_err());
    }

    #[test]
    fn lse_single_is_exact() {
        let g = lin([0.5, -2.0], 0.1);
        let agg = logsumexp_aggregate(std::slice::from_ref(&g)).unwrap();
        let x = [0.3, 0.7];
        assert_eq!(agg.eval(&x), g.eval(&x));
    }

    #[test]
    fn lse_duplicate_adds_log_two() {
        let g = lin([0.0, 0.0], 0.37);
        let agg = logsumexp_aggregate(&[g.clone(), g]).unwrap();
        assert!((agg.eval(&[0.0, 0.0]) - (0.37 + 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn lse_no_overflow_on_large_values() {
        let agg = logsumexp_aggregate(&[lin([0.0, 0.0], 1000.0), lin([0.0, 0.0], 999.0)]).unwrap();
        let v = agg.eval(&[0.0, 0.0]);
        assert!(v.is_finite());
        assert!((v - (1000.0 + (1.0 + (-1f64).exp()).ln())).abs() < 1e-12);
    }

    fn smooth_family() -> Vec<SharedFn> {
        vec![
            Arc::new(Shifted {
                inner: Arc::new(HalfSquaredDistance {
                    target: [0.2, -0.1].into(),
                }),
                shift: -0.3,
            }),
            lin([0.7, -0.4], -0.1),
            Arc::new(Shifted {
                inner: Arc::new(HalfSquaredDistance {
                    target: [-0.5, 0.5].into(),
                }),
                shift: -0.2,
            }),
        ]
    }

    #[test]
    fn lse_gradient_matches_finite_differences() {
        let agg = logsumexp_aggregate(&smooth_family()).unwrap();
        assert!(agg.is_smooth());
        for x in [[0.1, 0.2], [-0.4, 0.9], [0.8, -0.3], [0.0, 0.0]] {
            let fd = finite_diff_grad(agg.as_ref(), &x, 1e-6);
            assert!(relative_error(&agg.subgrad(&x), &fd) <= 1e-5);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn lse_sandwich(x in proptest::collection::vec(-1.0f64..1.0, 2)) {
                let gs = smooth_family();
                let mx = gs.iter().map(|g| g.eval(&x)).fold(f64::NEG_INFINITY, f64::max);
                let lse = logsumexp_aggregate(&gs).unwrap().eval(&x);
                prop_assert!(mx <= lse + 1e-15);
                prop_assert!(lse <= mx + (gs.len() as f64).ln() + 1e-15);
            }

            #[test]
            fn lse_gradient_bound(x in proptest::collection::vec(-1.0f64..1.0, 2)) {
                // On the unit ball every ‖∂g_i‖ ≤ 1.5.
                let gs = smooth_family();
                let g_bound = 1.5;
                let grad = logsumexp_aggregate(&gs).unwrap().subgrad(&x);
                prop_assert!(grad.norm() <= (gs.len() as f64).sqrt() * g_bound);
            }

            #[test]
            fn max_nonpositive_iff_all_feasible(x in proptest::collection::vec(-1.0f64..1.0, 2)) {
                let gs = smooth_family();
                let agg = max_aggregate(&gs).unwrap();
                prop_assert_eq!(agg.eval(&x) <= 0.0, gs.iter().all(|g| g.eval(&x) <= 0.0));
            }
        }
    }
}
