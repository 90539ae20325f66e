//! Dense vectors, the Euclidean ball domain and positive clipping.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{OcoError, Result};

/// A dense real decision vector.
///
/// Entries are in problem units (MW for the dispatch problem, matrix entries
/// flattened row-major for the doubly-stochastic problem).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn new(entries: Vec<f64>) -> Self {
        DecisionVector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        DecisionVector(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &[f64]) {
        debug_assert_eq!(self.0.len(), other.len());
        for (s, o) in self.0.iter_mut().zip(other) {
            *s += a * o;
        }
    }

    pub fn scaled(&self, a: f64) -> DecisionVector {
        DecisionVector(self.0.iter().map(|v| a * v).collect())
    }

    pub fn sub(&self, other: &[f64]) -> DecisionVector {
        DecisionVector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }
}

impl Deref for DecisionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DecisionVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DecisionVector {
    fn from(v: Vec<f64>) -> Self {
        DecisionVector(v)
    }
}

impl<const N: usize> From<[f64; N]> for DecisionVector {
    fn from(v: [f64; N]) -> Self {
        DecisionVector(v.to_vec())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The centered Euclidean ball `{x : ‖x‖₂ ≤ radius}` that every iterate is
/// projected onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallDomain {
    radius: f64,
    dim: usize,
}

impl BallDomain {
    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(OcoError::InvalidParameter(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        if dim == 0 {
            return Err(OcoError::InvalidParameter(
                "ball dimension must be ≥ 1".into(),
            ));
        }
        Ok(BallDomain { radius, dim })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        norm(x) <= self.radius
    }

    pub fn center(&self) -> DecisionVector {
        DecisionVector::zeros(self.dim)
    }
}

/// Euclidean projection onto the ball: `x` itself when inside, otherwise the
/// radial rescaling `x · R/‖x‖`.
pub fn project_ball(x: &[f64], dom: &BallDomain) -> Result<DecisionVector> {
    if x.len() != dom.dim {
        return Err(OcoError::DimensionMismatch {
            expected: dom.dim,
            got: x.len(),
        });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(OcoError::NonFinite {
            context: "ball projection input".into(),
        });
    }
    let n = norm(x);
    if n <= dom.radius {
        return Ok(DecisionVector(x.to_vec()));
    }
    let scale = dom.radius / n;
    let mut out: Vec<f64> = x.iter().map(|v| v * scale).collect();
    // Rounding in the rescale can leave the norm a few ulps above R.
    while norm(&out) > dom.radius {
        out.iter_mut().for_each(|v| *v *= 1.0 - f64::EPSILON);
    }
    Ok(DecisionVector(out))
}

/// `[v]_+ = max(0, v)`.
#[inline]
pub fn clip_pos(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(r: f64, n: usize) -> BallDomain {
        BallDomain::new(r, n).unwrap()
    }

    #[test]
    fn interior_point_unchanged() {
        let p = project_ball(&[0.3, 0.4], &ball(1.0, 2)).unwrap();
        assert_eq!(&*p, &[0.3, 0.4]);
    }

    #[test]
    fn exterior_point_scaled_onto_sphere() {
        let p = project_ball(&[3.0, 4.0], &ball(1.0, 2)).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15);
        assert!((p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn origin_is_fixed() {
        let p = project_ball(&[0.0, 0.0], &ball(5.0, 2)).unwrap();
        assert_eq!(&*p, &[0.0, 0.0]);
    }

    #[test]
    fn projection_rejects_non_finite_and_bad_dim() {
        assert!(matches!(
            project_ball(&[f64::NAN, 0.0], &ball(1.0, 2)),
            Err(OcoError::NonFinite { .. })
        ));
        assert!(matches!(
            project_ball(&[f64::INFINITY, 0.0], &ball(1.0, 2)),
            Err(OcoError::NonFinite { .. })
        ));
        assert!(matches!(
            project_ball(&[1.0], &ball(1.0, 2)),
            Err(OcoError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ball_requires_positive_radius() {
        assert!(BallDomain::new(0.0, 2).is_err());
        assert!(BallDomain::new(-1.0, 2).is_err());
        assert!(BallDomain::new(f64::NAN, 2).is_err());
    }

    #[test]
    fn clip_pos_cases() {
        assert_eq!(clip_pos(-2.5), 0.0);
        assert_eq!(clip_pos(0.0), 0.0);
        assert_eq!(clip_pos(1.7), 1.7);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-50.0f64..50.0, 3)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(2000))]

            #[test]
            fn projection_is_idempotent(x in vec3(), r in 0.1f64..20.0) {
                let dom = ball(r, 3);
                let p = project_ball(&x, &dom).unwrap();
                let pp = project_ball(&p, &dom).unwrap();
                for (a, b) in p.iter().zip(pp.iter()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
                prop_assert!(p.norm() <= r);
            }

            #[test]
            fn projection_is_nonexpansive(x in vec3(), y in vec3(), r in 0.1f64..20.0) {
                let dom = ball(r, 3);
                let px = project_ball(&x, &dom).unwrap();
                let py = project_ball(&y, &dom).unwrap();
                let lhs = norm(&px.sub(&py));
                let rhs = norm(&DecisionVector::new(x.clone()).sub(&y));
                prop_assert!(lhs <= rhs + 1e-12);
            }
        }
    }
}
