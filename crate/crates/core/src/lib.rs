//! Online convex optimization with long-term constraints.
//!
//! Primal-dual online gradient methods that keep cumulative constraint
//! violation small while competing with the best fixed feasible decision:
//! Clipped-OGD (fixed step, closed-form clipped dual), its strongly convex
//! variant, and two primal-dual baselines, together with the experiment
//! problems, an offline comparator and the metrics used to check the
//! regret/violation scaling laws.

pub mod aggregation;
pub mod algorithms;
pub mod convex;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod primitives;
pub mod problems;
pub mod rng;
pub mod trace_io;
pub mod validation;

pub use error::{OcoError, Result};
pub use primitives::{BallDomain, DecisionVector};
