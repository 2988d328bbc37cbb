//! Partial-barrier distributed gradient descent for quadratic-kernel ridge
//! regression.
//!
//! The master broadcasts θ to `M` simulated workers, keeps the first γ
//! replies of each round and abandons the rest. γ comes from a
//! finite-population sample-size estimate. [`diagnostics`] checks the
//! convergence analysis numerically against the closed-form optimum.

// `!(a <= b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod synth;
mod vecops;

pub use cluster::{assign_shards, Cluster, ClusterSpec, LatencyModel, RoundOutcome, WorkerState};
pub use dataset::{Dataset, Example};
pub use error::{Error, Result};
pub use model::{compute_bounds, feature_dim, kernel_map, DataBounds, ModelSpec, ParamVector};
pub use solver::{GammaPolicy, IterationRecord, SolverConfig, StepSize, Trace};

pub mod linalg {
    //! Dense vector helpers shared with downstream crates.
    pub use crate::vecops::{axpy, dist, dot, norm, norm_sq};
}
