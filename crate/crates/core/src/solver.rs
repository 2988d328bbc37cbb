//! The round-based protocol.
//!
//! Workers return `B_j = (1/ζ) Σ_{i∈shard_j} (θᵀK[x_i] − y_i) K[x_i] + λθ`.
//! The master waits for γ of them and applies `θ ← θ − (η/γ) Σ_j B_j`, which
//! is one step on the γζ responding examples. Every round starts from the
//! freshest θ; late replies are dropped.

use crate::cluster::{Cluster, ClusterSpec};
use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};
use crate::model::{self, feature_dim, DataBounds, ParamVector};
use crate::sampling;
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `1 / (λ + max_i ‖K[x_i]‖²)`, see [`default_eta`].
    Default,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaPolicy {
    /// Wait for every worker.
    Full,
    Explicit(usize),
    /// Derive γ from the confidence-based estimate with `N = m`.
    Algorithm1 { alpha: f64, xi: f64 },
}

impl GammaPolicy {
    pub fn resolve(&self, m: usize, workers: usize) -> Result<usize> {
        if workers == 0 || !m.is_multiple_of(workers) {
            return Err(Error::UnevenShards { examples: m, workers });
        }
        let gamma = match *self {
            GammaPolicy::Full => workers,
            GammaPolicy::Explicit(g) => g,
            GammaPolicy::Algorithm1 { alpha, xi } => {
                sampling::estimate_gamma(m, alpha, xi, m / workers)?.min(workers)
            }
        };
        if gamma == 0 || gamma > workers {
            return Err(Error::invalid(format!("gamma must lie in 1..={workers}, got {gamma}")));
        }
        Ok(gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub eta: StepSize,
    pub t_max: usize,
    /// Stop once the full-gradient norm falls to this value.
    pub tol: f64,
    pub gamma: GammaPolicy,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if let StepSize::Constant(eta) = self.eta {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!("eta must be positive, got {eta}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    pub fn resolve_eta(&self, bounds: &DataBounds) -> f64 {
        match self.eta {
            StepSize::Default => default_eta(bounds, self.lambda),
            StepSize::Constant(eta) => eta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// Cumulative simulated seconds.
    pub sim_time: f64,
    pub theta: ParamVector,
    pub objective: f64,
    /// Norm of the full-data update direction at `theta`.
    pub grad_norm: f64,
    /// Responders of the round that produced `theta`; empty for `t = 0`.
    pub responders: Vec<usize>,
    pub round_duration: f64,
    /// `(1/γ) Σ_j B_j` of the round that produced `theta`.
    pub aggregate: Option<Vec<f64>>,
    pub dist_to_opt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub gamma: usize,
    pub eta: f64,
    pub lambda: f64,
}

impl Trace {
    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("trace always holds the initial record")
    }

    pub fn iterations(&self) -> usize {
        self.last().t
    }

    pub fn sim_time(&self) -> f64 {
        self.last().sim_time
    }

    /// True if the run stopped because θ stopped being finite.
    pub fn diverged(&self) -> bool {
        !self.last().theta.is_finite()
    }

    /// The update direction used to go from record `t` to record `t + 1`.
    pub fn step_direction(&self, t: usize) -> Option<&[f64]> {
        self.records.get(t + 1)?.aggregate.as_deref()
    }
}

/// One worker's reply: [`model::gradient`] over its shard.
pub fn worker_step(theta: &[f64], shard: &[Example], lambda: f64) -> Result<Vec<f64>> {
    model::gradient(theta, shard, lambda)
}

/// `θ − (η/γ) Σ payloads`, summing in the given (arrival) order.
pub fn master_update(theta: &[f64], payloads: &[Vec<f64>], eta: f64, gamma: usize) -> Result<ParamVector> {
    if gamma == 0 || payloads.len() != gamma {
        return Err(Error::invalid(format!(
            "expected {gamma} payloads, got {}",
            payloads.len()
        )));
    }
    let sum = sum_payloads(theta.len(), payloads)?;
    let scale = eta / gamma as f64;
    Ok(theta
        .iter()
        .zip(&sum)
        .map(|(t, s)| t - scale * s)
        .collect::<Vec<_>>()
        .into())
}

fn sum_payloads(l: usize, payloads: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; l];
    for p in payloads {
        if p.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: p.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    Ok(sum)
}

pub fn default_eta(bounds: &DataBounds, lambda: f64) -> f64 {
    1.0 / (lambda + bounds.lip_hat)
}

pub fn has_converged(record: &IterationRecord, cfg: &SolverConfig) -> bool {
    record.grad_norm <= cfg.tol || record.t >= cfg.t_max
}

fn make_record(
    t: usize,
    sim_time: f64,
    theta: ParamVector,
    data: &Dataset,
    lambda: f64,
    theta_star: Option<&ParamVector>,
) -> Result<IterationRecord> {
    let objective = model::objective(&theta, data.examples(), lambda)?;
    let grad = model::gradient(&theta, data.examples(), lambda)?;
    Ok(IterationRecord {
        t,
        sim_time,
        objective,
        grad_norm: vecops::norm(&grad),
        dist_to_opt: theta_star.map(|s| theta.dist(s)),
        theta,
        responders: Vec::new(),
        round_duration: 0.0,
        aggregate: None,
    })
}

/// Runs the protocol from θ⁰ = 0 on a freshly built cluster.
pub fn run(
    data: &Dataset,
    cluster: &ClusterSpec,
    cfg: &SolverConfig,
    seed: u64,
    theta_star: Option<&ParamVector>,
) -> Result<Trace> {
    let cluster = Cluster::new(data, cluster, seed)?;
    run_with_cluster(cluster, cfg, theta_star)
}

pub fn run_with_cluster(
    mut cluster: Cluster<'_>,
    cfg: &SolverConfig,
    theta_star: Option<&ParamVector>,
) -> Result<Trace> {
    cfg.validate()?;
    let data = cluster.data();
    let gamma = cfg.gamma.resolve(data.m(), cluster.len())?;
    let eta = cfg.resolve_eta(&model::compute_bounds(data));
    let lambda = cfg.lambda;

    let theta0 = ParamVector::zeros(feature_dim(data.n()));
    let mut records = vec![make_record(0, 0.0, theta0, data, lambda, theta_star)?];

    loop {
        let last = records.last().expect("non-empty");
        if has_converged(last, cfg) || !last.theta.is_finite() {
            break;
        }
        let t = last.t + 1;
        let at = |source: Error| Error::AtIteration {
            iteration: t,
            source: Box::new(source),
        };
        let outcome = cluster.simulate_round(&last.theta, gamma, lambda).map_err(at)?;
        let next = master_update(&last.theta, &outcome.payloads, eta, gamma).map_err(at)?;
        let mut aggregate = sum_payloads(next.len(), &outcome.payloads).map_err(at)?;
        for a in &mut aggregate {
            *a /= gamma as f64;
        }

        let mut record = make_record(t, cluster.clock(), next, data, lambda, theta_star).map_err(at)?;
        record.responders = outcome.responders;
        record.round_duration = outcome.round_duration;
        record.aggregate = Some(aggregate);
        records.push(record);
    }

    Ok(Trace {
        records,
        gamma,
        eta,
        lambda,
    })
}
