//! Discrete-event simulation of one master and `M` workers.
//!
//! Each round the master broadcasts θ; every live worker computes its shard
//! gradient and replies after a random round-trip time. Replies are ordered on
//! a `(time, worker id)` event queue and the master keeps the first γ. The
//! rest are abandoned. All timing is virtual.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::solver::worker_step;

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyModel {
    /// Simulated seconds of compute per example.
    pub base_per_example: f64,
    pub jitter_log_mu: f64,
    pub jitter_log_sigma: f64,
    pub straggle_prob: f64,
    pub straggle_factor: f64,
    /// Probability that a worker never replies in a round.
    pub fail_prob: f64,
    /// One-way message latency.
    pub rtt: f64,
    /// A failed worker stays down for the rest of the run.
    pub permanent_failures: bool,
    /// Fixed per-worker slowdown multipliers; empty means all 1.
    pub worker_speeds: Vec<f64>,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            base_per_example: 1e-3,
            jitter_log_mu: 0.0,
            jitter_log_sigma: 0.25,
            straggle_prob: 0.0,
            straggle_factor: 1.0,
            fail_prob: 0.0,
            rtt: 0.0,
            permanent_failures: false,
            worker_speeds: Vec::new(),
        }
    }
}

impl LatencyModel {
    /// No randomness: every worker takes the same time every round.
    pub fn deterministic(base_per_example: f64) -> Self {
        LatencyModel {
            base_per_example,
            jitter_log_sigma: 0.0,
            ..LatencyModel::default()
        }
    }

    pub fn validate(&self, workers: usize) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be a finite non-negative number, got {v}")))
            }
        };
        prob("straggle_prob", self.straggle_prob)?;
        prob("fail_prob", self.fail_prob)?;
        nonneg("base_per_example", self.base_per_example)?;
        nonneg("rtt", self.rtt)?;
        nonneg("jitter_log_sigma", self.jitter_log_sigma)?;
        if !self.jitter_log_mu.is_finite() {
            return Err(Error::invalid("jitter_log_mu must be finite"));
        }
        if !(self.straggle_factor >= 1.0 && self.straggle_factor.is_finite()) {
            return Err(Error::invalid(format!(
                "straggle_factor must be at least 1, got {}",
                self.straggle_factor
            )));
        }
        if !self.worker_speeds.is_empty() {
            if self.worker_speeds.len() != workers {
                return Err(Error::invalid(format!(
                    "worker_speeds has {} entries for {workers} workers",
                    self.worker_speeds.len()
                )));
            }
            for &s in &self.worker_speeds {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::invalid(format!("worker speed must be positive, got {s}")));
                }
            }
        }
        Ok(())
    }

    fn speed(&self, worker: usize) -> f64 {
        self.worker_speeds.get(worker).copied().unwrap_or(1.0)
    }

    /// Round-trip time for one worker, or `None` if it fails this round.
    /// Always consumes exactly three draws so streams stay aligned.
    fn draw<R: Rng>(&self, worker: usize, zeta: usize, rng: &mut R) -> Option<f64> {
        let fail: f64 = rng.random();
        let straggle: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        if fail < self.fail_prob {
            return None;
        }
        let jitter = (self.jitter_log_mu + self.jitter_log_sigma * z).exp();
        let slow = if straggle < self.straggle_prob {
            self.straggle_factor
        } else {
            1.0
        };
        Some(2.0 * self.rtt + self.base_per_example * zeta as f64 * self.speed(worker) * jitter * slow)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub workers: usize,
    pub latency: LatencyModel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerState {
    pub id: usize,
    /// Index range of this worker's examples in the dataset.
    pub shard: Range<usize>,
}

impl WorkerState {
    pub fn shard<'a>(&self, data: &'a Dataset) -> &'a [Example] {
        &data.examples()[self.shard.clone()]
    }
}

/// Splits the dataset into `workers` contiguous blocks of equal size.
pub fn assign_shards(data: &Dataset, workers: usize) -> Result<Vec<WorkerState>> {
    let m = data.m();
    if workers == 0 || !m.is_multiple_of(workers) {
        return Err(Error::UnevenShards {
            examples: m,
            workers,
        });
    }
    let zeta = m / workers;
    Ok((0..workers)
        .map(|id| WorkerState {
            id,
            shard: id * zeta..(id + 1) * zeta,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    /// Worker ids in arrival order.
    pub responders: Vec<usize>,
    /// Absolute arrival timestamps, parallel to `responders`.
    pub arrival_times: Vec<f64>,
    /// Time from broadcast to the γ-th arrival.
    pub round_duration: f64,
    /// Workers that replied after the barrier released, in arrival order.
    pub abandoned: Vec<usize>,
    /// Workers that did not reply at all this round.
    pub failed: Vec<usize>,
    /// Gradient payloads, parallel to `responders`.
    pub payloads: Vec<Vec<f64>>,
    /// Buffers of abandoned workers. Only filled when the taint marker is
    /// enabled, and then always NaN.
    pub discarded: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arrival {
    time: f64,
    worker: usize,
}

impl Eq for Arrival {}

impl Ord for Arrival {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.worker.cmp(&other.worker))
    }
}

impl PartialOrd for Arrival {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Marker written into abandoned payload buffers.
pub const TAINT: f64 = f64::NAN;

/// Cluster state carried across rounds: the virtual clock, per-worker random
/// streams, and which workers are still alive.
#[derive(Debug, Clone)]
pub struct Cluster<'a> {
    data: &'a Dataset,
    workers: Vec<WorkerState>,
    latency: LatencyModel,
    streams: Vec<ChaCha8Rng>,
    alive: Vec<bool>,
    clock: f64,
    zeta: usize,
    taint_discarded: bool,
}

impl<'a> Cluster<'a> {
    pub fn new(data: &'a Dataset, spec: &ClusterSpec, seed: u64) -> Result<Self> {
        spec.latency.validate(spec.workers)?;
        let workers = assign_shards(data, spec.workers)?;
        let streams = (0..spec.workers)
            .map(|id| stream_rng(seed, Stream::Latency(id)))
            .collect();
        Ok(Cluster {
            data,
            zeta: data.m() / spec.workers,
            alive: vec![true; spec.workers],
            workers,
            latency: spec.latency.clone(),
            streams,
            clock: 0.0,
            taint_discarded: false,
        })
    }

    /// Fill [`RoundOutcome::discarded`] with [`TAINT`] buffers so tests can
    /// check that abandoned results never reach the master.
    pub fn with_taint_marker(mut self, on: bool) -> Self {
        self.taint_discarded = on;
        self
    }

    pub fn workers(&self) -> &[WorkerState] {
        &self.workers
    }

    pub fn len(&self) -> usize {
        self.workers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.workers.is_empty()
    }

    pub fn zeta(&self) -> usize {
        self.zeta
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    /// Draws one round-trip time per worker; `None` marks a failure.
    fn draw_round_trips(&mut self) -> Vec<Option<f64>> {
        let mut trips = Vec::with_capacity(self.workers.len());
        for id in 0..self.workers.len() {
            let draw = self.latency.draw(id, self.zeta, &mut self.streams[id]);
            let trip = if self.alive[id] { draw } else { None };
            if trip.is_none() && self.latency.permanent_failures {
                self.alive[id] = false;
            }
            trips.push(trip);
        }
        trips
    }

    /// Runs one broadcast/collect round and advances the clock.
    pub fn simulate_round(&mut self, theta: &[f64], gamma: usize, lambda: f64) -> Result<RoundOutcome> {
        if gamma == 0 || gamma > self.workers.len() {
            return Err(Error::invalid(format!(
                "gamma must lie in 1..={}, got {gamma}",
                self.workers.len()
            )));
        }
        let trips = self.draw_round_trips();
        let mut outcome = collect_first(&trips, gamma, self.clock)?;
        for &id in &outcome.responders {
            outcome
                .payloads
                .push(worker_step(theta, self.workers[id].shard(self.data), lambda)?);
        }
        if self.taint_discarded {
            outcome.discarded = outcome
                .abandoned
                .iter()
                .map(|_| vec![TAINT; theta.len()])
                .collect();
        }
        self.clock += outcome.round_duration;
        Ok(outcome)
    }
}

/// Orders replies on the event queue and releases the barrier at the γ-th.
/// Payload vectors are left empty.
pub fn collect_first(trips: &[Option<f64>], gamma: usize, clock: f64) -> Result<RoundOutcome> {
    let mut queue = BinaryHeap::new();
    let mut failed = Vec::new();
    for (worker, trip) in trips.iter().enumerate() {
        match trip {
            Some(time) => queue.push(Reverse(Arrival { time: *time, worker })),
            None => failed.push(worker),
        }
    }
    if queue.len() < gamma {
        return Err(Error::Starvation {
            responded: queue.len(),
            required: gamma,
        });
    }

    let mut responders = Vec::with_capacity(gamma);
    let mut arrival_times = Vec::with_capacity(gamma);
    let mut round_duration = 0.0;
    while responders.len() < gamma {
        let Reverse(a) = queue.pop().expect("queue holds at least gamma arrivals");
        responders.push(a.worker);
        arrival_times.push(clock + a.time);
        round_duration = a.time;
    }
    let mut abandoned = Vec::with_capacity(queue.len());
    while let Some(Reverse(a)) = queue.pop() {
        abandoned.push(a.worker);
    }
    Ok(RoundOutcome {
        responders,
        arrival_times,
        round_duration,
        abandoned,
        failed,
        payloads: Vec::with_capacity(gamma),
        discarded: Vec::new(),
    })
}

/// Monte-Carlo estimate of `E[slowest reply] / E[γ-th reply]` for one round.
///
/// Failed workers are left out of both order statistics; trials where fewer
/// than γ workers reply are skipped. Returns 1 if no trial qualifies.
pub fn expected_speedup_probe(
    model: &LatencyModel,
    workers: usize,
    gamma: usize,
    zeta: usize,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    model.validate(workers)?;
    if gamma == 0 || gamma > workers {
        return Err(Error::invalid(format!("gamma must lie in 1..={workers}, got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum_max, mut sum_kth) = (0.0, 0.0);
    let mut times = Vec::with_capacity(workers);
    for _ in 0..trials {
        times.clear();
        times.extend((0..workers).filter_map(|id| model.draw(id, zeta, &mut rng)));
        if times.len() < gamma {
            continue;
        }
        times.sort_by(f64::total_cmp);
        sum_max += times[times.len() - 1];
        sum_kth += times[gamma - 1];
    }
    if sum_kth == 0.0 && sum_max == 0.0 {
        return Ok(1.0);
    }
    Ok(sum_max / sum_kth)
}
