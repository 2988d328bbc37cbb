//! Run configuration: one TOML document, unknown keys rejected.
//!
//! ```toml
//! seed = 7                      # root seed for every random stream
//! output_dir = "out"            # optional, relative to this file; --out wins
//!
//! [dataset]                     # exactly one of `path` or `[dataset.synthetic]`
//! path = "data.csv"
//!
//! [dataset.synthetic]
//! n = 2
//! m = 1000
//! noise_sd = 0.1
//! seed = 11                     # optional, defaults to the root seed
//!
//! [cluster]
//! workers = 50
//! zeta = 20                     # optional, must equal m / workers
//! base_per_example = 0.001      # latency fields are optional
//! jitter_log_mu = 0.0
//! jitter_log_sigma = 0.25
//! straggle_prob = 0.1
//! straggle_factor = 10.0
//! fail_prob = 0.0
//! rtt = 0.0
//! permanent_failures = false
//! worker_speeds = []
//!
//! [solver]
//! lambda = 0.1
//! eta = 0.05                    # optional, defaults to 1 / (lambda + max ‖K[x]‖²)
//! t_max = 20000
//! tol = 2e-3
//!
//! [gamma]
//! policy = "algorithm1"         # "full" | "explicit" (with `value`) | "algorithm1"
//! alpha = 0.05
//! xi = 0.05
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use pbgd_core::synth::gen_data;
use pbgd_core::{ClusterSpec, Dataset, GammaPolicy, LatencyModel, SolverConfig, StepSize};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetConfig,
    pub cluster: ClusterConfig,
    pub solver: SolverSection,
    pub gamma: GammaSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    pub m: usize,
    pub noise_sd: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub workers: usize,
    pub zeta: Option<usize>,
    pub base_per_example: Option<f64>,
    pub jitter_log_mu: Option<f64>,
    pub jitter_log_sigma: Option<f64>,
    pub straggle_prob: Option<f64>,
    pub straggle_factor: Option<f64>,
    pub fail_prob: Option<f64>,
    pub rtt: Option<f64>,
    pub permanent_failures: Option<bool>,
    pub worker_speeds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub lambda: f64,
    pub eta: Option<f64>,
    pub t_max: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Full,
    Explicit,
    Algorithm1,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSection {
    pub policy: PolicyKind,
    pub value: Option<usize>,
    pub alpha: Option<f64>,
    pub xi: Option<f64>,
}

/// A validated configuration with its dataset loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub data: Dataset,
    pub cluster: ClusterSpec,
    pub solver: SolverConfig,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => bad(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn latency(&self) -> LatencyModel {
        let d = LatencyModel::default();
        let c = &self.cluster;
        LatencyModel {
            base_per_example: c.base_per_example.unwrap_or(d.base_per_example),
            jitter_log_mu: c.jitter_log_mu.unwrap_or(d.jitter_log_mu),
            jitter_log_sigma: c.jitter_log_sigma.unwrap_or(d.jitter_log_sigma),
            straggle_prob: c.straggle_prob.unwrap_or(d.straggle_prob),
            straggle_factor: c.straggle_factor.unwrap_or(d.straggle_factor),
            fail_prob: c.fail_prob.unwrap_or(d.fail_prob),
            rtt: c.rtt.unwrap_or(d.rtt),
            permanent_failures: c.permanent_failures.unwrap_or(d.permanent_failures),
            worker_speeds: c.worker_speeds.clone().unwrap_or_default(),
        }
    }

    fn gamma_policy(&self) -> Result<GammaPolicy> {
        let g = &self.gamma;
        match g.policy {
            PolicyKind::Full => {
                if g.value.is_some() || g.alpha.is_some() || g.xi.is_some() {
                    return Err(bad("gamma policy `full` takes no parameters"));
                }
                Ok(GammaPolicy::Full)
            }
            PolicyKind::Explicit => {
                if g.alpha.is_some() || g.xi.is_some() {
                    return Err(bad("gamma policy `explicit` takes only `value`"));
                }
                let v = g.value.ok_or_else(|| bad("gamma policy `explicit` needs `value`"))?;
                Ok(GammaPolicy::Explicit(v))
            }
            PolicyKind::Algorithm1 => {
                if g.value.is_some() {
                    return Err(bad("gamma policy `algorithm1` takes `alpha` and `xi`, not `value`"));
                }
                let alpha = g.alpha.ok_or_else(|| bad("gamma policy `algorithm1` needs `alpha`"))?;
                let xi = g.xi.ok_or_else(|| bad("gamma policy `algorithm1` needs `xi`"))?;
                Ok(GammaPolicy::Algorithm1 { alpha, xi })
            }
        }
    }

    /// Validates every section and loads or generates the dataset. Relative
    /// paths resolve against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Experiment> {
        let data = match (&self.dataset.path, &self.dataset.synthetic) {
            (Some(_), Some(_)) => return Err(bad("dataset: give either `path` or `synthetic`, not both")),
            (None, None) => return Err(bad("dataset: one of `path` or `synthetic` is required")),
            (Some(path), None) => {
                let full = base_dir.join(path);
                if !full.exists() {
                    return Err(bad(format!("dataset path {} does not exist", full.display())));
                }
                Dataset::read_csv(&full).map_err(|e| match e {
                    pbgd_core::Error::Io { .. } => CliError::from(e),
                    other => bad(other.to_string()),
                })?
            }
            (None, Some(s)) => {
                gen_data(s.n, s.m, s.seed.unwrap_or(self.seed), s.noise_sd)
                    .map_err(|e| bad(format!("dataset.synthetic: {e}")))?
                    .data
            }
        };

        let workers = self.cluster.workers;
        if workers == 0 || !data.m().is_multiple_of(workers) {
            return Err(bad(format!(
                "cluster: {} examples cannot be split evenly across {workers} workers",
                data.m()
            )));
        }
        if let Some(zeta) = self.cluster.zeta {
            if zeta * workers != data.m() {
                return Err(bad(format!(
                    "cluster: workers * zeta = {} but the dataset has {} examples",
                    zeta * workers,
                    data.m()
                )));
            }
        }
        let latency = self.latency();
        latency
            .validate(workers)
            .map_err(|e| bad(format!("cluster: {e}")))?;

        let solver = SolverConfig {
            lambda: self.solver.lambda,
            eta: self.solver.eta.map_or(StepSize::Default, StepSize::Constant),
            t_max: self.solver.t_max,
            tol: self.solver.tol,
            gamma: self.gamma_policy()?,
        };
        solver.validate().map_err(|e| bad(format!("solver: {e}")))?;
        solver
            .gamma
            .resolve(data.m(), workers)
            .map_err(|e| bad(format!("gamma: {e}")))?;

        Ok(Experiment {
            seed: self.seed,
            output_dir: self.output_dir.as_ref().map(|p| base_dir.join(p)),
            data,
            cluster: ClusterSpec { workers, latency },
            solver,
        })
    }
}

/// The built-in configuration used when no `--config` is given. Kept small
/// so `verify` finishes in seconds.
pub const DEFAULT_CONFIG: &str = r#"
seed = 7

[dataset.synthetic]
n = 2
m = 200
noise_sd = 0.1

[cluster]
workers = 10
jitter_log_sigma = 0.25
straggle_prob = 0.1
straggle_factor = 10.0

[solver]
lambda = 0.1
t_max = 20000
tol = 2e-3

[gamma]
policy = "algorithm1"
alpha = 0.05
xi = 0.05
"#;

/// Loads `path`, or the built-in default, and applies a seed override.
pub fn load_experiment(path: Option<&Path>, seed_override: Option<u64>) -> Result<Experiment> {
    let (mut cfg, base) = match path {
        Some(p) => (
            RunConfig::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (RunConfig::parse(DEFAULT_CONFIG)?, PathBuf::from(".")),
    };
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    cfg.resolve(&base)
}
