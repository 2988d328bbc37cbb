//! Subcommand implementations. Each returns data and writes files; `main`
//! only parses arguments, prints and maps errors to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use pbgd_core::diagnostics::{self, IterationCheck};
use pbgd_core::model::{self, solve_closed_form};
use pbgd_core::rng::{stream_rng, Stream};
use pbgd_core::sampling::{self, Population};
use pbgd_core::solver::{self, default_eta};
use pbgd_core::synth;
use pbgd_core::{compute_bounds, DataBounds, Dataset, GammaPolicy, ParamVector, SolverConfig, Trace};
use rand::seq::index;
use rand::Rng;

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::style;
use crate::trace;

pub fn gen_data(n: usize, m: usize, seed: u64, noise_sd: f64, out: &Path) -> Result<Dataset> {
    let data = synth::gen_data(n, m, seed, noise_sd)
        .map_err(|e| CliError::Config(e.to_string()))?
        .data;
    data.write_csv(out)?;
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaEstimate {
    pub u_half_alpha: f64,
    pub gamma: usize,
}

/// With `variance = Some((mean, s2))` the explicit-variance sample size is
/// used, with `Δ = ξ·|mean|`.
pub fn estimate_gamma(
    big_n: usize,
    alpha: f64,
    xi: f64,
    zeta: usize,
    variance: Option<(f64, f64)>,
) -> Result<GammaEstimate> {
    let to_cfg = |e: pbgd_core::Error| CliError::Config(e.to_string());
    let u_half_alpha = sampling::upper_quantile(alpha).map_err(to_cfg)?;
    let gamma = match variance {
        None => sampling::estimate_gamma(big_n, alpha, xi, zeta),
        Some((mean, s2)) => sampling::estimate_gamma_with_variance(big_n, alpha, xi, zeta, mean, s2),
    }
    .map_err(to_cfg)?;
    Ok(GammaEstimate { u_half_alpha, gamma })
}

/// Counters summarizing one trace against the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDiagnostics {
    pub descent_positive_fraction: f64,
    pub contraction_violations: usize,
    pub fitted_q: f64,
    pub theta_bound_violations: usize,
}

fn trace_diagnostics(
    trace: &Trace,
    data: &Dataset,
    star: &ParamVector,
    bounds: &DataBounds,
) -> Result<(TraceDiagnostics, Vec<IterationCheck>)> {
    let checks = diagnostics::iteration_checks(trace, data, star, bounds)?;
    let steps = &checks[..checks.len() - 1];
    let positive = steps.iter().filter(|c| c.descent > 0.0).count();
    let ceiling = diagnostics::theta_norm_bound(bounds, trace.lambda, star.len());
    let (violations, fitted_q) = if trace.records.len() >= 2 {
        let rep = diagnostics::contraction_check(trace, star, trace.eta, trace.lambda, bounds, star.len())?;
        (rep.violations.len(), rep.fitted_q)
    } else {
        (0, 0.0)
    };
    Ok((
        TraceDiagnostics {
            descent_positive_fraction: if steps.is_empty() {
                1.0
            } else {
                positive as f64 / steps.len() as f64
            },
            contraction_violations: violations,
            fitted_q,
            theta_bound_violations: checks.iter().filter(|c| !(c.theta_norm <= ceiling)).count(),
        },
        checks,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub gamma: usize,
    pub workers: usize,
    pub eta: f64,
    pub iterations: usize,
    pub sim_time: f64,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub final_dist_to_opt: f64,
    pub diagnostics: TraceDiagnostics,
    pub baseline: Option<BaselineSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSummary {
    pub iterations: usize,
    pub sim_time: f64,
    pub final_objective: f64,
    /// Baseline simulated time over partial-barrier simulated time.
    pub speedup: f64,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let d = &self.diagnostics;
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "sim_time = {}", self.sim_time);
        let _ = writeln!(s, "final_objective = {}", self.final_objective);
        let _ = writeln!(s, "final_grad_norm = {}", self.final_grad_norm);
        let _ = writeln!(s, "final_dist_to_opt = {}", self.final_dist_to_opt);
        let _ = writeln!(s, "descent_positive_fraction = {}", d.descent_positive_fraction);
        let _ = writeln!(s, "contraction_violations = {}", d.contraction_violations);
        let _ = writeln!(s, "fitted_q = {}", d.fitted_q);
        let _ = writeln!(s, "theta_bound_violations = {}", d.theta_bound_violations);
        if let Some(b) = &self.baseline {
            let _ = writeln!(s, "baseline_iterations = {}", b.iterations);
            let _ = writeln!(s, "baseline_sim_time = {}", b.sim_time);
            let _ = writeln!(s, "baseline_final_objective = {}", b.final_objective);
            let _ = writeln!(s, "speedup = {}", b.speedup);
        }
        s
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

pub fn output_dir(exp: &Experiment, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| exp.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn check_finite(trace: &Trace, what: &str) -> Result<()> {
    if trace.diverged() || !trace.last().objective.is_finite() {
        return Err(CliError::Numerical(format!(
            "{what} diverged at iteration {}",
            trace.iterations()
        )));
    }
    Ok(())
}

/// Runs the configured γ (and the γ = M baseline when asked), writing
/// `trace.csv`, `baseline_trace.csv` and `summary.txt` into `out_dir`.
pub fn run_experiment(exp: &Experiment, baseline: bool, out_dir: &Path) -> Result<RunSummary> {
    let data = &exp.data;
    let star = solve_closed_form(data, exp.solver.lambda)?;
    let bounds = compute_bounds(data);
    create_dir(out_dir)?;

    let partial = solver::run(data, &exp.cluster, &exp.solver, exp.seed, Some(&star))?;
    trace::write(&out_dir.join("trace.csv"), &partial)?;
    check_finite(&partial, "run")?;
    let (diag, _) = trace_diagnostics(&partial, data, &star, &bounds)?;

    let baseline = if baseline {
        let cfg = SolverConfig {
            gamma: GammaPolicy::Full,
            ..exp.solver
        };
        let full = solver::run(data, &exp.cluster, &cfg, exp.seed, Some(&star))?;
        trace::write(&out_dir.join("baseline_trace.csv"), &full)?;
        check_finite(&full, "baseline")?;
        Some(BaselineSummary {
            iterations: full.iterations(),
            sim_time: full.sim_time(),
            final_objective: full.last().objective,
            speedup: full.sim_time() / partial.sim_time(),
        })
    } else {
        None
    };

    let last = partial.last();
    let summary = RunSummary {
        gamma: partial.gamma,
        workers: exp.cluster.workers,
        eta: partial.eta,
        iterations: partial.iterations(),
        sim_time: partial.sim_time(),
        final_objective: last.objective,
        final_grad_norm: last.grad_norm,
        final_dist_to_opt: last.dist_to_opt.unwrap_or(f64::NAN),
        diagnostics: diag,
        baseline,
    };
    let path = out_dir.join("summary.txt");
    fs::write(&path, summary.to_text()).map_err(CliError::io(&path))?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// Hard checks decide the exit status; soft ones are reported only.
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.hard && !c.passed)
    }

    pub fn table(&self, color: bool) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  kind  status  detail", "check");
        for c in &self.checks {
            let kind = if c.hard { "hard" } else { "soft" };
            let _ = writeln!(
                s,
                "{:<width$}  {kind}  {}    {}",
                c.name,
                style::status(c.passed, c.hard, color),
                c.detail
            );
        }
        s
    }
}

fn checks_csv(runs: &[(&str, &[IterationCheck])]) -> String {
    let mut s = String::from(
        "run,t,dist_to_opt,theta_norm,contraction_lhs,contraction_rhs,inner_product,step_norm,descent\n",
    );
    for (name, rows) in runs {
        for r in rows.iter() {
            let _ = writeln!(
                s,
                "{name},{},{},{},{},{},{},{},{}",
                r.t,
                r.dist_to_opt,
                r.theta_norm,
                r.contraction_lhs,
                r.contraction_rhs,
                r.inner_product,
                r.step_norm,
                r.descent
            );
        }
    }
    s
}

/// Runs every numerical check, writing `report.txt` and `verify_checks.csv`
/// into `out_dir`.
pub fn verify(exp: &Experiment, out_dir: &Path) -> Result<VerifyReport> {
    let data = &exp.data;
    let lambda = exp.solver.lambda;
    let l = pbgd_core::feature_dim(data.n());
    let mut rng = stream_rng(exp.seed, Stream::Probe);
    let mut checks = Vec::new();
    let mut push = |name, hard, passed, detail: String| {
        checks.push(CheckResult {
            name,
            hard,
            passed,
            detail,
        })
    };

    // Analytic direction against central differences on small random subsets.
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let size = rng.random_range(1..=data.m().min(10));
        let picked: Vec<_> = index::sample(&mut rng, data.m(), size)
            .iter()
            .map(|i| data.examples()[i].clone())
            .collect();
        let subset = Dataset::new(picked)?;
        let theta: Vec<f64> = (0..l).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g: Vec<f64> = model::gradient(&theta, subset.examples(), lambda)?
            .iter()
            .map(|v| 2.0 * v)
            .collect();
        let fd = diagnostics::finite_diff_gradient(&theta, &subset, lambda, 1e-5)?;
        let err = pbgd_core::linalg::dist(&g, &fd) / pbgd_core::linalg::norm(&g).max(1e-300);
        worst = worst.max(err);
    }
    push("gradient-vs-finite-differences", true, worst <= 1e-6, format!("max rel. error {worst:.2e} (limit 1e-6)"));

    // Without-replacement variance against full enumeration.
    let mut worst = 0.0f64;
    for big_n in 2..=12usize {
        for _ in 0..20 {
            let values: Vec<f64> = (0..big_n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let pop = Population::new(values)?;
            for n in 1..=big_n {
                let formula = sampling::sample_mean_variance(big_n, n, pop.variance())?;
                let brute = sampling::brute_force_sample_variance(&pop, n)?;
                worst = worst.max((formula - brute).abs() / (1.0 + pop.variance()));
            }
        }
    }
    push("sample-variance-enumeration", true, worst <= 1e-12, format!("max scaled error {worst:.2e} (limit 1e-12)"));

    let star = solve_closed_form(data, lambda)?;
    let bounds = compute_bounds(data);

    let mut min_gap = f64::INFINITY;
    for _ in 0..1000 {
        let theta: Vec<f64> = star.iter().map(|s| s + rng.random_range(-3.0..3.0)).collect();
        min_gap = min_gap.min(diagnostics::strong_convexity_gap(&theta, &star, data, lambda)?);
    }
    push("strong-convexity-gap", true, min_gap >= -1e-10, format!("min gap {min_gap:.3e} over 1000 points"));

    let full_cfg = SolverConfig {
        gamma: GammaPolicy::Full,
        ..exp.solver
    };
    let full = solver::run(data, &exp.cluster, &full_cfg, exp.seed, Some(&star))?;
    let eta = full.eta;
    // The bounds below are only claimed for steps no larger than the default.
    let in_regime = eta <= default_eta(&bounds, lambda) * (1.0 + 1e-12);
    let (full_diag, full_checks) = trace_diagnostics(&full, data, &star, &bounds)?;

    let increases = full
        .records
        .windows(2)
        .filter(|w| !(w[1].objective <= w[0].objective + 1e-14 * w[0].objective.abs()))
        .count();
    push(
        "full-batch-monotone-objective",
        true,
        increases == 0 && !full.diverged(),
        format!(
            "{increases} increases over {} iterations{}",
            full.iterations(),
            if full.diverged() { ", diverged" } else { "" }
        ),
    );

    let steps = &full_checks[..full_checks.len() - 1];
    let worst_ip = steps.iter().map(|c| c.inner_product).fold(f64::NEG_INFINITY, nan_max);
    let ip_ok = steps.iter().all(|c| c.inner_product <= 1e-10);
    push("full-batch-inner-product-bound", true, ip_ok, format!("max {worst_ip:.3e} (limit 1e-10)"));

    push(
        "full-batch-contraction",
        in_regime,
        full_diag.contraction_violations == 0,
        format!("{} violations over {} steps", full_diag.contraction_violations, steps.len()),
    );
    let q = full_diag.fitted_q;
    push("full-batch-rate", in_regime, q > 0.0 && q < 1.0, format!("fitted q = {q:.6}, 1 - λη = {:.6}", 1.0 - lambda * eta));

    let c = diagnostics::bt_norm_bound(&bounds, lambda, l);
    let worst_step = steps.iter().map(|s| s.step_norm).fold(f64::NEG_INFINITY, nan_max);
    push(
        "full-batch-step-norm-bound",
        in_regime,
        steps.iter().all(|s| s.step_norm <= c),
        format!("max ‖B_t‖ {worst_step:.4} vs bound {c:.4}"),
    );

    let relaxed = diagnostics::relaxed_theta_norm_bound(&bounds, lambda);
    let worst_theta = full_checks.iter().map(|s| s.theta_norm).fold(f64::NEG_INFINITY, nan_max);
    push(
        "full-batch-theta-norm-bound",
        in_regime,
        full_checks.iter().all(|s| s.theta_norm <= relaxed),
        format!("max ‖θ_t‖ {worst_theta:.4} vs yk/λ = {relaxed:.4}"),
    );
    push(
        "full-batch-theta-norm-l-divided",
        false,
        full_diag.theta_bound_violations == 0,
        format!(
            "{} of {} iterates above yk/(λl) = {:.4}",
            full_diag.theta_bound_violations,
            full_checks.len(),
            diagnostics::theta_norm_bound(&bounds, lambda, l)
        ),
    );
    let final_dist = full.last().dist_to_opt.unwrap_or(f64::NAN);
    push("full-batch-distance-to-optimum", false, final_dist <= 1e-6, format!("‖θ_T − θ*‖ = {final_dist:.3e}"));

    let partial = solver::run(data, &exp.cluster, &exp.solver, exp.seed, Some(&star))?;
    let (part_diag, part_checks) = trace_diagnostics(&partial, data, &star, &bounds)?;
    let alpha = match exp.solver.gamma {
        GammaPolicy::Algorithm1 { alpha, .. } => alpha,
        _ => 0.05,
    };
    push(
        "partial-descent-frequency",
        false,
        part_diag.descent_positive_fraction >= 1.0 - alpha - 0.05,
        format!(
            "gamma = {}: {:.3} of steps descend",
            partial.gamma, part_diag.descent_positive_fraction
        ),
    );
    push(
        "partial-contraction",
        false,
        part_diag.contraction_violations == 0,
        format!("{} violations, fitted q = {:.6}", part_diag.contraction_violations, part_diag.fitted_q),
    );
    let part_steps = &part_checks[..part_checks.len() - 1];
    let above = part_steps.iter().filter(|c| !(c.inner_product <= 0.0)).count();
    push(
        "partial-inner-product-bound",
        false,
        above == 0,
        format!("{above} of {} steps above zero", part_steps.len()),
    );

    let report = VerifyReport { checks };
    create_dir(out_dir)?;
    let path = out_dir.join("report.txt");
    fs::write(&path, report.table(false)).map_err(CliError::io(&path))?;
    let path = out_dir.join("verify_checks.csv");
    fs::write(&path, checks_csv(&[("full", &full_checks), ("partial", &part_checks)]))
        .map_err(CliError::io(&path))?;
    Ok(report)
}

/// `max` that lets NaN win, so a poisoned value shows up in the detail column.
fn nan_max(acc: f64, v: f64) -> f64 {
    if v.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}
