//! Numerical checks of the convergence analysis over solver traces.
//!
//! With `H = ΦᵀΦ/m + λI` the full-batch direction is `B(θ) = H(θ − θ*)`, so
//! the strong-convexity gap, the inner-product bound and the contraction
//! inequality can all be evaluated exactly against the closed-form optimum.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{self, DataBounds, ParamVector};
use crate::solver::Trace;
use crate::vecops;

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        })
    }
}

/// Inner product of the full-data direction with the partial aggregate. A
/// positive value means the partial step descends.
pub fn descent_check(full_grad: &[f64], partial_agg: &[f64]) -> Result<f64> {
    same_len(full_grad, partial_agg)?;
    Ok(vecops::dot(full_grad, partial_agg))
}

/// `[f(θ) − f(θ*)] − λ‖θ − θ*‖²`; non-negative when θ* is the optimum.
pub fn strong_convexity_gap(
    theta: &[f64],
    theta_star: &[f64],
    data: &Dataset,
    lambda: f64,
) -> Result<f64> {
    same_len(theta, theta_star)?;
    let f = model::objective(theta, data.examples(), lambda)?;
    let f_star = model::objective(theta_star, data.examples(), lambda)?;
    let d = vecops::dist(theta, theta_star);
    Ok(f - f_star - lambda * d * d)
}

/// `⟨θ* − θ_t, B_t⟩ + (λ/2)‖θ_t − θ*‖²`; non-positive for full-batch `B_t`.
pub fn inner_product_bound_check(
    theta_t: &[f64],
    theta_star: &[f64],
    b_t: &[f64],
    lambda: f64,
) -> Result<f64> {
    same_len(theta_t, theta_star)?;
    same_len(theta_t, b_t)?;
    let diff: Vec<f64> = theta_star.iter().zip(theta_t).map(|(s, t)| s - t).collect();
    Ok(vecops::dot(&diff, b_t) + 0.5 * lambda * vecops::norm_sq(&diff))
}

/// `y·k / (λ·l)`, the iterate-norm ceiling with the feature dimension in the
/// denominator. Only tallied, never asserted.
pub fn theta_norm_bound(bounds: &DataBounds, lambda: f64, l: usize) -> f64 {
    bounds.y_max * bounds.k_max / (lambda * l as f64)
}

/// `y·k / λ`, the asserted iterate-norm ceiling.
pub fn relaxed_theta_norm_bound(bounds: &DataBounds, lambda: f64) -> f64 {
    bounds.y_max * bounds.k_max / lambda
}

/// `C = y·k³/λ + √l·y·k + y·k/l`, the ceiling on ‖B_t‖.
pub fn bt_norm_bound(bounds: &DataBounds, lambda: f64, l: usize) -> f64 {
    let (y, k) = (bounds.y_max, bounds.k_max);
    let l = l as f64;
    y * k.powi(3) / lambda + l.sqrt() * y * k + y * k / l
}

/// Central differences of the objective, step `h·(1 + |θ_j|)` per coordinate.
///
/// This approximates ∇f, which is twice [`model::gradient`].
pub fn finite_diff_gradient(theta: &[f64], data: &Dataset, lambda: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("step must be positive, got {h}")));
    }
    let mut probe = theta.to_vec();
    let mut out = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        let step = h * (1.0 + theta[j].abs());
        probe[j] = theta[j] + step;
        let up = model::objective(&probe, data.examples(), lambda)?;
        probe[j] = theta[j] - step;
        let down = model::objective(&probe, data.examples(), lambda)?;
        probe[j] = theta[j];
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `‖θ_{t+1} − θ*‖ / ‖θ_t − θ*‖`, zero when `θ_t = θ*`.
    pub ratios: Vec<f64>,
    pub fitted_q: f64,
    pub burn_in: usize,
    /// Iterations `t` where the contraction inequality from `t` to `t + 1` failed.
    pub violations: Vec<usize>,
}

impl RateReport {
    /// Fraction of post-burn-in ratios strictly below one.
    pub fn contracting_fraction(&self) -> f64 {
        let tail = &self.ratios[self.burn_in..];
        if tail.is_empty() {
            return 1.0;
        }
        tail.iter().filter(|&&r| r < 1.0).count() as f64 / tail.len() as f64
    }
}

/// Number of leading ratios left out of the rate fit: 10% of them, at least 5,
/// and never all of them.
pub fn default_burn_in(ratios: usize) -> usize {
    let b = (ratios.div_ceil(10)).max(5);
    if b >= ratios {
        0
    } else {
        b
    }
}

/// Geometric mean of the positive, finite ratios after `burn_in`; 0 if none.
pub fn fit_q(ratios: &[f64], burn_in: usize) -> f64 {
    let (sum, count) = ratios[burn_in.min(ratios.len())..]
        .iter()
        .filter(|r| r.is_finite() && **r > 0.0)
        .fold((0.0, 0usize), |(s, c), r| (s + r.ln(), c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).exp()
    }
}

/// Checks `‖θ_{t+1} − θ*‖² ≤ (1 − λη)‖θ_t − θ*‖² + η²C²` along the trace and
/// fits the linear rate.
pub fn contraction_check(
    trace: &Trace,
    theta_star: &ParamVector,
    eta: f64,
    lambda: f64,
    bounds: &DataBounds,
    l: usize,
) -> Result<RateReport> {
    if trace.records.len() < 2 {
        return Err(Error::TraceTooShort(trace.records.len()));
    }
    let c = bt_norm_bound(bounds, lambda, l);
    let dists: Vec<f64> = trace
        .records
        .iter()
        .map(|r| r.theta.dist(theta_star))
        .collect();

    let mut ratios = Vec::with_capacity(dists.len() - 1);
    let mut violations = Vec::new();
    for (t, pair) in dists.windows(2).enumerate() {
        let (d0, d1) = (pair[0], pair[1]);
        let rhs = (1.0 - lambda * eta) * d0 * d0 + eta * eta * c * c;
        let lhs = d1 * d1;
        if !(lhs <= rhs) {
            violations.push(t);
        }
        ratios.push(if d0 == 0.0 { 0.0 } else { d1 / d0 });
    }
    let burn_in = default_burn_in(ratios.len());
    Ok(RateReport {
        fitted_q: fit_q(&ratios, burn_in),
        ratios,
        burn_in,
        violations,
    })
}

/// Per-iteration check values for one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationCheck {
    pub t: usize,
    pub dist_to_opt: f64,
    pub theta_norm: f64,
    /// `‖θ_{t+1} − θ*‖²` and the contraction right-hand side; NaN on the last row.
    pub contraction_lhs: f64,
    pub contraction_rhs: f64,
    /// Inner-product bound with the step direction taken from `θ_t`.
    pub inner_product: f64,
    pub step_norm: f64,
    /// ⟨full direction at θ_t, step direction from θ_t⟩.
    pub descent: f64,
}

/// Evaluates every per-iteration check along `trace`. The final record has no
/// outgoing step, so its step-dependent columns are NaN.
pub fn iteration_checks(
    trace: &Trace,
    data: &Dataset,
    theta_star: &ParamVector,
    bounds: &DataBounds,
) -> Result<Vec<IterationCheck>> {
    let l = theta_star.len();
    let c = bt_norm_bound(bounds, trace.lambda, l);
    let (eta, lambda) = (trace.eta, trace.lambda);
    let mut out = Vec::with_capacity(trace.records.len());
    for (t, rec) in trace.records.iter().enumerate() {
        let d0 = rec.theta.dist(theta_star);
        let mut row = IterationCheck {
            t: rec.t,
            dist_to_opt: d0,
            theta_norm: rec.theta.norm(),
            contraction_lhs: f64::NAN,
            contraction_rhs: f64::NAN,
            inner_product: f64::NAN,
            step_norm: f64::NAN,
            descent: f64::NAN,
        };
        if let (Some(next), Some(step)) = (trace.records.get(t + 1), trace.step_direction(t)) {
            let d1 = next.theta.dist(theta_star);
            row.contraction_lhs = d1 * d1;
            row.contraction_rhs = (1.0 - lambda * eta) * d0 * d0 + eta * eta * c * c;
            row.inner_product = inner_product_bound_check(&rec.theta, theta_star, step, lambda)?;
            row.step_norm = vecops::norm(step);
            let full = model::gradient(&rec.theta, data.examples(), lambda)?;
            row.descent = descent_check(&full, step)?;
        }
        out.push(row);
    }
    Ok(out)
}
