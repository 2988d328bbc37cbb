//! Finite-population sampling statistics.
//!
//! Variance of a without-replacement sample mean, the normal-approximation
//! sample size needed for a confidence interval of half-width Δ, and the
//! worker-count estimate derived from it.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest number of subsets [`brute_force_sample_variance`] will enumerate.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// A finite population with its mean and variance (divisor `N`).
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    values: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl Population {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("population must be non-empty"));
        }
        let (mean, variance) = mean_and_variance(&values);
        Ok(Population {
            values,
            mean,
            variance,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Population variance with divisor `N`.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Variance with divisor `N − 1`, the `s²` of the sample-size formula.
    pub fn s2(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            0.0
        } else {
            self.variance * n as f64 / (n - 1) as f64
        }
    }
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, variance)
}

/// Confidence level inputs with the derived upper α/2 normal quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceSpec {
    pub alpha: f64,
    pub u_half_alpha: f64,
    /// Relative error.
    pub xi: f64,
    /// Absolute error.
    pub delta: f64,
}

impl ConfidenceSpec {
    pub fn new(alpha: f64, xi: f64, delta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(xi > 0.0) {
            return Err(Error::invalid(format!("relative error must be positive, got {xi}")));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid(format!("absolute error must be positive, got {delta}")));
        }
        Ok(ConfidenceSpec {
            alpha,
            u_half_alpha: upper_quantile(alpha)?,
            xi,
            delta,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// `u_{α/2}`, the upper α/2 quantile of the standard normal.
pub fn upper_quantile(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    inverse_normal_cdf(1.0 - alpha / 2.0)
}

/// Variance of the mean of a size-`n` without-replacement sample from `N`
/// elements with population variance `sigma2`: `σ²(N − n) / (n(N − 1))`.
pub fn sample_mean_variance(big_n: usize, n: usize, sigma2: f64) -> Result<f64> {
    if big_n < 2 {
        return Err(Error::invalid(format!("population size must be at least 2, got {big_n}")));
    }
    if n == 0 || n > big_n {
        return Err(Error::invalid(format!("sample size {n} outside 1..={big_n}")));
    }
    if !(sigma2 >= 0.0) {
        return Err(Error::invalid(format!("variance must be non-negative, got {sigma2}")));
    }
    Ok(sigma2 * (big_n - n) as f64 / (n as f64 * (big_n - 1) as f64))
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at each step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Variance of the sample mean over every size-`n` subset, by enumeration.
pub fn brute_force_sample_variance(pop: &Population, n: usize) -> Result<f64> {
    let big_n = pop.len();
    if n == 0 || n > big_n {
        return Err(Error::invalid(format!("sample size {n} outside 1..={big_n}")));
    }
    let count = binomial(big_n, n);
    if count > ENUMERATION_LIMIT {
        return Err(Error::CombinatorialExplosion {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }

    let values = pop.values();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut acc = 0.0;
    loop {
        let mean = idx.iter().map(|&i| values[i]).sum::<f64>() / n as f64;
        let d = mean - pop.mean();
        acc += d * d;

        // Advance to the next combination in lexicographic order.
        let Some(pos) = (0..n).rev().find(|&p| idx[p] < big_n - n + p) else {
            break;
        };
        idx[pos] += 1;
        for q in pos + 1..n {
            idx[q] = idx[q - 1] + 1;
        }
    }
    Ok(acc / count as f64)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation (relative error about 1.15e-9) followed by
/// one Newton step against [`normal_cdf`]. Inputs above 0.5 are reflected so
/// that `inverse_normal_cdf(1 − p) == −inverse_normal_cdf(p)` bit-for-bit
/// whenever `p` is the computed complement.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("probability must lie in (0, 1), got {p}")));
    }
    if p > 0.5 {
        return Ok(-lower_half_quantile(1.0 - p));
    }
    Ok(lower_half_quantile(p))
}

fn lower_half_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let err = normal_cdf(x) - p;
    x - err / normal_pdf(x)
}

fn ceil_clamped(value: f64, hi: usize) -> usize {
    let hi = hi.max(1);
    if !value.is_finite() || value <= 1.0 {
        return 1;
    }
    let c = value.ceil();
    if c >= hi as f64 {
        hi
    } else {
        c as usize
    }
}

/// Smallest sample size whose normal-approximation confidence interval for the
/// mean has half-width `spec.delta`:
/// `ceil(N u² s² / (Δ² N + u² s²))`, clamped to `[1, N]`.
pub fn required_sample_size(big_n: usize, spec: &ConfidenceSpec, s2: f64) -> Result<usize> {
    if big_n == 0 {
        return Err(Error::invalid("population size must be at least 1"));
    }
    if !(spec.delta > 0.0) {
        return Err(Error::invalid(format!("absolute error must be positive, got {}", spec.delta)));
    }
    if !(s2 > 0.0) {
        return Err(Error::invalid(format!("variance must be positive, got {s2}")));
    }
    let n = big_n as f64;
    let u2s2 = spec.u_half_alpha * spec.u_half_alpha * s2;
    let value = n * u2s2 / (spec.delta * spec.delta * n + u2s2);
    Ok(ceil_clamped(value, big_n))
}

fn check_gamma_inputs(big_n: usize, xi: f64, zeta: usize) -> Result<()> {
    if big_n == 0 {
        return Err(Error::invalid("data capacity must be at least 1"));
    }
    if zeta == 0 {
        return Err(Error::invalid("examples per machine must be at least 1"));
    }
    if !(xi > 0.0) {
        return Err(Error::invalid(format!("relative error must be positive, got {xi}")));
    }
    Ok(())
}

/// Least number of workers to wait for:
/// `ceil(N u² / ((ξ² N + u²) ζ))`, clamped to `[1, ceil(N/ζ)]`.
pub fn estimate_gamma(big_n: usize, alpha: f64, xi: f64, zeta: usize) -> Result<usize> {
    check_gamma_inputs(big_n, xi, zeta)?;
    let u = upper_quantile(alpha)?;
    let u2 = u * u;
    let n = big_n as f64;
    let value = n * u2 / ((xi * xi * n + u2) * zeta as f64);
    Ok(ceil_clamped(value, big_n.div_ceil(zeta)))
}

/// Worker count from the sample-size formula with an explicit variance:
/// `Δ = ξ·|mean|`, then `ceil(required_sample_size / ζ)`, clamped like
/// [`estimate_gamma`].
pub fn estimate_gamma_with_variance(
    big_n: usize,
    alpha: f64,
    xi: f64,
    zeta: usize,
    mean: f64,
    s2: f64,
) -> Result<usize> {
    check_gamma_inputs(big_n, xi, zeta)?;
    let spec = ConfidenceSpec::new(alpha, xi, xi * mean.abs())?;
    let n = required_sample_size(big_n, &spec, s2)?;
    Ok(n.div_ceil(zeta).clamp(1, big_n.div_ceil(zeta)))
}

/// Monte-Carlo estimate of `P[|z̄ − Z̄| < Δ]` for size-`n` samples drawn
/// without replacement.
pub fn coverage_probe(pop: &Population, n: usize, delta: f64, trials: usize, seed: u64) -> Result<f64> {
    if n == 0 || n > pop.len() {
        return Err(Error::invalid(format!("sample size {n} outside 1..={}", pop.len())));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = pop.values();
    let mut hits = 0usize;
    let mut picked = Vec::with_capacity(n);
    for _ in 0..trials {
        picked.clear();
        picked.extend(index::sample(&mut rng, pop.len(), n).iter());
        picked.sort_unstable();
        let mean = picked.iter().map(|&i| values[i]).sum::<f64>() / n as f64;
        if (mean - pop.mean()).abs() < delta {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
