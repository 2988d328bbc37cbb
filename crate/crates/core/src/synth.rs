//! Seeded synthetic data: `y_i = θ_trueᵀK[x_i] + ε_i` with `x_i ~ U[−1, 1]ⁿ`,
//! `θ_true ~ U[−1, 1]ˡ` and `ε_i ~ N(0, noise_sd²)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};
use crate::model::{feature_dim, kernel_map, ParamVector};
use crate::rng::{stream_rng, Stream};
use crate::vecops;

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: Dataset,
    pub theta_true: ParamVector,
}

pub fn gen_data(n: usize, m: usize, seed: u64, noise_sd: f64) -> Result<Synthetic> {
    if n == 0 || m == 0 {
        return Err(Error::invalid(format!("need n >= 1 and m >= 1, got n={n}, m={m}")));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::invalid(format!("noise_sd must be non-negative, got {noise_sd}")));
    }
    let mut rng = stream_rng(seed, Stream::Data);
    let theta_true: Vec<f64> = (0..feature_dim(n))
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    let examples = (0..m)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let eps: f64 = rng.sample(StandardNormal);
            let y = vecops::dot(&theta_true, &kernel_map(&x)) + noise_sd * eps;
            Example::new(x, y)
        })
        .collect();
    Ok(Synthetic {
        data: Dataset::new(examples)?,
        theta_true: theta_true.into(),
    })
}
