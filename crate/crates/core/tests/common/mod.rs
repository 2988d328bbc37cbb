#![allow(dead_code)]

use pbgd_core::{Dataset, Example};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dataset with inputs and targets in [-1, 1] (scaled targets).
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dataset {
    let examples = (0..m)
        .map(|_| {
            let x = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            Example::new(x, rng.random_range(-2.0..2.0))
        })
        .collect();
    Dataset::new(examples).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}
