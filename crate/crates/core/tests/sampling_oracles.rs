mod common;

use pbgd_core::sampling::{
    brute_force_sample_variance, coverage_probe, estimate_gamma, inverse_normal_cdf, normal_cdf,
    required_sample_size, sample_mean_variance, ConfidenceSpec, Population,
};
use proptest::prelude::*;
use rand::Rng;

use common::rng;

#[test]
fn variance_formula_matches_enumeration() {
    let mut r = rng(10);
    for big_n in 2..=12 {
        for trial in 0..20 {
            let scale = 1.0 + trial as f64;
            let values: Vec<f64> = (0..big_n).map(|_| r.random_range(-scale..scale)).collect();
            let pop = Population::new(values).unwrap();
            for n in 1..=big_n {
                let formula = sample_mean_variance(big_n, n, pop.variance()).unwrap();
                let brute = brute_force_sample_variance(&pop, n).unwrap();
                assert!(
                    (formula - brute).abs() <= 1e-12 * (1.0 + pop.variance()),
                    "N={big_n} n={n}: {formula} vs {brute}"
                );
            }
        }
    }
}

#[test]
fn inverse_normal_round_trips_on_grid() {
    // Log-spaced lower tail, linear middle, mirrored upper tail.
    let mut grid: Vec<f64> = (0..=50).map(|i| 10f64.powf(-6.0 + 5.0 * i as f64 / 50.0)).collect();
    grid.extend((1..100).map(|i| 0.1 + 0.8 * i as f64 / 100.0));
    let upper: Vec<f64> = grid.iter().map(|p| 1.0 - p).collect();
    grid.extend(upper);
    for p in grid {
        let u = inverse_normal_cdf(p).unwrap();
        assert!((normal_cdf(u) - p).abs() <= 1e-9, "p={p}: u={u}");
    }
}

#[test]
fn estimate_gamma_high_precision() {
    // u_{0.025} to 16 digits: 1.959963984540054
    let u: f64 = 1.959_963_984_540_054;
    let value = 10_000.0 * u * u / ((0.05f64.powi(2) * 10_000.0 + u * u) * 100.0);
    assert!((value - 13.3193).abs() < 1e-3, "{value}");
    assert_eq!(estimate_gamma(10_000, 0.05, 0.05, 100).unwrap(), value.ceil() as usize);

    let n = 10_000.0 * u * u / (0.05f64.powi(2) * 10_000.0 + u * u);
    assert!((n - 1331.93).abs() < 1e-2, "{n}");
    let spec = ConfidenceSpec::new(0.05, 0.05, 0.05).unwrap();
    assert_eq!(required_sample_size(10_000, &spec, 1.0).unwrap(), n.ceil() as usize);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn sample_size_monotone(
        big_n in 1usize..50_000,
        delta in 1e-4f64..10.0,
        bump in 1.0f64..4.0,
        s2 in 1e-3f64..100.0,
    ) {
        let spec = ConfidenceSpec::new(0.05, 0.1, delta).unwrap();
        let wider = ConfidenceSpec::new(0.05, 0.1, delta * bump).unwrap();
        let base = required_sample_size(big_n, &spec, s2).unwrap();
        prop_assert!(required_sample_size(big_n, &wider, s2).unwrap() <= base);
        prop_assert!(required_sample_size(big_n, &spec, s2 * bump).unwrap() >= base);
        prop_assert!((1..=big_n).contains(&base));
    }

    #[test]
    fn gamma_covers_required_sample(
        big_n in 1usize..100_000,
        zeta in 1usize..500,
        alpha in 0.01f64..0.5,
        xi in 0.01f64..0.5,
        s in 0.1f64..10.0,
        excess in 1.0f64..5.0,
    ) {
        // Population with |mean| >= s.
        let _mean = s * excess;
        let spec = ConfidenceSpec::new(alpha, xi, xi * s).unwrap();
        let n = required_sample_size(big_n, &spec, s * s).unwrap();
        let gamma = estimate_gamma(big_n, alpha, xi, zeta).unwrap();
        prop_assert!(gamma * zeta >= n, "gamma={} zeta={} n={}", gamma, zeta, n);
        prop_assert!(gamma >= 1 && gamma <= big_n.div_ceil(zeta));
    }
}

fn uniform_population(seed: u64, size: usize) -> Population {
    let mut r = rng(seed);
    Population::new((0..size).map(|_| r.random::<f64>()).collect()).unwrap()
}

#[test]
fn coverage_meets_confidence_level() {
    let pop = uniform_population(20, 2000);
    for delta in [0.005, 0.01, 0.02] {
        let spec = ConfidenceSpec::new(0.05, 0.05, delta).unwrap();
        let n = required_sample_size(pop.len(), &spec, pop.s2()).unwrap();
        let cov = coverage_probe(&pop, n, delta, 10_000, 21).unwrap();
        assert!(cov >= 1.0 - 0.05 - 0.03, "delta={delta} n={n}: {cov}");
    }
}

#[test]
fn coverage_non_decreasing_in_sample_size() {
    let pop = uniform_population(30, 500);
    let mut prev = 0.0;
    for n in [10, 25, 50, 100, 200, 400, 500] {
        let cov = coverage_probe(&pop, n, 0.02, 4000, 31).unwrap();
        assert!(cov + 0.05 >= prev, "n={n}: {cov} after {prev}");
        prev = cov;
    }
}
