mod common;

use pbgd_core::diagnostics::finite_diff_gradient;
use pbgd_core::linalg::{dist, norm};
use pbgd_core::model::{gradient, objective, solve_closed_form};
use pbgd_core::{compute_bounds, feature_dim, kernel_map, Dataset};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::{random_dataset, random_vec, rng};

/// `gradient` is half of ∇f, so compare `2·gradient` with central differences.
fn fd_relative_error(theta: &[f64], data: &Dataset, lambda: f64) -> f64 {
    let g: Vec<f64> = gradient(theta, data.examples(), lambda)
        .unwrap()
        .iter()
        .map(|v| 2.0 * v)
        .collect();
    let fd = finite_diff_gradient(theta, data, lambda, 1e-5).unwrap();
    dist(&g, &fd) / norm(&g).max(1e-300)
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(1);
    for _ in 0..50 {
        let n = r.random_range(1..=3);
        let m = r.random_range(1..=10);
        let data = random_dataset(&mut r, n, m);
        let lambda = r.random_range(0.01..2.0);
        let theta = random_vec(&mut r, feature_dim(n), 2.0);
        let err = fd_relative_error(&theta, &data, lambda);
        assert!(err <= 1e-6, "n={n} m={m}: {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_fd_property(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=10, lambda in 0.01f64..2.0) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, n, m);
        let theta = random_vec(&mut r, feature_dim(n), 2.0);
        prop_assert!(fd_relative_error(&theta, &data, lambda) <= 1e-6);
    }

    #[test]
    fn objective_permutation_invariant(seed in any::<u64>(), n in 1usize..=3, m in 2usize..=20) {
        let mut r = rng(seed);
        let data = random_dataset(&mut r, n, m);
        let theta = random_vec(&mut r, feature_dim(n), 1.5);
        let mut shuffled = data.examples().to_vec();
        shuffled.shuffle(&mut r);
        let a = objective(&theta, data.examples(), 0.3).unwrap();
        let b = objective(&theta, &shuffled, 0.3).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn kernel_map_shape(x in proptest::collection::vec(-10.0f64..10.0, 1..=8)) {
        let k = kernel_map(&x);
        prop_assert_eq!(k.len(), feature_dim(x.len()));
        prop_assert_eq!(*k.last().unwrap(), 1.0);
    }
}

#[test]
fn closed_form_minimizes_objective() {
    let mut r = rng(2);
    for instance in 0..5 {
        let n = 1 + instance % 3;
        let data = random_dataset(&mut r, n, 12);
        let lambda = 0.05 + 0.2 * instance as f64;
        let star = solve_closed_form(&data, lambda).unwrap();
        let f_star = objective(&star, data.examples(), lambda).unwrap();
        for _ in 0..1000 {
            let theta = random_vec(&mut r, feature_dim(n), 3.0);
            assert!(f_star <= objective(&theta, data.examples(), lambda).unwrap());
        }
    }
}

#[test]
fn closed_form_zeroes_gradient_on_random_instance() {
    let mut r = rng(3);
    let data = random_dataset(&mut r, 2, 8);
    let star = solve_closed_form(&data, 0.1).unwrap();
    let g = gradient(&star, data.examples(), 0.1).unwrap();
    assert!(norm(&g) <= 1e-8, "{}", norm(&g));
}

#[test]
fn bounds_match_independent_scan() {
    let mut r = rng(4);
    for _ in 0..10 {
        let n = r.random_range(1..=4);
        let data = random_dataset(&mut r, n, 25);
        let b = compute_bounds(&data);
        // Second pass: build every feature by hand from the monomial definition.
        let (mut k, mut y, mut lip) = (0.0f64, 0.0f64, 0.0f64);
        for ex in data.examples() {
            let mut feats = Vec::new();
            for j in 0..n {
                for i in j..n {
                    feats.push(ex.x[j] * ex.x[i]);
                }
            }
            feats.extend(&ex.x);
            feats.push(1.0);
            k = feats.iter().fold(k, |acc, v| acc.max(v.abs()));
            y = y.max(ex.y.abs());
            lip = lip.max(feats.iter().map(|v| v * v).sum());
        }
        assert_eq!(b.k_max, k);
        assert_eq!(b.y_max, y);
        assert!((b.lip_hat - lip).abs() <= 1e-14 * lip);
    }
}

#[test]
fn gen_data_recovers_truth() {
    let s = pbgd_core::synth::gen_data(2, 1000, 2024, 0.1).unwrap();
    let star = solve_closed_form(&s.data, 1e-4).unwrap();
    let err = star.dist(&s.theta_true);
    assert!(err <= 0.15, "{err}");
}

#[test]
fn gen_data_noiseless_near_interpolation() {
    let s = pbgd_core::synth::gen_data(2, 200, 9, 0.0).unwrap();
    let lambda = 1e-9;
    let star = solve_closed_form(&s.data, lambda).unwrap();
    let f = objective(&star, s.data.examples(), lambda).unwrap();
    assert!(f < 1e-6, "{f}");
}
