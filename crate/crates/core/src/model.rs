//! Quadratic-kernel ridge regression.
//!
//! Inputs are lifted by [`kernel_map`] into all degree-2 monomials, the raw
//! coordinates, and a trailing constant. The model is linear in that feature
//! space and fit by minimizing
//!
//! ```text
//! f(θ) = (1/m) Σ_i (θᵀK[x_i] − y_i)² + λ‖θ‖²
//! ```
//!
//! [`gradient`] returns the iteration direction used by the distributed
//! protocol, `(1/|S|) Σ_{i∈S} (θᵀK[x_i] − y_i) K[x_i] + λθ`. That is exactly
//! half of ∇f restricted to `S`; both share the same zero, which is what
//! [`solve_closed_form`] finds.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, Example};
use crate::error::{Error, Result};
use crate::vecops;

/// Length of the feature vector for an `n`-dimensional input.
pub fn feature_dim(n: usize) -> usize {
    n * (n + 1) / 2 + n + 1
}

/// Quadratic feature map.
///
/// Layout: `x_j·x_k` for `j = 1..n`, `k = j..n`; then `x_1..x_n`; then `1`.
pub fn kernel_map(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(feature_dim(x.len()));
    kernel_map_into(x, &mut out);
    out
}

pub fn kernel_map_into(x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for (j, &xj) in x.iter().enumerate() {
        for &xk in &x[j..] {
            out.push(xj * xk);
        }
    }
    out.extend_from_slice(x);
    out.push(1.0);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    lambda: f64,
    n: usize,
    l: usize,
}

impl ModelSpec {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("input dimension must be at least 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(ModelSpec {
            lambda,
            n,
            l: feature_dim(n),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn kernel_map(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        Ok(kernel_map(x))
    }
}

/// Model parameters in feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(l: usize) -> Self {
        ParamVector(vec![0.0; l])
    }

    pub fn new(theta: Vec<f64>) -> Self {
        ParamVector(theta)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        vecops::norm(&self.0)
    }

    pub fn dist(&self, other: &ParamVector) -> f64 {
        vecops::dist(&self.0, &other.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

fn check_dims(theta: &[f64], examples: &[Example]) -> Result<()> {
    if let Some(first) = examples.first() {
        let l = feature_dim(first.x.len());
        if theta.len() != l {
            return Err(Error::DimensionMismatch {
                expected: l,
                actual: theta.len(),
            });
        }
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must be positive, got {lambda}")))
    }
}

/// Regularized least-squares objective over `examples`, summed in index order.
pub fn objective(theta: &[f64], examples: &[Example], lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if examples.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_dims(theta, examples)?;
    let mut feat = Vec::with_capacity(theta.len());
    let mut sum = 0.0;
    for ex in examples {
        kernel_map_into(&ex.x, &mut feat);
        let r = vecops::dot(theta, &feat) - ex.y;
        sum += r * r;
    }
    Ok(sum / examples.len() as f64 + lambda * vecops::norm_sq(theta))
}

/// `(1/|S|) Σ_{i∈S} (θᵀK[x_i] − y_i) K[x_i] + λθ`, summed in index order.
pub fn gradient(theta: &[f64], subset: &[Example], lambda: f64) -> Result<Vec<f64>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    check_dims(theta, subset)?;
    let mut feat = Vec::with_capacity(theta.len());
    let mut acc = vec![0.0; theta.len()];
    for ex in subset {
        kernel_map_into(&ex.x, &mut feat);
        let r = vecops::dot(theta, &feat) - ex.y;
        vecops::axpy(&mut acc, r, &feat);
    }
    let inv = 1.0 / subset.len() as f64;
    for (a, t) in acc.iter_mut().zip(theta) {
        *a = *a * inv + lambda * t;
    }
    Ok(acc)
}

/// Solves `(ΦᵀΦ/m + λI) θ = Φᵀy/m` by Cholesky factorization.
pub fn solve_closed_form(data: &Dataset, lambda: f64) -> Result<ParamVector> {
    check_lambda(lambda)?;
    let l = feature_dim(data.n());
    let m = data.m() as f64;
    let mut gram = DMatrix::<f64>::zeros(l, l);
    let mut rhs = DVector::<f64>::zeros(l);
    let mut feat = Vec::with_capacity(l);
    for ex in data.examples() {
        kernel_map_into(&ex.x, &mut feat);
        for a in 0..l {
            rhs[a] += ex.y * feat[a];
            for b in 0..=a {
                gram[(a, b)] += feat[a] * feat[b];
            }
        }
    }
    for a in 0..l {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    gram /= m;
    rhs /= m;
    for a in 0..l {
        gram[(a, a)] += lambda;
    }

    let condition = || {
        let eig = gram.clone().symmetric_eigenvalues();
        let max = eig.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
        let min = eig.iter().fold(f64::INFINITY, |acc, &v| acc.min(v));
        max / min
    };

    let chol = gram.clone().cholesky().ok_or_else(|| Error::Numerical {
        reason: "normal-equations matrix is not positive definite".into(),
        condition: condition(),
    })?;
    let mut theta = chol.solve(&rhs);
    // One round of iterative refinement against the assembled system.
    let residual = &rhs - &gram * &theta;
    theta += chol.solve(&residual);

    let theta = ParamVector(theta.iter().copied().collect());
    let grad = gradient(&theta, data.examples(), lambda)?;
    let limit = 1e-8 * (1.0 + rhs.norm());
    let gnorm = vecops::norm(&grad);
    if !(gnorm <= limit) {
        return Err(Error::Numerical {
            reason: format!("residual gradient norm {gnorm:.3e} exceeds {limit:.3e}"),
            condition: condition(),
        });
    }
    Ok(theta)
}

/// Data-dependent constants used by the norm bounds and the default step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataBounds {
    /// Largest absolute feature value over the dataset.
    pub k_max: f64,
    /// Largest absolute target.
    pub y_max: f64,
    /// `max_i ‖K[x_i]‖²`, an upper bound on the data-term curvature.
    pub lip_hat: f64,
}

pub fn compute_bounds(data: &Dataset) -> DataBounds {
    let mut bounds = DataBounds {
        k_max: 0.0,
        y_max: 0.0,
        lip_hat: 0.0,
    };
    let mut feat = Vec::new();
    for ex in data.examples() {
        kernel_map_into(&ex.x, &mut feat);
        for v in &feat {
            bounds.k_max = bounds.k_max.max(v.abs());
        }
        bounds.y_max = bounds.y_max.max(ex.y.abs());
        bounds.lip_hat = bounds.lip_hat.max(vecops::norm_sq(&feat));
    }
    bounds
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(x: &[f64], y: f64) -> Example {
        Example::new(x.to_vec(), y)
    }

    #[test]
    fn feature_dim_values() {
        assert_eq!(feature_dim(1), 3);
        assert_eq!(feature_dim(2), 6);
        // Enumerate pairs j <= k directly.
        let pairs = (0..5).flat_map(|j| (j..5).map(move |k| (j, k))).count();
        assert_eq!(feature_dim(5), pairs + 5 + 1);
        assert_eq!(feature_dim(5), 21);
    }

    #[test]
    fn kernel_map_ordering() {
        assert_eq!(kernel_map(&[0.0, 0.0]), vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(kernel_map(&[1.0, 2.0]), vec![1.0, 2.0, 4.0, 1.0, 2.0, 1.0]);
        assert_eq!(kernel_map(&[3.0]), vec![9.0, 3.0, 1.0]);
        // n = 3: x1², x1x2, x1x3, x2², x2x3, x3², x1, x2, x3, 1
        assert_eq!(
            kernel_map(&[2.0, 3.0, 5.0]),
            vec![4.0, 6.0, 10.0, 9.0, 15.0, 25.0, 2.0, 3.0, 5.0, 1.0]
        );
    }

    #[test]
    fn kernel_map_length_and_constant() {
        for n in 1..=8 {
            let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
            let k = kernel_map(&x);
            assert_eq!(k.len(), feature_dim(n));
            assert_eq!(*k.last().unwrap(), 1.0);
        }
    }

    #[test]
    fn model_spec_checks_dimension() {
        let spec = ModelSpec::new(2, 0.5).unwrap();
        assert_eq!(spec.l(), 6);
        assert!(matches!(
            spec.kernel_map(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
        assert!(ModelSpec::new(2, 0.0).is_err());
        assert!(ModelSpec::new(0, 1.0).is_err());
    }

    #[test]
    fn objective_values() {
        assert_eq!(objective(&[0.0; 3], &[ex(&[0.0], 0.0)], 3.0).unwrap(), 0.0);

        let data = [ex(&[1.0], 2.0), ex(&[-0.5], -4.0), ex(&[0.25], 1.0)];
        let want = (4.0 + 16.0 + 1.0) / 3.0;
        assert!((objective(&[0.0; 3], &data, 0.7).unwrap() - want).abs() < 1e-15);

        // residual 9/4 - 3 = -3/4 -> 9/16; penalty 3 * 9/16 = 27/16; total 36/16
        let theta = [0.75; 3];
        let r: f64 = 0.75 * 3.0 - 3.0;
        let by_hand = r * r + 1.0 * 3.0 * 0.75 * 0.75;
        assert_eq!(by_hand, 2.25);
        assert_eq!(objective(&theta, &[ex(&[1.0], 3.0)], 1.0).unwrap(), 2.25);
    }

    #[test]
    fn objective_errors() {
        let data = [ex(&[1.0], 1.0)];
        assert!(matches!(
            objective(&[0.0; 4], &data, 1.0),
            Err(Error::DimensionMismatch { expected: 3, actual: 4 })
        ));
        assert!(objective(&[0.0; 3], &data, 0.0).is_err());
        assert!(matches!(objective(&[0.0; 3], &[], 1.0), Err(Error::EmptySubset)));
    }

    #[test]
    fn gradient_at_zero() {
        assert_eq!(gradient(&[0.0; 3], &[ex(&[0.0], 0.0)], 1.0).unwrap(), vec![0.0; 3]);

        let subset = [ex(&[1.0, 2.0], 3.0), ex(&[-1.0, 0.5], -2.0)];
        let g = gradient(&[0.0; 6], &subset, 9.0).unwrap();
        let want: Vec<f64> = (0..6)
            .map(|a| -(3.0 * kernel_map(&[1.0, 2.0])[a] + -2.0 * kernel_map(&[-1.0, 0.5])[a]) / 2.0)
            .collect();
        for (g, w) in g.iter().zip(&want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!(matches!(gradient(&[0.0; 6], &[], 1.0), Err(Error::EmptySubset)));
    }

    #[test]
    fn closed_form_single_example() {
        let data = Dataset::new(vec![ex(&[1.0], 3.0)]).unwrap();
        let theta = solve_closed_form(&data, 1.0).unwrap();
        for v in theta.iter() {
            assert!((v - 0.75).abs() < 1e-14, "{theta:?}");
        }
        let g = gradient(&theta, data.examples(), 1.0).unwrap();
        assert!(vecops::norm(&g) < 1e-14);
    }

    #[test]
    fn closed_form_zero_targets() {
        let data = Dataset::new(vec![ex(&[0.3, -0.2], 0.0), ex(&[1.0, 0.5], 0.0)]).unwrap();
        let theta = solve_closed_form(&data, 0.1).unwrap();
        assert!(theta.iter().all(|&v| v == 0.0), "{theta:?}");
    }

    #[test]
    fn closed_form_rejects_bad_lambda() {
        let data = Dataset::new(vec![ex(&[1.0], 3.0)]).unwrap();
        assert!(solve_closed_form(&data, -1.0).is_err());
    }

    #[test]
    fn bounds_values() {
        let data = Dataset::new(vec![ex(&[1.0, 2.0], -5.0)]).unwrap();
        let b = compute_bounds(&data);
        assert_eq!(b.k_max, 4.0);
        assert_eq!(b.y_max, 5.0);
        assert_eq!(b.lip_hat, 27.0);

        let zeros = Dataset::new(vec![ex(&[0.0, 0.0], 1.0), ex(&[0.0, 0.0], -2.0)]).unwrap();
        let b = compute_bounds(&zeros);
        assert_eq!(b.k_max, 1.0);
        assert_eq!(b.lip_hat, 1.0);
        assert_eq!(b.y_max, 2.0);
    }
}
