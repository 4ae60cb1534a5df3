//! Two-point random gradient estimators.
//!
//! Given a Gaussian direction `u` and radius `alpha`, the estimate is
//!
//! ```text
//! g(x) = (f(x + alpha u) - f(x - alpha u)) / (2 alpha) * u
//!      = u u^T grad f(x) + beta u
//! ```
//!
//! where the residual `beta` vanishes on quadratics and is bounded by
//! `L alpha ||u||^2 / 2` for any `L`-smooth `f`.

use crate::error::{require_positive, Error, Result};
use crate::numerics::{dot, gaussian_vector, norm_sq, RngStream, Vector};
use crate::objectives::{SmoothFunction, StochasticObjective};

/// Function evaluations consumed by one estimate.
pub const QUERIES_PER_ESTIMATE: u32 = 2;

/// A search direction together with its cached squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSample {
    u: Vector,
    norm_sq: f64,
}

impl DirectionSample {
    pub fn new(u: Vector) -> Self {
        let norm_sq = norm_sq(&u);
        DirectionSample { u, norm_sq }
    }

    /// Draws `u ~ N(0, I_d)`.
    pub fn draw(d: usize, rng: &mut RngStream) -> Result<Self> {
        Ok(Self::new(gaussian_vector(d, rng)?))
    }

    pub fn u(&self) -> &Vector {
        &self.u
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradEstimate {
    pub g: Vector,
    /// The scalar finite-difference quotient multiplying `u`.
    pub quotient: f64,
    pub queries_used: u32,
    pub smoothing: f64,
}

/// Per-trial tally of objective evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryCounter(u64);

impl QueryCounter {
    pub fn record(&mut self, estimate: &GradEstimate) {
        self.0 += u64::from(estimate.queries_used);
    }

    pub fn total(&self) -> u64 {
        self.0
    }
}

fn check_inputs<F: SmoothFunction + ?Sized>(f: &F, x: &[f64], alpha: f64, dir: &DirectionSample) -> Result<()> {
    require_positive("alpha", alpha)?;
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x.len() });
    }
    if dir.u.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: dir.u.dim() });
    }
    Ok(())
}

/// `(f(x + alpha u) - f(x - alpha u)) / (2 alpha)`; exactly two evaluations.
fn difference_quotient<F: SmoothFunction + ?Sized>(f: &F, x: &[f64], alpha: f64, u: &[f64]) -> Result<f64> {
    let mut probe: Vec<f64> = x.iter().zip(u).map(|(xi, ui)| xi + alpha * ui).collect();
    let plus = f.value(&probe);
    for ((p, xi), ui) in probe.iter_mut().zip(x).zip(u) {
        *p = xi - alpha * ui;
    }
    let minus = f.value(&probe);
    if !plus.is_finite() || !minus.is_finite() {
        return Err(Error::Numeric("objective value"));
    }
    let q = (plus - minus) / (2.0 * alpha);
    if !q.is_finite() {
        return Err(Error::Numeric("finite-difference quotient"));
    }
    Ok(q)
}

/// Two-point estimate of `grad f(x)` along `dir`.
pub fn two_point_estimate<F: SmoothFunction + ?Sized>(
    f: &F,
    x: &[f64],
    alpha: f64,
    dir: &DirectionSample,
) -> Result<GradEstimate> {
    check_inputs(f, x, alpha, dir)?;
    let quotient = difference_quotient(f, x, alpha, &dir.u)?;
    Ok(GradEstimate {
        g: dir.u.scaled(quotient),
        quotient,
        queries_used: QUERIES_PER_ESTIMATE,
        smoothing: alpha,
    })
}

/// Two-point estimate using component `component_index` for both queries.
pub fn two_point_estimate_stochastic<S: StochasticObjective>(
    sobj: &S,
    x: &[f64],
    alpha: f64,
    dir: &DirectionSample,
    component_index: usize,
) -> Result<GradEstimate> {
    let component = sobj.component(component_index)?;
    two_point_estimate(&component, x, alpha, dir)
}

/// `beta` in `g = u u^T grad f(x) + beta u`.
pub fn beta_residual<F: SmoothFunction + ?Sized>(f: &F, x: &[f64], alpha: f64, dir: &DirectionSample) -> Result<f64> {
    check_inputs(f, x, alpha, dir)?;
    let quotient = difference_quotient(f, x, alpha, &dir.u)?;
    Ok(quotient - dot(&dir.u, &f.gradient(x))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{make_finite_sum, make_quadratic, Objective};
    use approx::assert_relative_eq;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Constant(usize);

    impl SmoothFunction for Constant {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _: &[f64]) -> f64 {
            3.25
        }
        fn gradient(&self, _: &[f64]) -> Vector {
            Vector::zeros(self.0)
        }
    }

    struct Linear(Vec<f64>);

    impl SmoothFunction for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            dot(&self.0, x).unwrap()
        }
        fn gradient(&self, _: &[f64]) -> Vector {
            Vector::from_vec(self.0.clone())
        }
    }

    struct HalfNormSq;

    impl SmoothFunction for HalfNormSq {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * norm_sq(x)
        }
        fn gradient(&self, x: &[f64]) -> Vector {
            Vector::from_vec(x.to_vec())
        }
    }

    /// `1/2 ||x||^2 + c/4 sum x_i^4`; smooth on any box with `L = 1 + 3 c B^2`.
    struct Quartic(f64);

    impl SmoothFunction for Quartic {
        fn dim(&self) -> usize {
            4
        }
        fn value(&self, x: &[f64]) -> f64 {
            x.iter().map(|v| 0.5 * v * v + 0.25 * self.0 * v.powi(4)).sum()
        }
        fn gradient(&self, x: &[f64]) -> Vector {
            Vector::from_vec(x.iter().map(|v| v + self.0 * v.powi(3)).collect())
        }
    }

    struct Counting<'a, F>(&'a F, AtomicUsize);

    impl<F: SmoothFunction> SmoothFunction for Counting<'_, F> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.1.fetch_add(1, Ordering::Relaxed);
            self.0.value(x)
        }
        fn gradient(&self, x: &[f64]) -> Vector {
            self.0.gradient(x)
        }
    }

    #[test]
    fn constant_gives_zero() {
        let mut rng = RngStream::new(1);
        for alpha in [1e-3, 0.5, 4.0] {
            let dir = DirectionSample::draw(3, &mut rng).unwrap();
            let est = two_point_estimate(&Constant(3), &[1.0, 2.0, 3.0], alpha, &dir).unwrap();
            assert!(est.g.iter().all(|&v| v == 0.0));
            assert_eq!(beta_residual(&Constant(3), &[1.0, 2.0, 3.0], alpha, &dir).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_evaluated_half_norm() {
        let dir = DirectionSample::new(Vector::from_vec(vec![1.0, 1.0]));
        let x = [1.0, 0.0];
        assert_relative_eq!(HalfNormSq.value(&[1.1, 0.1]), 0.61, max_relative = 1e-14);
        assert_relative_eq!(HalfNormSq.value(&[0.9, -0.1]), 0.41, max_relative = 1e-14);
        let est = two_point_estimate(&HalfNormSq, &x, 0.1, &dir).unwrap();
        assert_relative_eq!(est.g[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(est.g[1], 1.0, max_relative = 1e-12);
        assert_eq!(est.queries_used, 2);
        assert_eq!(est.smoothing, 0.1);
    }

    #[test]
    fn orthogonal_direction_on_linear() {
        let dir = DirectionSample::new(Vector::from_vec(vec![0.0, 1.0]));
        let est = two_point_estimate(&Linear(vec![2.0, 0.0]), &[0.3, -0.7], 0.2, &dir).unwrap();
        assert!(est.g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_alpha_and_dims() {
        let dir = DirectionSample::new(Vector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(two_point_estimate(&HalfNormSq, &[0.0, 0.0], 0.0, &dir), Err(Error::Parameter { .. })));
        assert!(matches!(two_point_estimate(&HalfNormSq, &[0.0, 0.0], -1.0, &dir), Err(Error::Parameter { .. })));
        assert!(two_point_estimate(&HalfNormSq, &[0.0], 0.1, &dir).is_err());
        let bad = DirectionSample::new(Vector::from_vec(vec![1.0]));
        assert!(two_point_estimate(&HalfNormSq, &[0.0, 0.0], 0.1, &bad).is_err());
    }

    #[test]
    fn overflow_is_a_numeric_error() {
        let dir = DirectionSample::new(Vector::from_vec(vec![1e200, 1e200]));
        assert!(matches!(two_point_estimate(&HalfNormSq, &[0.0, 0.0], 1e200, &dir), Err(Error::Numeric(_))));
    }

    #[test]
    fn exactly_two_queries() {
        let counting = Counting(&HalfNormSq, AtomicUsize::new(0));
        let mut counter = QueryCounter::default();
        let mut rng = RngStream::new(5);
        for _ in 0..10 {
            let dir = DirectionSample::draw(2, &mut rng).unwrap();
            let est = two_point_estimate(&counting, &[0.5, 0.5], 0.01, &dir).unwrap();
            counter.record(&est);
        }
        assert_eq!(counting.1.load(Ordering::Relaxed), 20);
        assert_eq!(counter.total(), 20);
    }

    #[test]
    fn zero_noise_stochastic_matches_deterministic() {
        let mut rng = RngStream::new(17);
        let s = make_finite_sum(6, 0.2, 2.0, 0.0, 5, &mut rng).unwrap();
        let x = gaussian_vector(6, &mut rng).unwrap();
        for xi in 0..5 {
            let dir = DirectionSample::draw(6, &mut rng).unwrap();
            let a = two_point_estimate_stochastic(&s, &x, 0.05, &dir, xi).unwrap();
            let b = two_point_estimate(s.base(), &x, 0.05, &dir).unwrap();
            assert_eq!(a.g, b.g);
        }
        let dir = DirectionSample::draw(6, &mut rng).unwrap();
        assert!(matches!(
            two_point_estimate_stochastic(&s, &x, 0.05, &dir, 5),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn quadratic_component_is_exact_projection() {
        let mut rng = RngStream::new(23);
        let s = make_finite_sum(7, 0.3, 1.5, 1.0, 6, &mut rng).unwrap();
        for _ in 0..50 {
            let x = gaussian_vector(7, &mut rng).unwrap().scaled(3.0);
            let dir = DirectionSample::draw(7, &mut rng).unwrap();
            let xi = rng.index(6);
            let est = two_point_estimate_stochastic(&s, &x, 0.01, &dir, xi).unwrap();
            let proj = dot(dir.u(), &s.component_gradient(xi, &x)).unwrap();
            for (g, u) in est.g.iter().zip(dir.u().iter()) {
                assert!((g - proj * u).abs() <= 1e-8 * (1.0 + (proj * u).abs()));
            }
        }
    }

    #[test]
    fn stochastic_estimate_is_unbiased() {
        let mut rng = RngStream::new(99);
        let d = 5;
        let s = make_finite_sum(d, 0.3, 1.2, 1.0, 8, &mut rng).unwrap();
        let x = gaussian_vector(d, &mut rng).unwrap();
        let truth = s.base().gradient(&x);
        let n = 100_000;
        let mut sum = vec![0.0; d];
        let mut sum_sq = vec![0.0; d];
        for _ in 0..n {
            let dir = DirectionSample::draw(d, &mut rng).unwrap();
            let xi = rng.index(8);
            let est = two_point_estimate_stochastic(&s, &x, 1e-3, &dir, xi).unwrap();
            for i in 0..d {
                sum[i] += est.g[i];
                sum_sq[i] += est.g[i] * est.g[i];
            }
        }
        let nf = n as f64;
        for i in 0..d {
            let mean = sum[i] / nf;
            let se = ((sum_sq[i] / nf - mean * mean) / nf).sqrt();
            assert!((mean - truth[i]).abs() <= 5.0 * se, "coord {i}: {mean} vs {}", truth[i]);
        }
    }

    #[test]
    fn beta_vanishes_on_quadratics() {
        let mut rng = RngStream::new(3);
        let q = make_quadratic(10, 0.1, 4.0, &mut rng).unwrap();
        for _ in 0..200 {
            let x = gaussian_vector(10, &mut rng).unwrap().scaled(5.0);
            let dir = DirectionSample::draw(10, &mut rng).unwrap();
            let alpha = 10f64.powf(-2.0 + 2.0 * rng.uniform());
            let beta = beta_residual(&q, &x, alpha, &dir).unwrap();
            assert!(beta.abs() <= 1e-9 * q.smoothness() * alpha * dir.norm_sq(), "beta {beta}");
        }
    }

    #[test]
    fn beta_bound_on_quartic() {
        let c = 0.5;
        let f = Quartic(c);
        let mut rng = RngStream::new(12);
        for _ in 0..10_000 {
            let x = gaussian_vector(4, &mut rng).unwrap();
            let dir = DirectionSample::draw(4, &mut rng).unwrap();
            let alpha = 10f64.powf(-3.0 + 3.0 * rng.uniform());
            let reach = x
                .iter()
                .zip(dir.u().iter())
                .map(|(xi, ui)| xi.abs() + alpha * ui.abs())
                .fold(0.0, f64::max);
            let l = 1.0 + 3.0 * c * reach * reach;
            let beta = beta_residual(&f, &x, alpha, &dir).unwrap();
            let bound = 0.5 * l * alpha * dir.norm_sq();
            assert!(beta.abs() <= bound * (1.0 + 1e-9) + 1e-12, "beta {beta} bound {bound}");
        }
    }

    #[test]
    fn decomposition_identity() {
        let f = Quartic(0.3);
        let mut rng = RngStream::new(41);
        for _ in 0..1000 {
            let x = gaussian_vector(4, &mut rng).unwrap();
            let dir = DirectionSample::draw(4, &mut rng).unwrap();
            let alpha = 0.05;
            let est = two_point_estimate(&f, &x, alpha, &dir).unwrap();
            let beta = beta_residual(&f, &x, alpha, &dir).unwrap();
            let coef = dot(dir.u(), &f.gradient(&x)).unwrap() + beta;
            for (g, u) in est.g.iter().zip(dir.u().iter()) {
                assert!((g - coef * u).abs() <= 1e-12 * g.abs().max(1e-300) + 1e-15);
            }
        }
    }

    #[test]
    fn direction_norm_cache() {
        let mut rng = RngStream::new(0);
        let dir = DirectionSample::draw(13, &mut rng).unwrap();
        assert_eq!(dir.norm_sq().to_bits(), norm_sq(dir.u()).to_bits());
    }
}
