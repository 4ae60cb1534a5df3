//! Synthetic smooth strongly convex test problems with known optimum.
//!
//! [`Quadratic`] is `f(x) = 1/2 (x - x*)^T A (x - x*)` with the spectrum of
//! `A` pinned to `[mu, L]`. [`FiniteSumQuadratic`] splits it into `n` linear
//! tilts `f_i(x) = f(x) - b_i^T (x - x*)` with `sum_i b_i = 0`, so the mean
//! of the components is exactly `f` and every component gradient differs
//! from the full gradient by the constant `-b_i`.

use nalgebra::DMatrix;

use crate::error::{require_positive, Error, Result};
use crate::numerics::{dot_unchecked, gaussian_vector, RngStream, Vector};

/// Radius of the ball the optimum is drawn from.
pub const OPTIMUM_RADIUS: f64 = 10.0;

/// Anything the two-point estimator can query.
///
/// `gradient` is a diagnostic oracle. The zeroth-order update rules never
/// read it; it feeds estimator residual checks and trajectory statistics.
pub trait SmoothFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vector;

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vector) {
        (self.value(x), self.gradient(x))
    }
}

/// An `L`-smooth, `mu`-strongly convex function with known minimizer.
pub trait Objective: SmoothFunction {
    fn smoothness(&self) -> f64;
    fn strong_convexity(&self) -> f64;
    fn optimum_point(&self) -> &Vector;
    fn optimum_value(&self) -> f64;
}

/// `f(x) = (1/n) sum_i f_i(x)` with uniformly bounded gradient noise.
pub trait StochasticObjective: Sync {
    type Base: Objective;

    fn base(&self) -> &Self::Base;
    fn num_components(&self) -> usize;
    fn component_value(&self, index: usize, x: &[f64]) -> f64;
    fn component_gradient(&self, index: usize, x: &[f64]) -> Vector;
    /// `sigma` with `||grad f(x) - grad f_i(x)|| <= sigma` for all `i, x`.
    fn noise_bound(&self) -> f64;

    /// `e = grad f(x) - grad f_i(x)`.
    fn gradient_noise(&self, index: usize, x: &[f64]) -> Vector {
        let mut e = self.base().gradient(x);
        e.axpy(-1.0, &self.component_gradient(index, x));
        e
    }

    /// View of component `index` as a standalone function.
    fn component(&self, index: usize) -> Result<Component<'_, Self>>
    where
        Self: Sized,
    {
        if index >= self.num_components() {
            return Err(Error::Index { index, len: self.num_components() });
        }
        Ok(Component { parent: self, index })
    }
}

/// One summand `f_i` of a [`StochasticObjective`].
#[derive(Debug, Clone, Copy)]
pub struct Component<'a, S> {
    parent: &'a S,
    index: usize,
}

impl<S: StochasticObjective> SmoothFunction for Component<'_, S> {
    fn dim(&self) -> usize {
        self.parent.base().dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.parent.component_value(self.index, x)
    }

    fn gradient(&self, x: &[f64]) -> Vector {
        self.parent.component_gradient(self.index, x)
    }
}

/// `f(x) = 1/2 (x - x*)^T A (x - x*)`, `f* = 0`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    /// Row-major symmetric `A`.
    hessian: Vec<f64>,
    eigenvalues: Vec<f64>,
    optimum: Vector,
    mu: f64,
    smoothness: f64,
}

impl Quadratic {
    /// Builds `A = Q diag(eigenvalues) Q^T` from an orthogonal `Q` (row-major).
    fn from_spectrum(eigenvalues: Vec<f64>, q: &DMatrix<f64>, optimum: Vector, mu: f64, smoothness: f64) -> Self {
        let d = eigenvalues.len();
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eigenvalues.clone()));
        let a = q * lambda * q.transpose();
        let mut hessian = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                // Symmetrize explicitly so rounding cannot make A asymmetric.
                hessian[i * d + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
            }
        }
        Quadratic { dim: d, hessian, eigenvalues, optimum, mu, smoothness }
    }

    /// Axis-aligned quadratic `1/2 sum_i lambda_i (x_i - x*_i)^2`.
    pub fn diagonal(eigenvalues: Vec<f64>, optimum: Vector) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if eigenvalues.len() != optimum.dim() {
            return Err(Error::DimensionMismatch {
                expected: eigenvalues.len(),
                got: optimum.dim(),
            });
        }
        for &l in &eigenvalues {
            require_positive("eigenvalue", l)?;
        }
        let q = DMatrix::identity(eigenvalues.len(), eigenvalues.len());
        let mu = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let smoothness = eigenvalues.iter().copied().fold(0.0, f64::max);
        Ok(Self::from_spectrum(eigenvalues, &q, optimum, mu, smoothness))
    }

    /// Eigenvalues of `A`, in construction order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Entry `(i, j)` of `A`.
    pub fn hessian_entry(&self, i: usize, j: usize) -> f64 {
        self.hessian[i * self.dim + j]
    }

    /// `A (x - x*)` written into `out`; returns `1/2 (x - x*)^T A (x - x*)`.
    ///
    /// Computing both in one pass lets callers get `f` and `grad f` for the
    /// price of a single matrix-vector product.
    pub fn value_and_gradient_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let d = self.dim;
        let y: Vec<f64> = x.iter().zip(self.optimum.iter()).map(|(a, b)| a - b).collect();
        let mut quad = 0.0;
        for i in 0..d {
            let row = &self.hessian[i * d..(i + 1) * d];
            let ay = dot_unchecked(row, &y);
            out[i] = ay;
            quad += y[i] * ay;
        }
        0.5 * quad
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim;
        let y: Vec<f64> = x.iter().zip(self.optimum.iter()).map(|(a, b)| a - b).collect();
        // Symmetric form: half the multiplications of y^T A y.
        let mut diag = 0.0;
        let mut off = 0.0;
        for i in 0..d {
            let row = &self.hessian[i * d..(i + 1) * d];
            diag += row[i] * y[i] * y[i];
            off += y[i] * dot_unchecked(&row[i + 1..], &y[i + 1..]);
        }
        0.5 * diag + off
    }

    fn gradient(&self, x: &[f64]) -> Vector {
        let mut g = vec![0.0; self.dim];
        self.value_and_gradient_into(x, &mut g);
        Vector::from_vec(g)
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vector) {
        let mut g = vec![0.0; self.dim];
        let f = self.value_and_gradient_into(x, &mut g);
        (f, Vector::from_vec(g))
    }
}

impl Objective for Quadratic {
    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn optimum_point(&self) -> &Vector {
        &self.optimum
    }

    fn optimum_value(&self) -> f64 {
        0.0
    }
}

fn check_problem(d: usize, mu: f64, smoothness: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    require_positive("mu", mu)?;
    require_positive("L", smoothness)?;
    if mu > smoothness {
        return Err(Error::param("mu", format!("mu = {mu} exceeds L = {smoothness}")));
    }
    Ok(())
}

/// Random quadratic with spectrum exactly spanning `[mu, L]`.
///
/// `A = Q diag(lambda) Q^T` with `Q` from the QR factorization of a Gaussian
/// matrix. The eigenvalues are log-uniform on `[mu, L]` with the first set
/// to `mu` and the last to `L` (for `d = 1` the single eigenvalue is `mu`).
/// The optimum is uniform in the ball of radius [`OPTIMUM_RADIUS`].
pub fn make_quadratic(d: usize, mu: f64, smoothness: f64, rng: &mut RngStream) -> Result<Quadratic> {
    check_problem(d, mu, smoothness)?;

    let gaussian = DMatrix::from_fn(d, d, |_, _| rng.standard_normal());
    let q = gaussian.qr().q();

    let (lo, hi) = (mu.ln(), smoothness.ln());
    let mut eigenvalues: Vec<f64> = (0..d).map(|_| (lo + (hi - lo) * rng.uniform()).exp()).collect();
    eigenvalues[0] = mu;
    if d >= 2 {
        eigenvalues[d - 1] = smoothness;
    }

    let direction = gaussian_vector(d, rng)?;
    let radius = OPTIMUM_RADIUS * rng.uniform().powf(1.0 / d as f64);
    let optimum = direction.scaled(radius / direction.norm());

    Ok(Quadratic::from_spectrum(eigenvalues, &q, optimum, mu, smoothness))
}

/// Finite sum of linearly tilted copies of one quadratic.
#[derive(Debug, Clone)]
pub struct FiniteSumQuadratic {
    base: Quadratic,
    /// `b_i`; `grad f(x) - grad f_i(x) = b_i`.
    shifts: Vec<Vector>,
    sigma: f64,
}

impl FiniteSumQuadratic {
    /// Wraps `base` with explicit tilts. The tilts must sum to zero (up to
    /// rounding) and `sigma` must bound their norms.
    pub fn new(base: Quadratic, shifts: Vec<Vector>, sigma: f64) -> Result<Self> {
        if shifts.len() < 2 {
            return Err(Error::param("n_components", "need at least 2 components"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", format!("must be nonnegative, got {sigma}")));
        }
        let d = base.dim();
        let mut total = vec![0.0; d];
        for b in &shifts {
            if b.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: b.dim() });
            }
            if b.norm() > sigma * (1.0 + 1e-12) {
                return Err(Error::param("sigma", format!("tilt norm {} exceeds sigma {sigma}", b.norm())));
            }
            for (t, v) in total.iter_mut().zip(b.iter()) {
                *t += v;
            }
        }
        let scale = shifts.iter().map(|b| b.norm()).sum::<f64>().max(1.0);
        if total.iter().any(|t| t.abs() > 1e-12 * scale) {
            return Err(Error::param("shifts", "tilts must sum to zero"));
        }
        Ok(FiniteSumQuadratic { base, shifts, sigma })
    }

    /// `b_i = grad f(x) - grad f_i(x)` (constant in `x`).
    pub fn shift(&self, index: usize) -> &Vector {
        &self.shifts[index]
    }

    pub fn shifts(&self) -> &[Vector] {
        &self.shifts
    }
}

impl StochasticObjective for FiniteSumQuadratic {
    type Base = Quadratic;

    fn base(&self) -> &Quadratic {
        &self.base
    }

    fn num_components(&self) -> usize {
        self.shifts.len()
    }

    fn component_value(&self, index: usize, x: &[f64]) -> f64 {
        let b = &self.shifts[index];
        let tilt: f64 = b.iter().zip(x.iter().zip(self.base.optimum.iter())).map(|(bi, (xi, si))| bi * (xi - si)).sum();
        self.base.value(x) - tilt
    }

    fn component_gradient(&self, index: usize, x: &[f64]) -> Vector {
        let mut g = self.base.gradient(x);
        g.axpy(-1.0, &self.shifts[index]);
        g
    }

    fn noise_bound(&self) -> f64 {
        self.sigma
    }

    fn gradient_noise(&self, index: usize, _x: &[f64]) -> Vector {
        self.shifts[index].clone()
    }
}

/// Finite-sum quadratic with `n` components and noise bound `sigma`.
///
/// The tilts are centered Gaussian vectors rescaled so the largest has norm
/// exactly `sigma`; they sum to zero, so the component average is the base
/// function. With `n = 2` this gives `b_1 = -b_2`, `||b_1|| = sigma`.
pub fn make_finite_sum(
    d: usize,
    mu: f64,
    smoothness: f64,
    sigma: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<FiniteSumQuadratic> {
    check_problem(d, mu, smoothness)?;
    if n < 2 {
        return Err(Error::param("n_components", format!("need n >= 2, got {n}")));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be nonnegative, got {sigma}")));
    }
    let base = make_quadratic(d, mu, smoothness, rng)?;

    let mut shifts: Vec<Vec<f64>> = (0..n).map(|_| gaussian_vector(d, rng).map(Vector::into_vec)).collect::<Result<_>>()?;
    let mut mean = vec![0.0; d];
    for b in &shifts {
        for (m, v) in mean.iter_mut().zip(b) {
            *m += v / n as f64;
        }
    }
    for b in shifts.iter_mut() {
        for (v, m) in b.iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let largest = shifts.iter().map(|b| dot_unchecked(b, b).sqrt()).fold(0.0, f64::max);
    let scale = if sigma == 0.0 || largest == 0.0 { 0.0 } else { sigma / largest };
    let shifts: Vec<Vector> = shifts.into_iter().map(|b| Vector::from_vec(b).scaled(scale)).collect();

    Ok(FiniteSumQuadratic { base, shifts, sigma })
}

/// `f(x) - f*`, clamped at zero to absorb rounding.
pub fn suboptimality<O: Objective + ?Sized>(obj: &O, x: &[f64]) -> Result<f64> {
    if x.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), got: x.len() });
    }
    Ok((obj.value(x) - obj.optimum_value()).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_point(d: usize, scale: f64, rng: &mut RngStream) -> Vector {
        gaussian_vector(d, rng).unwrap().scaled(scale)
    }

    #[test]
    fn scalar_case() {
        let q = make_quadratic(1, 2.0, 2.0, &mut RngStream::new(3)).unwrap();
        let xs = q.optimum_point()[0];
        for x in [-3.0, 0.0, 1.5, 7.0] {
            assert_relative_eq!(q.value(&[x]), (x - xs) * (x - xs), max_relative = 1e-14);
            assert_relative_eq!(q.gradient(&[x])[0], 2.0 * (x - xs), max_relative = 1e-14);
        }
    }

    #[test]
    fn spectrum_endpoints_are_exact() {
        let q = make_quadratic(2, 1.0, 4.0, &mut RngStream::new(11)).unwrap();
        let a = DMatrix::from_fn(2, 2, |i, j| q.hessian_entry(i, j));
        let mut eig: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert_relative_eq!(eig[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(eig[1], 4.0, max_relative = 1e-12);

        let q = make_quadratic(12, 0.1, 1.0, &mut RngStream::new(12)).unwrap();
        let a = DMatrix::from_fn(12, 12, |i, j| q.hessian_entry(i, j));
        let eig = a.symmetric_eigen().eigenvalues;
        assert_relative_eq!(eig.min(), 0.1, max_relative = 1e-10);
        assert_relative_eq!(eig.max(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn optimum_is_exact() {
        for seed in 0..5 {
            let q = make_quadratic(15, 0.3, 2.0, &mut RngStream::new(seed)).unwrap();
            let xs = q.optimum_point().clone();
            assert_eq!(q.value(&xs), 0.0);
            assert!(q.gradient(&xs).norm() <= 1e-10);
            assert!(xs.norm() <= OPTIMUM_RADIUS);
            assert_eq!(suboptimality(&q, &xs).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = RngStream::new(0);
        assert!(make_quadratic(0, 1.0, 1.0, &mut rng).is_err());
        assert!(make_quadratic(3, 0.0, 1.0, &mut rng).is_err());
        assert!(make_quadratic(3, -1.0, 1.0, &mut rng).is_err());
        assert!(make_quadratic(3, 2.0, 1.0, &mut rng).is_err());
        assert!(make_finite_sum(3, 0.5, 1.0, 1.0, 1, &mut rng).is_err());
        assert!(make_finite_sum(3, 0.5, 1.0, -1.0, 4, &mut rng).is_err());
    }

    #[test]
    fn bregman_sandwich() {
        let mut rng = RngStream::new(5);
        let q = make_quadratic(8, 0.2, 3.0, &mut rng).unwrap();
        let (l, mu) = (q.smoothness(), q.strong_convexity());
        for _ in 0..1000 {
            let x = random_point(8, 5.0, &mut rng);
            let y = random_point(8, 5.0, &mut rng);
            let fx = q.value(&x);
            let fy = q.value(&y);
            let g = q.gradient(&x);
            let diff: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
            let lin = fx + dot_unchecked(&g, &diff);
            let dist = dot_unchecked(&diff, &diff);
            let slack = 1e-8 * (1.0 + fx.abs());
            assert!(fy <= lin + 0.5 * l * dist + slack);
            assert!(fy >= lin + 0.5 * mu * dist - slack);
        }
    }

    #[test]
    fn suboptimality_examples() {
        let q = Quadratic::diagonal(vec![2.0], Vector::from_vec(vec![3.0])).unwrap();
        assert_eq!(suboptimality(&q, &[4.0]).unwrap(), 1.0);
        assert!(matches!(suboptimality(&q, &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));

        // Against the explicit quadratic form with the dense A.
        let mut rng = RngStream::new(9);
        let q = make_quadratic(6, 0.5, 2.0, &mut rng).unwrap();
        for _ in 0..50 {
            let x = random_point(6, 4.0, &mut rng);
            let y: Vec<f64> = x.iter().zip(q.optimum_point().iter()).map(|(a, b)| a - b).collect();
            let mut direct = 0.0;
            for i in 0..6 {
                for j in 0..6 {
                    direct += y[i] * q.hessian_entry(i, j) * y[j];
                }
            }
            assert_relative_eq!(suboptimality(&q, &x).unwrap(), 0.5 * direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn zero_noise_components_match_base() {
        let mut rng = RngStream::new(21);
        let s = make_finite_sum(5, 0.5, 2.0, 0.0, 7, &mut rng).unwrap();
        for _ in 0..20 {
            let x = random_point(5, 3.0, &mut rng);
            let g = s.base().gradient(&x);
            for i in 0..7 {
                assert_eq!(s.component_gradient(i, &x), g);
            }
        }
    }

    #[test]
    fn two_components_are_symmetric_at_sigma() {
        let mut rng = RngStream::new(8);
        let sigma = 1.7;
        let s = make_finite_sum(4, 0.5, 2.0, sigma, 2, &mut rng).unwrap();
        assert_relative_eq!(s.shift(0).norm(), sigma, max_relative = 1e-12);
        assert_relative_eq!(s.shift(1).norm(), sigma, max_relative = 1e-12);
        for _ in 0..20 {
            let x = random_point(4, 3.0, &mut rng);
            let g = s.base().gradient(&x);
            let worst = (0..2)
                .map(|i| {
                    let gi = s.component_gradient(i, &x);
                    g.iter().zip(gi.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                })
                .fold(0.0, f64::max);
            assert_relative_eq!(worst, sigma, max_relative = 1e-9);
        }
    }

    #[test]
    fn component_average_is_unbiased_and_noise_tight() {
        let mut rng = RngStream::new(4);
        let sigma = 0.8;
        let s = make_finite_sum(6, 0.1, 1.0, sigma, 9, &mut rng).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = random_point(6, 5.0, &mut rng);
            let g = s.base().gradient(&x);
            let mut mean = vec![0.0; 6];
            for i in 0..9 {
                let gi = s.component_gradient(i, &x);
                for (m, v) in mean.iter_mut().zip(gi.iter()) {
                    *m += v / 9.0;
                }
                let gap: f64 = g.iter().zip(gi.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                worst = worst.max(gap);
            }
            let err: f64 = mean.iter().zip(g.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert!(err <= 1e-10 * (1.0 + g.norm()), "mean gradient error {err}");
            // Function values average back as well.
            let fbar: f64 = (0..9).map(|i| s.component_value(i, &x)).sum::<f64>() / 9.0;
            assert_relative_eq!(fbar, s.base().value(&x), max_relative = 1e-10, epsilon = 1e-12);
        }
        assert!(worst >= 0.99 * sigma && worst <= sigma * (1.0 + 1e-12), "worst gap {worst}");
    }

    #[test]
    fn components_are_smooth() {
        let mut rng = RngStream::new(31);
        let s = make_finite_sum(5, 0.2, 1.5, 1.0, 4, &mut rng).unwrap();
        let l = s.base().smoothness();
        for i in 0..4 {
            let c = s.component(i).unwrap();
            for _ in 0..200 {
                let x = random_point(5, 4.0, &mut rng);
                let y = random_point(5, 4.0, &mut rng);
                let diff: Vec<f64> = y.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
                let fx = c.value(&x);
                let bound = fx + dot_unchecked(&c.gradient(&x), &diff) + 0.5 * l * dot_unchecked(&diff, &diff);
                assert!(c.value(&y) <= bound + 1e-8 * (1.0 + fx.abs()));
            }
        }
        assert!(matches!(s.component(4), Err(Error::Index { index: 4, len: 4 })));
    }

    #[test]
    fn value_and_gradient_agree() {
        let mut rng = RngStream::new(77);
        let q = make_quadratic(9, 0.3, 3.0, &mut rng).unwrap();
        let x = random_point(9, 2.0, &mut rng);
        let mut g = vec![0.0; 9];
        let f = q.value_and_gradient_into(&x, &mut g);
        assert_relative_eq!(f, q.value(&x), max_relative = 1e-12);
        assert_eq!(Vector::from_vec(g), q.gradient(&x));
    }
}
