//! Zeroth-order gradient descent (deterministic and stochastic).
//!
//! Both loops draw `u_t ~ N(0, I_d)`, form the two-point estimate and step
//! with a size normalized by `||u_t||^2`:
//!
//! * GD:  `eta_t = 1 / (4 L ||u_t||^2)`
//! * SGD: `eta_t = 2 d / (mu (t + T0) ||u_t||^2)`, with one component
//!   `xi_t` drawn uniformly per step and used for both queries.
//!
//! The update itself touches only function values. The gradient oracle is
//! read after the fact to fill the per-step [`DirectionStats`].

use crate::error::{require_positive, Error, Result};
use crate::estimators::{two_point_estimate, two_point_estimate_stochastic, DirectionSample, QueryCounter};
use crate::numerics::{dot_unchecked, RngStream, Vector};
use crate::objectives::{suboptimality, Objective, SmoothFunction, StochasticObjective};

/// Algorithm-1 run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoGdConfig {
    pub iterations: usize,
    pub alpha: f64,
    pub x0: Vector,
    pub seed: u64,
}

/// Algorithm-2 run parameters; `warmup_offset` is `T0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoSgdConfig {
    pub iterations: usize,
    pub warmup_offset: f64,
    pub alpha: f64,
    pub x0: Vector,
    pub seed: u64,
}

/// What the direction of step `t` saw, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionStats {
    /// `||u_t||^2`.
    pub norm_sq: f64,
    /// `u_t^T grad f(x_t)`.
    pub projection: f64,
    /// `||grad f(x_t)||^2`.
    pub grad_norm_sq: f64,
    /// Stochastic runs only: `u_t^T e_t` with `e_t = grad f(x_t) - grad f(x_t; xi_t)`.
    pub noise_projection: Option<f64>,
    /// Stochastic runs only: the sampled component `xi_t`.
    pub component: Option<usize>,
}

impl DirectionStats {
    /// `zeta_t = (u^T g)^2 / (||u||^2 ||g||^2)`; `None` when `grad f(x_t) = 0`.
    pub fn zeta(&self) -> Option<f64> {
        if self.grad_norm_sq > 0.0 && self.norm_sq > 0.0 {
            let z = self.projection * self.projection / (self.norm_sq * self.grad_norm_sq);
            Some(z.min(1.0))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `Delta_0 ..= Delta_T`.
    pub suboptimality: Vec<f64>,
    /// `eta_0 .. eta_{T-1}`.
    pub step_sizes: Vec<f64>,
    pub direction_stats: Vec<DirectionStats>,
    pub total_queries: u64,
    pub seed: u64,
    pub final_point: Vector,
}

impl Trajectory {
    pub fn iterations(&self) -> usize {
        self.step_sizes.len()
    }

    pub fn initial_suboptimality(&self) -> f64 {
        self.suboptimality[0]
    }

    pub fn final_suboptimality(&self) -> f64 {
        *self.suboptimality.last().expect("trajectory always holds Delta_0")
    }

    /// `zeta_t` per step, `None` where undefined.
    pub fn zetas(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.direction_stats.iter().map(DirectionStats::zeta)
    }

    /// Right-hand side of the per-path contraction certificate for GD:
    ///
    /// ```text
    /// exp(-c sum_t zeta_t) Delta_0 + (L alpha^2 / 16) sum_k exp(-c sum_{t>k} zeta_t) ||u_k||^2
    /// ```
    ///
    /// with `c = mu / (8 L)`. Undefined `zeta_t` contribute nothing.
    pub fn contraction_bound(&self, smoothness: f64, mu: f64, alpha: f64) -> f64 {
        let c = mu / (8.0 * smoothness);
        let mut suffix = 0.0;
        let mut alpha_term = 0.0;
        for stats in self.direction_stats.iter().rev() {
            alpha_term += (-c * suffix).exp() * stats.norm_sq;
            suffix += stats.zeta().unwrap_or(0.0);
        }
        (-c * suffix).exp() * self.initial_suboptimality() + smoothness * alpha * alpha / 16.0 * alpha_term
    }
}

/// `1 / (4 L ||u||^2)`.
pub fn step_size_gd(smoothness: f64, norm_sq_u: f64) -> Result<f64> {
    require_positive("L", smoothness)?;
    require_positive("norm_sq_u", norm_sq_u)?;
    Ok(1.0 / (4.0 * smoothness * norm_sq_u))
}

/// `2 d / (mu (t + T0) ||u||^2)`.
pub fn step_size_sgd(d: usize, mu: f64, t: usize, warmup_offset: f64, norm_sq_u: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    require_positive("mu", mu)?;
    require_positive("T0", warmup_offset)?;
    require_positive("norm_sq_u", norm_sq_u)?;
    Ok(2.0 * d as f64 / (mu * (t as f64 + warmup_offset) * norm_sq_u))
}

/// Draws a direction, retrying once if `||u||^2` underflows to zero.
fn draw_direction(d: usize, rng: &mut RngStream, iteration: usize) -> Result<DirectionSample> {
    for _ in 0..2 {
        let dir = DirectionSample::draw(d, rng)?;
        if dir.norm_sq() > 0.0 {
            return Ok(dir);
        }
    }
    Err(Error::NonFinite { iteration, what: "direction with zero norm" })
}

fn at_iteration(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Numeric(what) => Error::NonFinite { iteration, what },
        other => other,
    }
}

fn check_start<O: Objective + ?Sized>(obj: &O, x0: &Vector, alpha: f64) -> Result<()> {
    require_positive("alpha", alpha)?;
    if x0.dim() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), got: x0.dim() });
    }
    if !x0.is_finite() {
        return Err(Error::param("x0", "must be finite"));
    }
    Ok(())
}

/// Runs zeroth-order gradient descent with `eta_t = 1 / (4 L ||u_t||^2)`.
pub fn run_zo_gd<O: Objective + ?Sized>(obj: &O, cfg: &ZoGdConfig) -> Result<Trajectory> {
    check_start(obj, &cfg.x0, cfg.alpha)?;
    let d = obj.dim();
    let smoothness = obj.smoothness();
    let f_star = obj.optimum_value();
    let mut rng = RngStream::new(cfg.seed);
    let mut queries = QueryCounter::default();

    let mut x = cfg.x0.clone();
    let (f0, mut grad) = obj.value_and_gradient(&x);
    let mut suboptimality = Vec::with_capacity(cfg.iterations + 1);
    suboptimality.push((f0 - f_star).max(0.0));
    let mut step_sizes = Vec::with_capacity(cfg.iterations);
    let mut direction_stats = Vec::with_capacity(cfg.iterations);

    for t in 0..cfg.iterations {
        let dir = draw_direction(d, &mut rng, t)?;
        let est = two_point_estimate(obj, &x, cfg.alpha, &dir).map_err(at_iteration(t))?;
        queries.record(&est);
        let eta = step_size_gd(smoothness, dir.norm_sq())?;

        direction_stats.push(DirectionStats {
            norm_sq: dir.norm_sq(),
            projection: dot_unchecked(dir.u(), &grad),
            grad_norm_sq: dot_unchecked(&grad, &grad),
            noise_projection: None,
            component: None,
        });

        x.axpy(-eta * est.quotient, dir.u());
        if !x.is_finite() {
            return Err(Error::NonFinite { iteration: t, what: "iterate" });
        }
        let (f, g) = obj.value_and_gradient(&x);
        grad = g;
        suboptimality.push((f - f_star).max(0.0));
        step_sizes.push(eta);
    }

    Ok(Trajectory {
        suboptimality,
        step_sizes,
        direction_stats,
        total_queries: queries.total(),
        seed: cfg.seed,
        final_point: x,
    })
}

/// Runs zeroth-order SGD with `eta_t = 2d / (mu (t + T0) ||u_t||^2)`.
///
/// Per step the direction is drawn first, then the component index; both
/// come from the run's single stream.
pub fn run_zo_sgd<S: StochasticObjective>(sobj: &S, cfg: &ZoSgdConfig) -> Result<Trajectory> {
    let obj = sobj.base();
    check_start(obj, &cfg.x0, cfg.alpha)?;
    require_positive("T0", cfg.warmup_offset)?;
    let d = obj.dim();
    let mu = obj.strong_convexity();
    let n = sobj.num_components();
    let f_star = obj.optimum_value();
    let mut rng = RngStream::new(cfg.seed);
    let mut queries = QueryCounter::default();

    let mut x = cfg.x0.clone();
    let (f0, mut grad) = obj.value_and_gradient(&x);
    let mut suboptimality = Vec::with_capacity(cfg.iterations + 1);
    suboptimality.push((f0 - f_star).max(0.0));
    let mut step_sizes = Vec::with_capacity(cfg.iterations);
    let mut direction_stats = Vec::with_capacity(cfg.iterations);

    for t in 0..cfg.iterations {
        let dir = draw_direction(d, &mut rng, t)?;
        let xi = rng.index(n);
        let est = two_point_estimate_stochastic(sobj, &x, cfg.alpha, &dir, xi).map_err(at_iteration(t))?;
        queries.record(&est);
        let eta = step_size_sgd(d, mu, t, cfg.warmup_offset, dir.norm_sq())?;

        let noise = sobj.gradient_noise(xi, &x);
        direction_stats.push(DirectionStats {
            norm_sq: dir.norm_sq(),
            projection: dot_unchecked(dir.u(), &grad),
            grad_norm_sq: dot_unchecked(&grad, &grad),
            noise_projection: Some(dot_unchecked(dir.u(), &noise)),
            component: Some(xi),
        });

        x.axpy(-eta * est.quotient, dir.u());
        if !x.is_finite() {
            return Err(Error::NonFinite { iteration: t, what: "iterate" });
        }
        let (f, g) = obj.value_and_gradient(&x);
        grad = g;
        suboptimality.push((f - f_star).max(0.0));
        step_sizes.push(eta);
    }

    Ok(Trajectory {
        suboptimality,
        step_sizes,
        direction_stats,
        total_queries: queries.total(),
        seed: cfg.seed,
        final_point: x,
    })
}

/// `Delta` at `x` for an arbitrary objective; convenience re-export of the
/// objectives helper for callers holding only a trajectory's final point.
pub fn final_suboptimality<O: Objective + ?Sized>(obj: &O, traj: &Trajectory) -> Result<f64> {
    suboptimality(obj, &traj.final_point)
}
