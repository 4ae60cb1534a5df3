//! Closed-form iteration counts, smoothing radii and high-probability bounds.
//!
//! Notation: `T_k = k + T0`. All logs are natural.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, require_unit_open, Error, Result};

/// Smoothing-radius scale at which [`gd_alpha`] provably closes the
/// deterministic bound: with it, `gd_bound_rhs(gd_iterations(..), gd_alpha(..))`
/// stays below `eps` for every admissible parameter tuple.
pub const CLOSURE_C_ALPHA: f64 = 0.04;

/// `(16 d L / mu) log(2 Delta0 / eps) + 8 log(3 / delta)` before rounding.
/// The first log is clamped at zero when `eps >= 2 Delta0`.
pub fn gd_iterations_continuous(d: usize, smoothness: f64, mu: f64, delta0: f64, eps: f64, delta: f64) -> Result<f64> {
    check_dim(d)?;
    require_positive("L", smoothness)?;
    require_positive("mu", mu)?;
    require_positive("Delta0", delta0)?;
    require_positive("eps", eps)?;
    require_unit_open("delta", delta)?;
    let contraction = 16.0 * d as f64 * smoothness / mu * (2.0 * delta0 / eps).ln().max(0.0);
    Ok(contraction + 8.0 * (3.0 / delta).ln())
}

/// Iteration count for zeroth-order GD to reach `eps` with probability `1 - delta`.
pub fn gd_iterations(d: usize, smoothness: f64, mu: f64, delta0: f64, eps: f64, delta: f64) -> Result<u64> {
    let t = gd_iterations_continuous(d, smoothness, mu, delta0, eps, delta)?.ceil();
    Ok((t as u64).max(1))
}

/// The two candidate smoothing radii `(sqrt(eps mu) / (d L), sqrt(eps / (d L (log(1/delta) + loglog T) + log(1/delta))))`.
pub fn gd_alpha_branches(d: usize, smoothness: f64, mu: f64, eps: f64, delta: f64, iterations: u64) -> Result<(f64, f64)> {
    check_dim(d)?;
    require_positive("L", smoothness)?;
    require_positive("mu", mu)?;
    require_positive("eps", eps)?;
    require_unit_open("delta", delta)?;
    if iterations < 2 {
        return Err(Error::param("T", format!("log log T needs T >= 2, got {iterations}")));
    }
    let dl = d as f64 * smoothness;
    let log_inv_delta = (1.0 / delta).ln();
    let denom = dl * (log_inv_delta + (iterations as f64).ln().ln()) + log_inv_delta;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!("smoothing radius denominator is {denom}, must be positive")));
    }
    Ok(((eps * mu).sqrt() / dl, (eps / denom).sqrt()))
}

/// Smoothing radius for zeroth-order GD: `c_alpha` times the smaller branch.
pub fn gd_alpha(d: usize, smoothness: f64, mu: f64, eps: f64, delta: f64, iterations: u64, c_alpha: f64) -> Result<f64> {
    require_positive("c_alpha", c_alpha)?;
    let (a, b) = gd_alpha_branches(d, smoothness, mu, eps, delta, iterations)?;
    Ok(c_alpha * a.min(b))
}

/// High-probability suboptimality bound after `iterations` GD steps.
pub fn gd_bound_rhs(
    iterations: u64,
    alpha: f64,
    delta: f64,
    delta0: f64,
    d: usize,
    smoothness: f64,
    mu: f64,
) -> Result<f64> {
    check_dim(d)?;
    if iterations < 1 {
        return Err(Error::param("T", "must be at least 1"));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::param("alpha", format!("must be nonnegative and finite, got {alpha}")));
    }
    require_unit_open("delta", delta)?;
    if !(delta0.is_finite() && delta0 >= 0.0) {
        return Err(Error::param("Delta0", format!("must be nonnegative and finite, got {delta0}")));
    }
    require_positive("L", smoothness)?;
    require_positive("mu", mu)?;
    let df = d as f64;
    let t = iterations as f64;
    let log3 = (3.0 / delta).ln();
    let geometric = (-(mu / (8.0 * smoothness)) * (t / (2.0 * df) - 4.0 * log3 / df)).exp() * delta0;
    let bracket = 1004.0 + 1000.0 * (log3 + (2.0 * t).ln().ln()) + 32.0 * df * smoothness / mu + 3.0 * log3;
    Ok(geometric + df * smoothness * alpha * alpha / 16.0 * bracket)
}

/// Parameters for a GD run planned to reach `eps` with probability `1 - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdTheory {
    pub d: usize,
    #[serde(rename = "L")]
    pub smoothness: f64,
    pub mu: f64,
    pub delta0: f64,
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "T")]
    pub iterations: u64,
    pub alpha: f64,
    pub c_alpha: f64,
}

impl GdTheory {
    pub fn new(d: usize, smoothness: f64, mu: f64, delta0: f64, eps: f64, delta: f64, c_alpha: f64) -> Result<Self> {
        let iterations = gd_iterations(d, smoothness, mu, delta0, eps, delta)?;
        let alpha = gd_alpha(d, smoothness, mu, eps, delta, iterations.max(2), c_alpha)?;
        Ok(GdTheory { d, smoothness, mu, delta0, eps, delta, iterations, alpha, c_alpha })
    }

    /// The bound at an arbitrary `(T, alpha)` for this instance.
    pub fn bound_rhs(&self, iterations: u64, alpha: f64) -> Result<f64> {
        gd_bound_rhs(iterations, alpha, self.delta, self.delta0, self.d, self.smoothness, self.mu)
    }

    /// The bound at the planned `(T, alpha)`.
    pub fn planned_bound(&self) -> Result<f64> {
        self.bound_rhs(self.iterations, self.alpha)
    }
}

/// `sum_{t=from}^{to-1} 1 / (t + T0)^power` by direct summation; empty ranges give 0.
pub fn inverse_power_sum(from: u64, to: u64, warmup_offset: f64, power: i32) -> f64 {
    (from..to).map(|t| (t as f64 + warmup_offset).powi(-power)).sum()
}

fn rho_exponent(first: f64, second: f64, log_inv_delta: f64, tail_denominator: f64) -> f64 {
    -(first - 2.0 * (2.0 * second * log_inv_delta).sqrt() - 2.0 * log_inv_delta / tail_denominator)
}

/// `(rho_K, rho_{K,k})`. `rho_K` sums over `t = 0..K-1`; `rho_{K,k}` over
/// `t = k+1..K-1` with an empty range summing to zero.
pub fn rho_weights(k_outer: u64, k: u64, warmup_offset: f64, delta_rho_k: f64, delta_rho_kk: f64) -> Result<(f64, f64)> {
    if k >= k_outer {
        return Err(Error::Domain(format!("need k < K, got k = {k}, K = {k_outer}")));
    }
    require_positive("T0", warmup_offset)?;
    require_unit_open("delta_rho_K", delta_rho_k)?;
    require_unit_open("delta_rho_Kk", delta_rho_kk)?;

    let log_k = (1.0 / delta_rho_k).ln();
    let rho_k = rho_exponent(
        inverse_power_sum(0, k_outer, warmup_offset, 1),
        inverse_power_sum(0, k_outer, warmup_offset, 2),
        log_k,
        warmup_offset,
    )
    .exp();

    let log_kk = (1.0 / delta_rho_kk).ln();
    let rho_kk = rho_exponent(
        inverse_power_sum(k + 1, k_outer, warmup_offset, 1),
        inverse_power_sum(k + 1, k_outer, warmup_offset, 2),
        log_kk,
        k as f64 + 1.0 + warmup_offset,
    )
    .exp();

    Ok((rho_k, rho_kk))
}

/// The constant system of the stochastic high-probability analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdTheory {
    pub d: usize,
    #[serde(rename = "L")]
    pub smoothness: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(rename = "T")]
    pub iterations: u64,
    pub delta0: f64,
    pub delta: f64,
    #[serde(rename = "T0")]
    pub warmup_offset: f64,
    pub alpha: f64,
    /// `log(T + T0)`.
    pub lambda: f64,
    pub c_rho: f64,
    pub c_delta: f64,
    pub curly_c: f64,
    /// The five candidates whose maximum is `curly_c`, in order.
    pub curly_c_terms: [f64; 5],
}

/// Builds the stochastic constant system for horizon `T`.
pub fn sgd_constants(
    d: usize,
    smoothness: f64,
    mu: f64,
    sigma: f64,
    iterations: u64,
    delta0: f64,
    delta: f64,
) -> Result<SgdTheory> {
    check_dim(d)?;
    require_positive("L", smoothness)?;
    require_positive("mu", mu)?;
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::param("sigma", format!("must be nonnegative and finite, got {sigma}")));
    }
    if iterations < 1 {
        return Err(Error::param("T", "must be at least 1"));
    }
    if !(delta0.is_finite() && delta0 >= 0.0) {
        return Err(Error::param("Delta0", format!("must be nonnegative and finite, got {delta0}")));
    }
    require_unit_open("delta", delta)?;

    let df = d as f64;
    let t = iterations as f64;
    let t0 = 16.0 * df * smoothness / mu;
    let alpha = 1.0 / (df * (t + t0)).sqrt();
    let lambda = (t + t0).ln();
    let c_rho = c_rho(iterations, t0, delta);
    let c_delta = (8.0 * t / delta).ln() / lambda;
    let tail = 1.0 + 2.0 * c_delta / t0;
    let l = smoothness;

    let terms = [
        delta0 * df * t0 / (lambda * lambda),
        8.0 * c_rho * t0 * delta0 / (df * lambda * lambda),
        4096.0 * c_rho * c_rho * c_delta / (mu * mu) * tail,
        256.0 * l * sigma * sigma / (mu * mu * lambda) * tail,
        c_rho / (4.0 * lambda) * (l * (9.0 + 2.0 * l) / mu + c_delta * (36.0 + l + 4.0 * l * l) / (4.0 * df)),
    ];
    let curly_c = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok(SgdTheory {
        d,
        smoothness,
        mu,
        sigma,
        iterations,
        delta0,
        delta,
        warmup_offset: t0,
        alpha,
        lambda,
        c_rho,
        c_delta,
        curly_c,
        curly_c_terms: terms,
    })
}

/// `2 exp(4 sqrt(log(8T/delta) / T0) + 2 log(T^2/delta) / T0)`.
pub fn c_rho(iterations: u64, warmup_offset: f64, delta: f64) -> f64 {
    let t = iterations as f64;
    2.0 * (4.0 * ((8.0 * t / delta).ln() / warmup_offset).sqrt() + 2.0 * (t * t / delta).ln() / warmup_offset).exp()
}

impl SgdTheory {
    /// `T_k = k + T0`.
    pub fn shifted_index(&self, k: u64) -> f64 {
        k as f64 + self.warmup_offset
    }

    /// Suboptimality envelope at step `k`: `C d Lambda^2 / (k + T0)`.
    pub fn delta_threshold(&self, k: u64) -> f64 {
        self.curly_c * self.d as f64 * self.lambda * self.lambda / self.shifted_index(k)
    }

    /// Failure probability allotted to the envelope over steps `0..K`: `K delta / T`.
    pub fn envelope_failure_probability(&self, k_outer: u64) -> f64 {
        k_outer as f64 * self.delta / self.iterations as f64
    }

    /// Confidence levels `(delta / (8T), delta / (8T^2))` used for the weights.
    pub fn rho_deltas(&self) -> (f64, f64) {
        let t = self.iterations as f64;
        (self.delta / (8.0 * t), self.delta / (8.0 * t * t))
    }

    /// `(rho_K, rho_{K,k})` at this system's `T0` and confidence levels.
    pub fn rho_weights(&self, k_outer: u64, k: u64) -> Result<(f64, f64)> {
        let (dk, dkk) = self.rho_deltas();
        rho_weights(k_outer, k, self.warmup_offset, dk, dkk)
    }
}

/// Stochastic query-complexity estimate `ceil(c_T d log(1/eps) (log(1/eps) + log(1/delta)) / eps)`.
pub fn sgd_query_complexity(d: usize, eps: f64, delta: f64, c_t: f64) -> Result<u64> {
    Ok(sgd_query_complexity_continuous(d, eps, delta, c_t)?.ceil() as u64)
}

/// [`sgd_query_complexity`] before rounding.
pub fn sgd_query_complexity_continuous(d: usize, eps: f64, delta: f64, c_t: f64) -> Result<f64> {
    check_dim(d)?;
    require_unit_open("eps", eps)?;
    require_unit_open("delta", delta)?;
    require_positive("c_T", c_t)?;
    let log_eps = (1.0 / eps).ln();
    Ok(c_t * d as f64 * log_eps * (log_eps + (1.0 / delta).ln()) / eps)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidDimension(d))
    } else {
        Ok(())
    }
}
