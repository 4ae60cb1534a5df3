//! Monte Carlo validators for the concentration lemmas behind the
//! high-probability guarantees.
//!
//! Each validator simulates the random objects a lemma talks about, evaluates
//! the lemma's bound, and counts how often the bound fails. The count goes
//! into a [`LemmaReport`] next to the failure probability the lemma allows.
//!
//! Trials run on the current rayon pool. Trial `i` draws from
//! `RngStream::derive(master, i)` where `master` is taken from the caller's
//! stream, so reports do not depend on the number of threads.

use std::collections::BTreeMap;

use rand_distr::{Beta, ChiSquared, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, require_unit_open, Error, Result};
use crate::numerics::{dot_unchecked, fill_gaussian, gaussian_vector, norm_sq, RngStream, Vector};
use crate::objectives::{FiniteSumQuadratic, SmoothFunction, StochasticObjective};
use crate::optimizers::{run_zo_sgd, ZoSgdConfig};
use crate::theory::rho_weights;

/// Outcome of one validator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub trials: u64,
    pub violations: u64,
    pub claimed_delta: f64,
    pub empirical_rate: f64,
    /// `claimed_delta - empirical_rate`.
    pub margin: f64,
    /// Validator-specific numbers (sample moments, thresholds, ...).
    #[serde(default)]
    pub details: BTreeMap<String, f64>,
}

impl LemmaReport {
    pub fn new(lemma_id: &str, trials: u64, violations: u64, claimed_delta: f64) -> Self {
        let empirical_rate = if trials == 0 { 0.0 } else { violations as f64 / trials as f64 };
        LemmaReport {
            lemma_id: lemma_id.to_string(),
            trials,
            violations,
            claimed_delta,
            empirical_rate,
            margin: claimed_delta - empirical_rate,
            details: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    /// One-sided binomial slack `3 sqrt(delta (1 - delta) / trials)`.
    pub fn slack(&self) -> f64 {
        binomial_slack(self.claimed_delta, self.trials)
    }

    /// Whether the empirical rate stays within `claimed_delta + slack`.
    pub fn passes(&self) -> bool {
        self.empirical_rate <= self.claimed_delta + self.slack()
    }
}

/// `3 sqrt(p (1 - p) / n)`.
pub fn binomial_slack(p: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

fn master_seed(rng: &mut RngStream) -> u64 {
    rand::RngCore::next_u64(rng)
}

/// Runs `trials` independent trials in parallel and counts the ones that
/// report a violation.
fn count_violations<F>(trials: u64, master: u64, trial: F) -> Result<u64>
where
    F: Fn(&mut RngStream) -> Result<bool> + Sync,
{
    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|i| trial(&mut RngStream::derive(master, i)))
        .collect::<Result<_>>()?;
    Ok(outcomes.into_iter().filter(|&v| v).count() as u64)
}

// ---------------------------------------------------------------------------
// Beta projection law

/// `E[X^m]` for `X ~ Beta(a, b)`: `prod_{k<m} (a + k) / (a + b + k)`.
pub fn beta_raw_moment(m: u32, a: f64, b: f64) -> Result<f64> {
    require_positive("a", a)?;
    require_positive("b", b)?;
    Ok((0..m).map(|k| (a + k as f64) / (a + b + k as f64)).product())
}

/// Running first and second moments of a stream of projection ratios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MomentAccumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MomentAccumulator {
    pub fn push(&mut self, zeta: f64) {
        self.count += 1;
        self.sum += zeta;
        self.sum_sq += zeta * zeta;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    pub fn second_moment(&self) -> f64 {
        self.sum_sq / self.count as f64
    }

    /// Compares both sample moments against the `Beta(1/2, (d-1)/2)` law
    /// using analytic standard errors and a 5-SE tolerance. Each failed
    /// check counts as one violation.
    pub fn beta_report(&self, d: usize) -> Result<LemmaReport> {
        if d < 2 {
            return Err(Error::param("d", format!("projection law needs d >= 2, got {d}")));
        }
        if self.count == 0 {
            return Err(Error::param("samples", "no samples accumulated"));
        }
        let (a, b) = (0.5, (d as f64 - 1.0) / 2.0);
        let m1 = beta_raw_moment(1, a, b)?;
        let m2 = beta_raw_moment(2, a, b)?;
        let m4 = beta_raw_moment(4, a, b)?;
        let n = self.count as f64;
        let se_mean = ((m2 - m1 * m1) / n).sqrt();
        let se_second = ((m4 - m2 * m2) / n).sqrt();
        let z_mean = (self.mean() - m1) / se_mean;
        let z_second = (self.second_moment() - m2) / se_second;
        let violations = u64::from(z_mean.abs() > 5.0) + u64::from(z_second.abs() > 5.0);
        Ok(LemmaReport::new("beta_projection", 2, violations, 0.0)
            .with("d", d as f64)
            .with("samples", n)
            .with("mean", self.mean())
            .with("target_mean", m1)
            .with("z_mean", z_mean)
            .with("second_moment", self.second_moment())
            .with("target_second_moment", m2)
            .with("z_second_moment", z_second))
    }
}

/// `(u^T a)^2 / ||u||^2` for a unit vector `a`.
pub fn projection_ratio(u: &[f64], unit: &[f64]) -> f64 {
    let p = dot_unchecked(u, unit);
    p * p / norm_sq(u)
}

const BETA_CHUNK: u64 = 4096;

fn sample_projections(d: usize, n_samples: u64, unit: &Vector, master: u64) -> Vec<f64> {
    let chunks = n_samples.div_ceil(BETA_CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = RngStream::derive(master, c);
            let len = BETA_CHUNK.min(n_samples - c * BETA_CHUNK) as usize;
            let mut u = vec![0.0; d];
            (0..len)
                .map(|_| {
                    fill_gaussian(&mut u, &mut rng);
                    projection_ratio(&u, unit)
                })
                .collect()
        })
        .collect();
    parts.concat()
}

/// Kolmogorov–Smirnov distance between `samples` and the `Beta(1/2, (d-1)/2)` CDF.
pub fn beta_ks_statistic(samples: &[f64], d: usize) -> Result<f64> {
    use statrs::distribution::{Beta as BetaCdf, ContinuousCDF};
    if d < 2 {
        return Err(Error::param("d", format!("projection law needs d >= 2, got {d}")));
    }
    let law = BetaCdf::new(0.5, (d as f64 - 1.0) / 2.0).map_err(|e| Error::Domain(e.to_string()))?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = law.cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max))
}

/// Samples projection ratios of Gaussian directions onto a random unit
/// vector and checks the first two moments against `Beta(1/2, (d-1)/2)`.
pub fn validate_beta_projection(d: usize, n_samples: u64, rng: &mut RngStream) -> Result<LemmaReport> {
    validate_beta_projection_with(d, n_samples, false, rng)
}

/// As [`validate_beta_projection`]; with `ks` set, adds a third check that
/// the KS distance stays below the DKW band at level `1e-6`.
pub fn validate_beta_projection_with(d: usize, n_samples: u64, ks: bool, rng: &mut RngStream) -> Result<LemmaReport> {
    if d < 2 {
        return Err(Error::param("d", format!("projection law needs d >= 2, got {d}")));
    }
    if n_samples < 10_000 {
        return Err(Error::param("n_samples", format!("need at least 10000, got {n_samples}")));
    }
    let a = gaussian_vector(d, rng)?;
    let unit = a.scaled(1.0 / a.norm());
    let samples = sample_projections(d, n_samples, &unit, master_seed(rng));

    let mut acc = MomentAccumulator::default();
    samples.iter().for_each(|&z| acc.push(z));
    let mut report = acc.beta_report(d)?;
    if ks {
        let stat = beta_ks_statistic(&samples, d)?;
        let band = ((2.0f64 / 1e-6).ln() / (2.0 * n_samples as f64)).sqrt();
        report = LemmaReport::new("beta_projection", 3, report.violations + u64::from(stat > band), 0.0)
            .with("ks_statistic", stat)
            .with("ks_band", band);
        for (k, v) in acc.beta_report(d)?.details {
            report.details.insert(k, v);
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Weighted chi-square bounds

/// `sum w + 2 sqrt(sum w^2 log(1/delta)) + 2 max(w) log(1/delta)`; zero for no weights.
pub fn laurent_massart_bound(weights: &[f64], delta: f64) -> Result<f64> {
    if let Some(i) = weights.iter().position(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(Error::param("weights", format!("entry {i} is {}, must be nonnegative", weights[i])));
    }
    if weights.is_empty() {
        return Ok(0.0);
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1], got {delta}")));
    }
    let log = (1.0 / delta).ln();
    let sum: f64 = weights.iter().sum();
    let sum_sq = norm_sq(weights);
    let max = weights.iter().copied().fold(0.0, f64::max);
    Ok(sum + 2.0 * (sum_sq * log).sqrt() + 2.0 * max * log)
}

/// Draws `sum_k w_k X_k^2` with standard normal `X_k` per trial and counts
/// exceedances of [`laurent_massart_bound`].
pub fn validate_laurent_massart(weights: &[f64], delta: f64, trials: u64, rng: &mut RngStream) -> Result<LemmaReport> {
    require_unit_open("delta", delta)?;
    require_trials(trials)?;
    let bound = laurent_massart_bound(weights, delta)?;
    let violations = count_violations(trials, master_seed(rng), |r| {
        let s: f64 = weights
            .iter()
            .map(|w| {
                let x = r.standard_normal();
                w * x * x
            })
            .sum();
        Ok(s > bound)
    })?;
    Ok(LemmaReport::new("laurent_massart", trials, violations, delta)
        .with("bound", bound)
        .with("weights", weights.len() as f64))
}

/// `k - 2 sqrt(k (log N + log(1/delta)))`.
pub fn chi_min_threshold(n: u64, k_dof: f64, delta: f64) -> f64 {
    k_dof - 2.0 * (k_dof * ((n as f64).ln() + (1.0 / delta).ln())).sqrt()
}

/// Whether `k >= 16 log(N / delta)`, the regime in which the threshold is at least `k/2`.
pub fn chi_min_half_regime(n: u64, k_dof: f64, delta: f64) -> bool {
    k_dof >= 16.0 * (n as f64 / delta).ln()
}

/// Minimum of `N` chi-square(`k_dof`) draws against [`chi_min_threshold`].
///
/// In the half regime the report also counts non-violating trials whose
/// minimum falls below `k/2` under `details["half_regime_failures"]`.
pub fn validate_chi_min(n: u64, k_dof: u64, delta: f64, trials: u64, rng: &mut RngStream) -> Result<LemmaReport> {
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    if k_dof == 0 {
        return Err(Error::param("k_dof", "must be at least 1"));
    }
    require_unit_open("delta", delta)?;
    require_trials(trials)?;
    let k = k_dof as f64;
    let threshold = chi_min_threshold(n, k, delta);
    let half = chi_min_half_regime(n, k, delta);
    let law = ChiSquared::new(k).map_err(|e| Error::Domain(e.to_string()))?;

    let master = master_seed(rng);
    let outcomes: Vec<(bool, bool)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut r = RngStream::derive(master, i);
            let min = (0..n).map(|_| law.sample(&mut r)).fold(f64::INFINITY, f64::min);
            let violated = min <= threshold;
            (violated, half && !violated && min < k / 2.0)
        })
        .collect();
    let violations = outcomes.iter().filter(|o| o.0).count() as u64;
    let half_failures = outcomes.iter().filter(|o| o.1).count();
    Ok(LemmaReport::new("chi_min", trials, violations, delta)
        .with("threshold", threshold)
        .with("half_regime", f64::from(u8::from(half)))
        .with("half_regime_failures", half_failures as f64))
}

// ---------------------------------------------------------------------------
// Suffix sums of projection ratios

/// Per-step projection ratios with deterministic weights and their suffix sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixSumStats {
    pub zeta_series: Vec<f64>,
    pub weights: Vec<f64>,
    /// `suffix_sums[j] = sum_{t >= j} w_t zeta_t`; entry `k + 1` is the sum over `t > k`.
    pub suffix_sums: Vec<f64>,
}

impl SuffixSumStats {
    pub fn new(zeta_series: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if zeta_series.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: weights.len(), got: zeta_series.len() });
        }
        if let Some(i) = zeta_series.iter().position(|z| !(0.0..=1.0).contains(z)) {
            return Err(Error::param("zeta_series", format!("entry {i} is {}, outside [0, 1]", zeta_series[i])));
        }
        let mut suffix_sums = vec![0.0; zeta_series.len() + 1];
        for t in (0..zeta_series.len()).rev() {
            suffix_sums[t] = suffix_sums[t + 1] + weights[t] * zeta_series[t];
        }
        Ok(SuffixSumStats { zeta_series, weights, suffix_sums })
    }

    /// `sum_{t > k} w_t zeta_t` for `k >= -1`.
    pub fn after(&self, k: isize) -> f64 {
        self.suffix_sums[(k + 1) as usize]
    }
}

fn check_nonincreasing(weights: &[f64]) -> Result<()> {
    if let Some(i) = weights.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::param("weights", format!("entry {i} is {}, must be positive", weights[i])));
    }
    if let Some(i) = weights.windows(2).position(|p| p[1] > p[0]) {
        return Err(Error::WeightsNotNonincreasing { position: i + 1 });
    }
    Ok(())
}

/// Lower bound on `sum_{t > k} w_t zeta_t` for positive nonincreasing weights:
///
/// ```text
/// W_k / d - (2 sqrt(2 Q_k log(1/delta)) + 2 w_{k+1} log(1/delta)) / d
/// ```
///
/// where `W_k` and `Q_k` sum `w_t` and `w_t^2` over `t > k`, and `-1 <= k <= len - 2`.
pub fn suffix_sum_lower_bound(weights: &[f64], d: usize, delta: f64, k: isize) -> Result<f64> {
    check_nonincreasing(weights)?;
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1], got {delta}")));
    }
    let len = weights.len() as isize;
    if k < -1 || k > len - 2 {
        return Err(Error::Index { index: (k + 1).max(0) as usize, len: weights.len() });
    }
    let tail = &weights[(k + 1) as usize..];
    let w: f64 = tail.iter().sum();
    let q = norm_sq(tail);
    let log = (1.0 / delta).ln();
    let df = d as f64;
    Ok(w / df - (2.0 * (2.0 * q * log).sqrt() + 2.0 * tail[0] * log) / df)
}

/// Right-hand side of the uniform suffix bound for a suffix of `T - k - 1` terms:
/// `(T-k-1)/(2d) - (250/d)(1 + log(1/delta) + loglog(2(T-k)))`.
pub fn uniform_suffix_rhs(horizon: usize, k: usize, d: usize, delta: f64) -> f64 {
    let df = d as f64;
    let n = (horizon - k - 1) as f64;
    n / (2.0 * df) - 250.0 / df * (1.0 + (1.0 / delta).ln() + (2.0 * (horizon - k) as f64).ln().ln())
}

/// Index of the first `k` in `0..T-1` at which the uniform suffix bound fails.
pub fn uniform_suffix_violation(zetas: &[f64], d: usize, delta: f64) -> Option<usize> {
    let horizon = zetas.len();
    let mut suffix = 0.0;
    // Walk k from T-2 down to 0, keeping sum_{t=k+1}^{T-1} zeta_t.
    let mut first = None;
    for k in (0..horizon.saturating_sub(1)).rev() {
        suffix += zetas[k + 1];
        if suffix < uniform_suffix_rhs(horizon, k, d, delta) {
            first = Some(k);
        }
    }
    first
}

/// Where the projection ratios for [`validate_uniform_suffix`] come from.
#[derive(Debug, Clone, Copy)]
pub enum ZetaSource<'a> {
    /// Independent `Beta(1/2, (d-1)/2)` draws, `T` per trial.
    Iid,
    /// Series recorded from optimizer runs; one trial per series.
    Harvested(&'a [Vec<f64>]),
}

/// Checks the uniform-in-`k` suffix lower bound for every `k` at once;
/// a trial is a violation if any `k` fails.
pub fn validate_uniform_suffix(
    horizon: usize,
    d: usize,
    delta: f64,
    trials: u64,
    rng: &mut RngStream,
    source: ZetaSource<'_>,
) -> Result<LemmaReport> {
    if horizon < 2 {
        return Err(Error::param("T", format!("need T >= 2, got {horizon}")));
    }
    if d < 2 {
        return Err(Error::param("d", format!("projection law needs d >= 2, got {d}")));
    }
    require_unit_open("delta", delta)?;
    let (trials, violations) = match source {
        ZetaSource::Iid => {
            require_trials(trials)?;
            let law = Beta::new(0.5, (d as f64 - 1.0) / 2.0).map_err(|e| Error::Domain(e.to_string()))?;
            let v = count_violations(trials, master_seed(rng), |r| {
                let zetas: Vec<f64> = (0..horizon).map(|_| law.sample(r)).collect();
                Ok(uniform_suffix_violation(&zetas, d, delta).is_some())
            })?;
            (trials, v)
        }
        ZetaSource::Harvested(series) => {
            if series.is_empty() {
                return Err(Error::param("series", "no harvested series"));
            }
            let v = series
                .par_iter()
                .filter(|z| uniform_suffix_violation(z, d, delta).is_some())
                .count();
            (series.len() as u64, v as u64)
        }
    };
    Ok(LemmaReport::new("suffix_uniform", trials, violations, delta)
        .with("T", horizon as f64)
        .with("d", d as f64))
}

// ---------------------------------------------------------------------------
// Martingale tails

/// `exp(-tau^2 / (2 (sigma^2 + R tau)))`.
pub fn freedman_tail(tau: f64, sigma_sq: f64, bound: f64) -> Result<f64> {
    require_positive("tau", tau)?;
    require_positive("sigma_sq", sigma_sq)?;
    require_positive("R", bound)?;
    Ok((-tau * tau / (2.0 * (sigma_sq + bound * tau))).exp())
}

/// `exp(-x^2 / (2 (N v^2 + b x)))`.
pub fn max_bernstein_tail(x: f64, n: u64, v_sq: f64, b: f64) -> Result<f64> {
    require_positive("x", x)?;
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    require_positive("v_sq", v_sq)?;
    require_positive("b", b)?;
    Ok((-x * x / (2.0 * (n as f64 * v_sq + b * x))).exp())
}

/// Running maximum of a `N`-step Rademacher walk scaled by `c`, against
/// [`max_bernstein_tail`] with `v = b = c`. The report's claimed rate is the
/// tail bound itself.
pub fn validate_max_bernstein(n: u64, scale: f64, x: f64, trials: u64, rng: &mut RngStream) -> Result<LemmaReport> {
    require_positive("scale", scale)?;
    require_trials(trials)?;
    let tail = max_bernstein_tail(x, n, scale * scale, scale)?;
    let violations = count_violations(trials, master_seed(rng), |r| {
        let mut m = 0.0;
        for _ in 0..n {
            m += if r.uniform() < 0.5 { scale } else { -scale };
            if m >= x {
                return Ok(true);
            }
        }
        Ok(false)
    })?;
    Ok(LemmaReport::new("max_bernstein", trials, violations, tail).with("x", x))
}

/// Instance used by the martingale validators: a `d = 10` quadratic with
/// `mu = 1/2`, `L = 1` and two noise components `+b` and `-b`, `||b|| = sigma`.
pub fn symmetric_noise_instance(sigma: f64, rng: &mut RngStream) -> Result<FiniteSumQuadratic> {
    let base = crate::objectives::make_quadratic(10, 0.5, 1.0, rng)?;
    let b = if sigma > 0.0 {
        let g = gaussian_vector(10, rng)?;
        g.scaled(sigma / g.norm())
    } else {
        Vector::zeros(10)
    };
    let minus = b.scaled(-1.0);
    FiniteSumQuadratic::new(base, vec![b, minus], sigma)
}

/// Weights `rho_{K,k}` for `k = 0..K`, with horizon `K` and confidence `delta / (8 K^2)`.
fn rho_suffix_weights(k_outer: u64, warmup_offset: f64, delta: f64) -> Result<Vec<f64>> {
    let kf = k_outer as f64;
    let dkk = delta / (8.0 * kf * kf);
    let dk = delta / (8.0 * kf);
    (0..k_outer).map(|k| rho_weights(k_outer, k, warmup_offset, dk, dkk).map(|r| r.1)).collect()
}

/// Runs `K` steps of zeroth-order SGD on [`symmetric_noise_instance`] and
/// checks the weighted noise martingale
///
/// ```text
/// sum_k (rho_{K,k} / T_k) (grad f^T u_k)(u_k^T e_k) / ||u_k||^2  <=  sqrt(2 V_K log(1/delta))
/// ```
///
/// with `V_K = sum_k (rho_{K,k} / T_k * |grad f^T u_k| / ||u_k|| * sigma)^2`.
pub fn validate_linear_martingale(
    k_outer: u64,
    warmup_offset: f64,
    sigma: f64,
    delta: f64,
    trials: u64,
    rng: &mut RngStream,
) -> Result<LemmaReport> {
    if k_outer == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    require_positive("T0", warmup_offset)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be nonnegative and finite, got {sigma}")));
    }
    require_unit_open("delta", delta)?;
    require_trials(trials)?;

    let instance = symmetric_noise_instance(sigma, rng)?;
    let rho = rho_suffix_weights(k_outer, warmup_offset, delta)?;
    let log = (1.0 / delta).ln();
    let master = master_seed(rng);
    let violations = count_violations(trials, master, |r| {
        let cfg = ZoSgdConfig {
            iterations: k_outer as usize,
            warmup_offset,
            alpha: 1e-4,
            x0: Vector::zeros(instance.base().dim()),
            seed: rand::RngCore::next_u64(r),
        };
        let traj = run_zo_sgd(&instance, &cfg)?;
        let (mut sum_y, mut v) = (0.0, 0.0);
        for (k, s) in traj.direction_stats.iter().enumerate() {
            let scale = rho[k] / (k as f64 + warmup_offset);
            let e = s.noise_projection.unwrap_or(0.0);
            sum_y += scale * s.projection * e / s.norm_sq;
            let c = scale * s.projection.abs() / s.norm_sq.sqrt() * sigma;
            v += c * c;
        }
        Ok(sum_y > (2.0 * v * log).sqrt())
    })?;
    Ok(LemmaReport::new("linear_martingale", trials, violations, delta)
        .with("K", k_outer as f64)
        .with("T0", warmup_offset)
        .with("sigma", sigma))
}

/// Checks `sum_k (rho_{K,k} / T_k^2)(u_k^T e_k)^2 <= sigma^2 LM(rho_{K,k} / T_k^2, delta)`
/// where `LM` is [`laurent_massart_bound`], `u_k` is Gaussian and `e_k = +-b`
/// with `||b|| = sigma`, so that `u_k^T e_k ~ N(0, sigma^2)`.
pub fn validate_quadratic_term(
    k_outer: u64,
    warmup_offset: f64,
    sigma: f64,
    delta: f64,
    trials: u64,
    rng: &mut RngStream,
) -> Result<LemmaReport> {
    if k_outer == 0 {
        return Err(Error::param("K", "must be at least 1"));
    }
    require_positive("T0", warmup_offset)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::param("sigma", format!("must be nonnegative and finite, got {sigma}")));
    }
    require_unit_open("delta", delta)?;
    require_trials(trials)?;

    let d = 10;
    let noise = if sigma > 0.0 {
        let g = gaussian_vector(d, rng)?;
        g.scaled(sigma / g.norm())
    } else {
        Vector::zeros(d)
    };
    let weights: Vec<f64> = rho_suffix_weights(k_outer, warmup_offset, delta)?
        .iter()
        .enumerate()
        .map(|(k, r)| r / (k as f64 + warmup_offset).powi(2))
        .collect();
    let rhs = sigma * sigma * laurent_massart_bound(&weights, delta)?;
    let violations = count_violations(trials, master_seed(rng), |r| {
        let mut u = vec![0.0; d];
        let mut lhs = 0.0;
        for w in &weights {
            fill_gaussian(&mut u, r);
            let sign = if r.uniform() < 0.5 { 1.0 } else { -1.0 };
            let p = sign * dot_unchecked(&u, &noise);
            lhs += w * p * p;
        }
        Ok(lhs > rhs)
    })?;
    Ok(LemmaReport::new("quadratic_term", trials, violations, delta)
        .with("K", k_outer as f64)
        .with("rhs", rhs))
}

fn require_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(Error::param("trials", "must be at least 1"))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::inverse_power_sum;
    use approx::assert_relative_eq;

    #[test]
    fn beta_moment_examples() {
        assert_relative_eq!(beta_raw_moment(1, 0.5, 2.0).unwrap(), 0.2);
        assert_eq!(beta_raw_moment(0, 0.5, 2.0).unwrap(), 1.0);
        assert_relative_eq!(beta_raw_moment(2, 0.5, 2.0).unwrap(), 3.0 / 35.0, max_relative = 1e-15);
        for d in 2..50 {
            let b = (d as f64 - 1.0) / 2.0;
            assert_relative_eq!(beta_raw_moment(1, 0.5, b).unwrap(), 1.0 / d as f64, max_relative = 1e-15);
            let df = d as f64;
            assert_relative_eq!(beta_raw_moment(2, 0.5, b).unwrap(), 3.0 / (df * (df + 2.0)), max_relative = 1e-14);
        }
        assert!(beta_raw_moment(1, 0.0, 1.0).is_err());
    }

    #[test]
    fn beta_moment_telescopes() {
        for m in 0..10 {
            let (a, b) = (0.5, 3.5);
            let ratio = beta_raw_moment(m + 1, a, b).unwrap() / beta_raw_moment(m, a, b).unwrap();
            assert_relative_eq!(ratio, (a + m as f64) / (a + b + m as f64), max_relative = 1e-14);
        }
    }

    #[test]
    fn beta_projection_passes() {
        let mut rng = RngStream::new(3);
        for d in [2, 5, 100] {
            let r = validate_beta_projection(d, 100_000, &mut rng).unwrap();
            assert_eq!(r.violations, 0, "{r:?}");
            assert_relative_eq!(r.details["target_mean"], 1.0 / d as f64, max_relative = 1e-14);
        }
        let r = validate_beta_projection_with(10, 20_000, true, &mut rng).unwrap();
        assert_eq!(r.trials, 3);
        assert_eq!(r.violations, 0, "{r:?}");
        assert!(validate_beta_projection(1, 100_000, &mut rng).is_err());
        assert!(validate_beta_projection(5, 100, &mut rng).is_err());
    }

    #[test]
    fn beta_report_flags_wrong_law() {
        // Uniform(0,1) has mean 1/2 = target for d = 2 but the wrong second moment.
        let mut rng = RngStream::new(4);
        let mut acc = MomentAccumulator::default();
        for _ in 0..100_000 {
            acc.push(rng.uniform());
        }
        let r = acc.beta_report(2).unwrap();
        assert_eq!(r.violations, 1);
    }

    #[test]
    fn laurent_massart_examples() {
        let e1 = (-1f64).exp();
        assert_relative_eq!(laurent_massart_bound(&[1.0; 4], e1).unwrap(), 10.0, max_relative = 1e-15);
        assert_eq!(laurent_massart_bound(&[0.3, 1.2, 0.5], 1.0).unwrap(), 2.0);
        assert_eq!(laurent_massart_bound(&[], 0.1).unwrap(), 0.0);
        assert!(laurent_massart_bound(&[1.0, -0.1], 0.1).is_err());
    }

    #[test]
    fn laurent_massart_tail() {
        let mut rng = RngStream::new(8);
        let weights: Vec<f64> = (0..30).map(|_| rng.uniform()).collect();
        let r = validate_laurent_massart(&weights, 0.05, 10_000, &mut rng).unwrap();
        assert!(r.empirical_rate <= 0.05 + 3.0 * (0.05f64 / 10_000.0).sqrt(), "{r:?}");
        assert!(r.passes());
    }

    #[test]
    fn chi_min_examples() {
        let e1 = (-1f64).exp();
        assert_relative_eq!(chi_min_threshold(1, 100.0, e1), 80.0, max_relative = 1e-15);
        let mut rng = RngStream::new(9);
        for _ in 0..1000 {
            let n = 1 + rng.index(10_000) as u64;
            let delta = 1e-6 + 0.9 * rng.uniform();
            let k = 16.0 * (n as f64 / delta).ln() * (1.0 + 3.0 * rng.uniform());
            assert!(chi_min_half_regime(n, k, delta));
            assert!(chi_min_threshold(n, k, delta) >= k / 2.0);
        }
    }

    #[test]
    fn chi_min_validator() {
        let r = validate_chi_min(100, 200, 0.1, 2000, &mut RngStream::new(10)).unwrap();
        assert!(r.passes(), "{r:?}");
        let r = validate_chi_min(10, 400, 0.05, 1000, &mut RngStream::new(11)).unwrap();
        assert_eq!(r.details["half_regime"], 1.0);
        assert_eq!(r.details["half_regime_failures"], 0.0);
    }

    #[test]
    fn suffix_lower_bound_examples() {
        let e1 = (-1f64).exp();
        assert_relative_eq!(suffix_sum_lower_bound(&[1.0; 8], 2, e1, -1).unwrap(), -1.0, max_relative = 1e-14);
        assert_eq!(suffix_sum_lower_bound(&[3.0, 2.0, 1.0], 2, 1.0, 0).unwrap(), 1.5);
        assert!(matches!(
            suffix_sum_lower_bound(&[1.0, 2.0], 2, 0.1, -1),
            Err(Error::WeightsNotNonincreasing { position: 1 })
        ));
        assert!(suffix_sum_lower_bound(&[1.0, 1.0], 2, 0.1, 1).is_err());
        assert!(suffix_sum_lower_bound(&[1.0, 1.0], 2, 0.1, -2).is_err());
    }

    #[test]
    fn suffix_lower_bound_matches_rho_exponent() {
        // With w_t = 1/(t+T0) and d = 1 the bound at k = -1 is minus the log of rho_K.
        let (t0, horizon, delta) = (25.0, 300u64, 0.01);
        let w: Vec<f64> = (0..horizon).map(|t| 1.0 / (t as f64 + t0)).collect();
        let bound = suffix_sum_lower_bound(&w, 1, delta, -1).unwrap();
        let (rho_k, _) = rho_weights(horizon, 0, t0, delta, 0.5).unwrap();
        assert_relative_eq!(-rho_k.ln(), bound, max_relative = 1e-12);
        let s = inverse_power_sum(0, horizon, t0, 1);
        assert!(bound < s);
    }

    #[test]
    fn suffix_uniform_weights_simplification() {
        // k = -1, w = 1: the bound dominates T/(2d) - 4 log(1/delta)/d once
        // T >= 2 (2 + sqrt 2)^2 log(1/delta).
        let c = 2.0 * (2.0 + 2f64.sqrt()).powi(2);
        for delta in [0.5f64, 0.1, 1e-3, 1e-8] {
            let log = (1.0 / delta).ln();
            for d in [1, 4, 30] {
                let start = (c * log).ceil() as usize;
                for t in start..start + 200 {
                    let b = suffix_sum_lower_bound(&vec![1.0; t], d, delta, -1).unwrap();
                    let simple = t as f64 / (2.0 * d as f64) - 4.0 * log / d as f64;
                    assert!(b >= simple - 1e-12, "T={t} delta={delta}");
                }
            }
        }
        // Below that regime the implication can fail, e.g. at T = 16 log(1/delta).
        let delta = (-10f64).exp();
        let b = suffix_sum_lower_bound(&[1.0; 160], 1, delta, -1).unwrap();
        assert!(b < 80.0 - 40.0);
    }

    #[test]
    fn suffix_stats_consistent() {
        let mut rng = RngStream::new(12);
        let z: Vec<f64> = (0..100).map(|_| rng.uniform()).collect();
        let w: Vec<f64> = (0..100).map(|t| 1.0 / (t as f64 + 5.0)).collect();
        let s = SuffixSumStats::new(z.clone(), w.clone()).unwrap();
        for k in -1..99isize {
            let direct: f64 = ((k + 1) as usize..100).map(|t| w[t] * z[t]).sum();
            assert!((s.after(k) - direct).abs() <= 1e-12);
        }
        assert!(SuffixSumStats::new(vec![1.5], vec![1.0]).is_err());
    }

    #[test]
    fn uniform_suffix_examples() {
        // T - k - 1 = 500, d = 10, delta = 1/e; 40-digit reference -73.3245...
        let rhs = uniform_suffix_rhs(501, 0, 10, (-1f64).exp());
        assert_relative_eq!(rhs, 25.0 - 25.0 * (2.0 + 1002f64.ln().ln()), max_relative = 1e-14);
        assert!((rhs + 73.3).abs() < 0.05);
        assert_eq!(uniform_suffix_violation(&[1.0; 3000], 10, 0.1), None);
        // All zeros eventually violates once the suffix is long.
        assert!(uniform_suffix_violation(&vec![0.0; 20_000], 10, 0.1).is_some());
    }

    #[test]
    fn uniform_suffix_validator() {
        let r = validate_uniform_suffix(2000, 10, 0.1, 300, &mut RngStream::new(13), ZetaSource::Iid).unwrap();
        assert!(r.empirical_rate <= 0.1 + 3.0 * (0.1f64 / 300.0).sqrt());
        let series = vec![vec![1.0; 50], vec![0.1; 50]];
        let r = validate_uniform_suffix(50, 10, 0.1, 0, &mut RngStream::new(1), ZetaSource::Harvested(&series)).unwrap();
        assert_eq!(r.trials, 2);
    }

    #[test]
    fn tail_examples() {
        // exp(-2/3) = 0.513417119032592...
        assert_relative_eq!(freedman_tail(2.0, 1.0, 1.0).unwrap(), 0.513417119032592, max_relative = 1e-14);
        assert!(freedman_tail(1e-12, 1.0, 1.0).unwrap() > 1.0 - 1e-12);
        let mut prev = 1.0;
        for i in 1..100 {
            let v = freedman_tail(i as f64 * 0.1, 2.0, 0.5).unwrap();
            let w = max_bernstein_tail(i as f64 * 0.1, 10, 0.3, 0.5).unwrap();
            assert!(v < prev && w < 1.0);
            prev = v;
        }
        assert!(freedman_tail(0.0, 1.0, 1.0).is_err());
        assert!(max_bernstein_tail(1.0, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn max_bernstein_is_sound() {
        let r = validate_max_bernstein(100, 1.0, 25.0, 20_000, &mut RngStream::new(14)).unwrap();
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn linear_martingale_cases() {
        let r = validate_linear_martingale(50, 100.0, 0.0, 0.05, 50, &mut RngStream::new(15)).unwrap();
        assert_eq!(r.violations, 0);
        let r = validate_linear_martingale(1, 100.0, 1.0, 0.05, 2000, &mut RngStream::new(16)).unwrap();
        assert!(r.passes(), "{r:?}");
        let r = validate_linear_martingale(200, 100.0, 1.0, 0.05, 1000, &mut RngStream::new(17)).unwrap();
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn quadratic_term_cases() {
        let r = validate_quadratic_term(100, 50.0, 0.0, 0.05, 100, &mut RngStream::new(18)).unwrap();
        assert_eq!(r.violations, 0);
        let r = validate_quadratic_term(1, 50.0, 1.0, 0.05, 200, &mut RngStream::new(19)).unwrap();
        let (_, rho) = rho_weights(1, 0, 50.0, 0.05 / 8.0, 0.05 / 8.0).unwrap();
        let single = laurent_massart_bound(&[rho / 2500.0], 0.05).unwrap();
        assert_relative_eq!(single, r.details["rhs"], max_relative = 1e-14);
        let r = validate_quadratic_term(100, 50.0, 1.0, 0.05, 1000, &mut RngStream::new(20)).unwrap();
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn report_rate_invariants() {
        let r = LemmaReport::new("x", 40, 3, 0.1);
        assert_eq!(r.empirical_rate, 3.0 / 40.0);
        assert_relative_eq!(r.margin, 0.1 - 0.075);
    }
}
