use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Kind, StartMode};
use super::records::{
    csv_path_for, median, write_summary_csv, CheckpointSummary, JsonlSink, Quantiles, TheoryRecord, TrialRecord,
    TrialSummary, SCHEMA_VERSION,
};
use super::stats::loglog_slope;
use crate::error::{Error, Result};
use crate::numerics::{RngStream, Vector};
use crate::objectives::{
    make_finite_sum, make_quadratic, FiniteSumQuadratic, Objective, Quadratic, SmoothFunction, StochasticObjective,
};
use crate::optimizers::{run_zo_gd, run_zo_sgd, Trajectory, ZoGdConfig, ZoSgdConfig};
use crate::theory::{gd_alpha, gd_iterations, sgd_constants, sgd_query_complexity, GdTheory};

/// Stream index reserved for building the problem instance; trials use `0..trials`.
pub const INSTANCE_STREAM: u64 = u64::MAX;

/// The objective an experiment runs on. One instance is shared by all trials.
#[derive(Debug, Clone)]
pub enum Problem {
    Deterministic(Quadratic),
    Stochastic(FiniteSumQuadratic),
}

impl Problem {
    pub fn base(&self) -> &Quadratic {
        match self {
            Problem::Deterministic(q) => q,
            Problem::Stochastic(s) => s.base(),
        }
    }
}

/// Builds the experiment's problem from stream [`INSTANCE_STREAM`] of the master seed.
pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let p = &cfg.problem;
    let mut rng = RngStream::derive(cfg.seed(), INSTANCE_STREAM);
    match cfg.kind {
        Kind::Gd => Ok(Problem::Deterministic(make_quadratic(p.d, p.mu, p.smoothness, &mut rng)?)),
        Kind::Sgd => Ok(Problem::Stochastic(make_finite_sum(
            p.d,
            p.mu,
            p.smoothness,
            p.sigma,
            p.n_components,
            &mut rng,
        )?)),
        Kind::Lemma => Err(Error::config("kind", "lemma experiments have no problem instance")),
    }
}

/// Resolved iteration count, smoothing radius and target for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub iterations: u64,
    pub alpha: f64,
    pub warmup_offset: Option<f64>,
    /// Absolute target: `eps`, or `eps * Delta0` when the target is relative.
    pub eps: f64,
    pub delta0: f64,
    pub x0: Vector,
    pub smoothness: f64,
    pub mu: f64,
    pub theory: TheoryRecord,
}

fn start_point(cfg: &ExperimentConfig, q: &Quadratic) -> Vector {
    match cfg.problem.x0_mode {
        StartMode::Zero => Vector::zeros(q.dim()),
        StartMode::Optimum => q.optimum_point().clone(),
    }
}

/// Fills in `T`, `alpha` and the theory constants from the config and instance.
pub fn plan(cfg: &ExperimentConfig, problem: &Problem) -> Result<RunPlan> {
    let q = problem.base();
    let p = &cfg.problem;
    let x0 = start_point(cfg, q);
    let delta0 = (q.value(&x0) - q.optimum_value()).max(0.0);
    let eps = if cfg.target.eps_relative { cfg.target.eps * delta0 } else { cfg.target.eps };
    if !(eps > 0.0) {
        return Err(Error::config("target.eps", "relative target is zero because the start is optimal"));
    }
    let delta = cfg.target.delta;

    match cfg.kind {
        Kind::Gd => {
            let iterations = match cfg.overrides.iterations {
                Some(t) => t,
                None if delta0 > 0.0 => gd_iterations(p.d, p.smoothness, p.mu, delta0, eps, delta)?,
                None => return Err(Error::config("overrides.T", "required when the start is optimal")),
            };
            let alpha = match cfg.overrides.alpha {
                Some(a) => a,
                None => gd_alpha(p.d, p.smoothness, p.mu, eps, delta, iterations.max(2), cfg.c_alpha())?,
            };
            let theory = GdTheory {
                d: p.d,
                smoothness: p.smoothness,
                mu: p.mu,
                delta0,
                eps,
                delta,
                iterations,
                alpha,
                c_alpha: cfg.c_alpha(),
            };
            Ok(RunPlan {
                iterations,
                alpha,
                warmup_offset: None,
                eps,
                delta0,
                x0,
                smoothness: p.smoothness,
                mu: p.mu,
                theory: TheoryRecord::Gd(theory),
            })
        }
        Kind::Sgd => {
            let iterations = match (cfg.overrides.iterations, cfg.checkpoints.last()) {
                (Some(t), _) => t,
                (None, Some(&c)) => c,
                (None, None) => {
                    if eps >= 1.0 {
                        return Err(Error::config("target.eps", format!("absolute target {eps} must be below 1")));
                    }
                    sgd_query_complexity(p.d, eps, delta, cfg.c_t())?
                }
            };
            if let Some(&c) = cfg.checkpoints.last() {
                if c > iterations {
                    return Err(Error::config("checkpoints", format!("checkpoint {c} exceeds T = {iterations}")));
                }
            }
            let theory = sgd_constants(p.d, p.smoothness, p.mu, p.sigma, iterations.max(1), delta0, delta)?;
            let alpha = cfg.overrides.alpha.unwrap_or_else(|| sgd_alpha(p.d, iterations, theory.warmup_offset));
            Ok(RunPlan {
                iterations,
                alpha,
                warmup_offset: Some(theory.warmup_offset),
                eps,
                delta0,
                x0,
                smoothness: p.smoothness,
                mu: p.mu,
                theory: TheoryRecord::Sgd(theory),
            })
        }
        Kind::Lemma => Err(Error::config("kind", "use the lemma runner for lemma experiments")),
    }
}

fn sgd_alpha(d: usize, iterations: u64, warmup_offset: f64) -> f64 {
    1.0 / (d as f64 * (iterations as f64 + warmup_offset)).sqrt()
}

/// Everything an experiment produced, before anything is written.
#[derive(Debug, Clone)]
pub struct ExperimentOutput<R> {
    pub summary: TrialSummary,
    pub records: Vec<TrialRecord>,
    /// Per-trial values returned by the inspector, in trial order.
    pub inspected: Vec<R>,
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    RngStream::derive(master, index).next_u64()
}

fn in_pool<T: Send>(parallelism: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match parallelism {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("parallelism", e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs every trial of `cfg` without writing anything. `inspect` sees each
/// trial's trajectory (for independent SGD runs, the longest one) and its
/// return values are collected in trial order.
pub fn execute<R, F>(cfg: &ExperimentConfig, inspect: F) -> Result<ExperimentOutput<R>>
where
    R: Send,
    F: Fn(u64, &RunPlan, &Trajectory) -> R + Sync,
{
    cfg.validate()?;
    let started = Instant::now();
    let problem = build_problem(cfg)?;
    let plan = plan(cfg, &problem)?;
    let master = cfg.seed();

    let results: Vec<(TrialRecord, R)> = in_pool(cfg.parallelism, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, &problem, &plan, master, i, &inspect))
            .collect::<Result<Vec<_>>>()
    })??;
    let (records, inspected): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let finals: Vec<f64> = records.iter().map(|r| r.delta_final).collect();
    let failures = records.iter().filter(|r| !r.success).count();
    let checkpoints: Vec<CheckpointSummary> = cfg
        .checkpoints
        .iter()
        .enumerate()
        .map(|(j, &c)| CheckpointSummary {
            iterations: c,
            median: median(&records.iter().map(|r| r.checkpoint_values[j]).collect::<Vec<_>>()),
        })
        .collect();
    let slope = if checkpoints.len() >= 2 {
        let xs: Vec<f64> = checkpoints.iter().map(|c| c.iterations as f64).collect();
        let ys: Vec<f64> = checkpoints.iter().map(|c| c.median).collect();
        loglog_slope(&xs, &ys).ok()
    } else {
        None
    };

    let p = &cfg.problem;
    let summary = TrialSummary {
        schema_version: SCHEMA_VERSION,
        record: "summary".into(),
        kind: cfg.kind.as_str().into(),
        trials: cfg.trials,
        master_seed: master,
        d: p.d,
        smoothness: p.smoothness,
        mu: p.mu,
        sigma: if cfg.kind == Kind::Sgd { p.sigma } else { 0.0 },
        n_components: if cfg.kind == Kind::Sgd { p.n_components } else { 1 },
        iterations: plan.iterations,
        warmup_offset: plan.warmup_offset,
        alpha: plan.alpha,
        eps: plan.eps,
        delta: cfg.target.delta,
        delta_0: plan.delta0,
        empirical_failure_rate: failures as f64 / cfg.trials as f64,
        quantiles: Quantiles::of(&finals),
        slope,
        checkpoints,
        theory: plan.theory.clone(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput { summary, records, inspected })
}

fn run_trial<R, F>(
    cfg: &ExperimentConfig,
    problem: &Problem,
    plan: &RunPlan,
    master: u64,
    index: u64,
    inspect: &F,
) -> Result<(TrialRecord, R)>
where
    F: Fn(u64, &RunPlan, &Trajectory) -> R,
{
    let seed = trial_seed(master, index);
    let (traj, checkpoint_values) = match problem {
        Problem::Deterministic(q) => {
            let run = ZoGdConfig { iterations: plan.iterations as usize, alpha: plan.alpha, x0: plan.x0.clone(), seed };
            (run_zo_gd(q, &run)?, Vec::new())
        }
        Problem::Stochastic(s) => {
            let t0 = plan.warmup_offset.expect("sgd plan has T0");
            let sgd = |iterations: u64, alpha: f64| {
                let run = ZoSgdConfig { iterations: iterations as usize, warmup_offset: t0, alpha, x0: plan.x0.clone(), seed };
                run_zo_sgd(s, &run)
            };
            if cfg.independent_runs && !cfg.checkpoints.is_empty() {
                let d = cfg.problem.d;
                let mut values = Vec::with_capacity(cfg.checkpoints.len());
                for &c in &cfg.checkpoints {
                    let alpha = cfg.overrides.alpha.unwrap_or_else(|| sgd_alpha(d, c, t0));
                    values.push(sgd(c, alpha)?.final_suboptimality());
                }
                (sgd(plan.iterations, plan.alpha)?, values)
            } else {
                let traj = sgd(plan.iterations, plan.alpha)?;
                let values = cfg.checkpoints.iter().map(|&c| traj.suboptimality[c as usize]).collect();
                (traj, values)
            }
        }
    };

    let delta_final = traj.final_suboptimality();
    let p = &cfg.problem;
    let record = TrialRecord {
        schema_version: SCHEMA_VERSION,
        kind: cfg.kind.as_str().into(),
        trial_index: index,
        seed,
        d: p.d,
        smoothness: p.smoothness,
        mu: p.mu,
        sigma: if cfg.kind == Kind::Sgd { p.sigma } else { 0.0 },
        iterations: plan.iterations,
        warmup_offset: plan.warmup_offset,
        alpha: plan.alpha,
        eps: plan.eps,
        delta: cfg.target.delta,
        delta_0: traj.initial_suboptimality(),
        delta_final,
        total_queries: traj.total_queries,
        success: delta_final <= plan.eps,
        checkpoint_values,
    };
    let extra = inspect(index, plan, &traj);
    Ok((record, extra))
}

/// Writes trial records and summaries to `cfg.output_path` (if set), plus
/// the CSV projection when requested.
pub fn persist(cfg: &ExperimentConfig, records: &[TrialRecord], summaries: &[TrialSummary]) -> Result<()> {
    let Some(path) = &cfg.output_path else {
        return Ok(());
    };
    let mut sink = JsonlSink::create(path)?;
    for r in records {
        sink.write(r)?;
    }
    for s in summaries {
        sink.write(s)?;
    }
    sink.finish()?;
    if cfg.csv {
        write_summary_csv(&csv_path_for(path), summaries)?;
    }
    Ok(())
}

/// Runs the experiment described by `cfg`, writes its records, and returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<TrialSummary> {
    Ok(run_experiment_with(cfg, |_, _, _| ())?.summary)
}

/// As [`run_experiment`], also returning every trial record and the
/// inspector's per-trial values.
pub fn run_experiment_with<R, F>(cfg: &ExperimentConfig, inspect: F) -> Result<ExperimentOutput<R>>
where
    R: Send,
    F: Fn(u64, &RunPlan, &Trajectory) -> R + Sync,
{
    let out = execute(cfg, inspect)?;
    persist(cfg, &out.records, std::slice::from_ref(&out.summary))?;
    Ok(out)
}
