use std::time::Instant;

use super::config::{ExperimentConfig, LemmaConfig};
use super::records::{JsonlSink, LemmaRecord, SCHEMA_VERSION};
use crate::concentration::{
    validate_beta_projection_with, validate_chi_min, validate_laurent_massart, validate_linear_martingale,
    validate_quadratic_term, validate_uniform_suffix, LemmaReport, ZetaSource,
};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

pub const LEMMA_NAMES: [&str; 6] =
    ["beta_projection", "chi_min", "laurent_massart", "suffix_uniform", "linear_martingale", "quadratic_term"];

/// Dispatches to the named validator. Unset parameters take the defaults
/// listed in the README.
pub fn validate_lemma(
    name: &str,
    params: &LemmaConfig,
    delta: f64,
    trials: u64,
    rng: &mut RngStream,
) -> Result<LemmaReport> {
    match name {
        "beta_projection" => {
            validate_beta_projection_with(params.d.unwrap_or(5), params.n_samples.unwrap_or(100_000), params.ks, rng)
        }
        "chi_min" => validate_chi_min(params.n.unwrap_or(100), params.k_dof.unwrap_or(200), delta, trials, rng),
        "laurent_massart" => {
            let weights: Vec<f64> = (0..params.n_weights.unwrap_or(50)).map(|_| rng.uniform()).collect();
            validate_laurent_massart(&weights, delta, trials, rng)
        }
        "suffix_uniform" => {
            validate_uniform_suffix(params.horizon.unwrap_or(2000), params.d.unwrap_or(10), delta, trials, rng, ZetaSource::Iid)
        }
        "linear_martingale" => validate_linear_martingale(
            params.k_outer.unwrap_or(200),
            params.warmup_offset.unwrap_or(100.0),
            params.sigma.unwrap_or(1.0),
            delta,
            trials,
            rng,
        ),
        "quadratic_term" => validate_quadratic_term(
            params.k_outer.unwrap_or(100),
            params.warmup_offset.unwrap_or(100.0),
            params.sigma.unwrap_or(1.0),
            delta,
            trials,
            rng,
        ),
        _ => Err(Error::UnknownLemma { name: name.to_string(), valid: LEMMA_NAMES.to_vec() }),
    }
}

/// Runs the lemma named in `cfg.lemma.name` (or `name`, if given) and
/// writes its record to `cfg.output_path`.
pub fn run_lemma(cfg: &ExperimentConfig, name: Option<&str>) -> Result<LemmaRecord> {
    cfg.validate()?;
    let name = name
        .or(cfg.lemma.name.as_deref())
        .ok_or_else(|| Error::config("lemma.name", format!("missing; valid names: {}", LEMMA_NAMES.join(", "))))?;
    let started = Instant::now();
    let job = || validate_lemma(name, &cfg.lemma, cfg.target.delta, cfg.trials, &mut RngStream::new(cfg.seed()));
    let report = match cfg.parallelism {
        None => job()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::config("parallelism", e.to_string()))?
            .install(job)?,
    };
    let record = LemmaRecord {
        schema_version: SCHEMA_VERSION,
        record: "lemma".into(),
        master_seed: cfg.seed(),
        report,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    if let Some(path) = &cfg.output_path {
        let mut sink = JsonlSink::create(path)?;
        sink.write(&record)?;
        sink.finish()?;
    }
    Ok(record)
}
