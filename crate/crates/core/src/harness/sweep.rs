use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{execute, persist};
use super::records::{TrialRecord, TrialSummary, SCHEMA_VERSION};
use super::stats::{linear_fit, loglog_slope, LinearFit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "T")]
    Iterations,
    #[serde(rename = "d")]
    Dimension,
    #[serde(rename = "eps")]
    Eps,
    #[serde(rename = "sigma")]
    Sigma,
}

impl SweepAxis {
    pub const NAMES: [&'static str; 4] = ["T", "d", "eps", "sigma"];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Iterations => "T",
            SweepAxis::Dimension => "d",
            SweepAxis::Eps => "eps",
            SweepAxis::Sigma => "sigma",
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let whole = |field: &str| {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as u64)
            } else {
                Err(Error::config(field, format!("sweep value {value} is not a whole number")))
            }
        };
        match self {
            SweepAxis::Iterations => cfg.overrides.iterations = Some(whole("overrides.T")?),
            SweepAxis::Dimension => cfg.problem.d = whole("problem.d")? as usize,
            SweepAxis::Eps => cfg.target.eps = value,
            SweepAxis::Sigma => cfg.problem.sigma = value,
        }
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(SweepAxis::Iterations),
            "d" => Ok(SweepAxis::Dimension),
            "eps" => Ok(SweepAxis::Eps),
            "sigma" => Ok(SweepAxis::Sigma),
            _ => Err(Error::UnknownAxis { name: s.to_string(), valid: SweepAxis::NAMES.to_vec() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    /// Always `"sweep"`.
    pub record: String,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// For the `T` axis: log-log slope of the median final suboptimality.
    pub loglog_slope: Option<f64>,
    /// Affine fit of the iteration count against the swept value.
    pub iterations_fit: Option<LinearFit>,
    #[serde(skip)]
    pub summaries: Vec<TrialSummary>,
}

/// Runs one experiment per value of `axis`, all under the base config's
/// master seed, and writes every record to the base output path.
pub fn sweep(base: &ExperimentConfig, axis: &str, values: &[f64]) -> Result<SweepResult> {
    let axis: SweepAxis = axis.parse()?;
    if values.is_empty() {
        return Err(Error::config("values", "need at least one value"));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("values", "must be strictly ascending"));
    }

    let mut records: Vec<TrialRecord> = Vec::new();
    let mut summaries = Vec::with_capacity(values.len());
    for &v in values {
        let cfg = axis.apply(base, v)?;
        let out = execute(&cfg, |_, _, _| ())?;
        records.extend(out.records);
        summaries.push(out.summary);
    }

    let loglog = if axis == SweepAxis::Iterations && values.len() >= 2 {
        let medians: Vec<f64> = summaries.iter().map(|s| s.quantiles.p50).collect();
        loglog_slope(values, &medians).ok()
    } else {
        None
    };
    let iterations_fit = if values.len() >= 2 {
        let ts: Vec<f64> = summaries.iter().map(|s| s.iterations as f64).collect();
        linear_fit(values, &ts).ok()
    } else {
        None
    };

    let result = SweepResult {
        schema_version: SCHEMA_VERSION,
        record: "sweep".into(),
        axis,
        values: values.to_vec(),
        loglog_slope: loglog,
        iterations_fit,
        summaries,
    };
    if let Some(path) = &base.output_path {
        persist(base, &records, &result.summaries)?;
        let mut text = std::fs::read_to_string(path)?;
        text.push_str(&serde_json::to_string(&result)?);
        text.push('\n');
        std::fs::write(path, text).map_err(|source| Error::Output { path: path.clone(), source })?;
    }
    Ok(result)
}
