use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::concentration::LemmaReport;
use crate::error::{Error, Result};
use crate::theory::{GdTheory, SgdTheory};

/// Bumped whenever a record layout changes.
pub const SCHEMA_VERSION: u32 = 1;

/// One line per Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema_version: u32,
    pub kind: String,
    pub trial_index: u64,
    pub seed: u64,
    pub d: usize,
    #[serde(rename = "L")]
    pub smoothness: f64,
    pub mu: f64,
    pub sigma: f64,
    #[serde(rename = "T")]
    pub iterations: u64,
    #[serde(rename = "T0")]
    pub warmup_offset: Option<f64>,
    pub alpha: f64,
    pub eps: f64,
    pub delta: f64,
    pub delta_0: f64,
    pub delta_final: f64,
    pub total_queries: u64,
    pub success: bool,
    /// Suboptimality at each configured checkpoint (SGD slope runs only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoint_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p50: f64,
    pub p90: f64,
    pub p95: f64,
    pub p99: f64,
}

impl Quantiles {
    /// Linear-interpolation quantiles of `values` (any order, non-empty).
    pub fn of(values: &[f64]) -> Quantiles {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Quantiles {
            p50: quantile_sorted(&sorted, 0.5),
            p90: quantile_sorted(&sorted, 0.9),
            p95: quantile_sorted(&sorted, 0.95),
            p99: quantile_sorted(&sorted, 0.99),
        }
    }
}

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    #[serde(rename = "T")]
    pub iterations: u64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum TheoryRecord {
    Gd(GdTheory),
    Sgd(SgdTheory),
}

/// Aggregate of one experiment, written after its trial records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub schema_version: u32,
    /// Always `"summary"`.
    pub record: String,
    pub kind: String,
    pub trials: u64,
    pub master_seed: u64,
    pub d: usize,
    #[serde(rename = "L")]
    pub smoothness: f64,
    pub mu: f64,
    pub sigma: f64,
    pub n_components: usize,
    #[serde(rename = "T")]
    pub iterations: u64,
    #[serde(rename = "T0")]
    pub warmup_offset: Option<f64>,
    pub alpha: f64,
    pub eps: f64,
    pub delta: f64,
    pub delta_0: f64,
    pub empirical_failure_rate: f64,
    pub quantiles: Quantiles,
    /// Log-log slope of the median suboptimality against `T` over the checkpoints.
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<CheckpointSummary>,
    pub theory: TheoryRecord,
    pub wall_time_seconds: f64,
}

impl TrialSummary {
    /// JSON text with `wall_time_seconds` zeroed, for reproducibility comparisons.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.wall_time_seconds = 0.0;
        serde_json::to_string(&copy).expect("summary serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaRecord {
    pub schema_version: u32,
    /// Always `"lemma"`.
    pub record: String,
    pub master_seed: u64,
    #[serde(flatten)]
    pub report: LemmaReport,
    pub wall_time_seconds: f64,
}

/// Single writer for a JSONL results file.
pub struct JsonlSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlSink {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|source| Error::Output { path: path.to_path_buf(), source })?;
        }
        let file = File::create(path).map_err(|source| Error::Output { path: path.to_path_buf(), source })?;
        Ok(JsonlSink { path: path.to_path_buf(), out: BufWriter::new(file) })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out
            .write_all(b"\n")
            .map_err(|source| Error::Output { path: self.path.clone(), source })
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|source| Error::Output { path: self.path.clone(), source })
    }
}

/// Flat projection of a summary for spreadsheet and plotting tools.
#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    kind: &'a str,
    trials: u64,
    master_seed: u64,
    d: usize,
    #[serde(rename = "L")]
    smoothness: f64,
    mu: f64,
    sigma: f64,
    #[serde(rename = "T")]
    iterations: u64,
    alpha: f64,
    eps: f64,
    delta: f64,
    delta_0: f64,
    empirical_failure_rate: f64,
    p50: f64,
    p90: f64,
    p95: f64,
    p99: f64,
    slope: Option<f64>,
    wall_time_seconds: f64,
}

/// Writes summary rows to `path` as CSV.
pub fn write_summary_csv(path: &Path, summaries: &[TrialSummary]) -> Result<()> {
    let io = |e: csv::Error| Error::Output { path: path.to_path_buf(), source: e.into() };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for s in summaries {
        w.serialize(SummaryRow {
            kind: &s.kind,
            trials: s.trials,
            master_seed: s.master_seed,
            d: s.d,
            smoothness: s.smoothness,
            mu: s.mu,
            sigma: s.sigma,
            iterations: s.iterations,
            alpha: s.alpha,
            eps: s.eps,
            delta: s.delta,
            delta_0: s.delta_0,
            empirical_failure_rate: s.empirical_failure_rate,
            p50: s.quantiles.p50,
            p90: s.quantiles.p90,
            p95: s.quantiles.p95,
            p99: s.quantiles.p99,
            slope: s.slope,
            wall_time_seconds: s.wall_time_seconds,
        })
        .map_err(io)?;
    }
    w.flush().map_err(|source| Error::Output { path: path.to_path_buf(), source })
}

/// `path` with its extension replaced by `csv`.
pub fn csv_path_for(path: &Path) -> PathBuf {
    path.with_extension("csv")
}
