use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable supplying the master seed when neither the config
/// file nor the command line does.
pub const SEED_ENV: &str = "ZOGRAD_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Gd,
    Sgd,
    Lemma,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Gd => "gd",
            Kind::Sgd => "sgd",
            Kind::Lemma => "lemma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    /// `x0 = 0`.
    #[default]
    Zero,
    /// `x0 = x*`.
    Optimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub smoothness: f64,
    pub mu: f64,
    pub sigma: f64,
    pub n_components: usize,
    pub x0_mode: StartMode,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig { d: 10, smoothness: 1.0, mu: 0.1, sigma: 1.0, n_components: 20, x0_mode: StartMode::Zero }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub eps: f64,
    pub delta: f64,
    /// Interpret `eps` as a fraction of the initial suboptimality.
    pub eps_relative: bool,
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig { eps: 1e-3, delta: 0.05, eps_relative: false }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OverrideConfig {
    #[serde(rename = "T")]
    pub iterations: Option<u64>,
    pub alpha: Option<f64>,
    pub c_alpha: Option<f64>,
    #[serde(rename = "c_T")]
    pub c_t: Option<f64>,
}

/// Parameters for `kind = "lemma"`; unset fields take per-lemma defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaConfig {
    pub name: Option<String>,
    pub d: Option<usize>,
    pub n_samples: Option<u64>,
    pub ks: bool,
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<u64>,
    pub k_dof: Option<u64>,
    #[serde(rename = "K")]
    pub k_outer: Option<u64>,
    #[serde(rename = "T0")]
    pub warmup_offset: Option<f64>,
    pub sigma: Option<f64>,
    pub n_weights: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub trials: u64,
    pub master_seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    /// Also write a CSV projection of summary records next to `output_path`.
    pub csv: bool,
    /// Worker threads; `None` uses all cores.
    pub parallelism: Option<usize>,
    /// SGD only: record the suboptimality at these iteration counts.
    pub checkpoints: Vec<u64>,
    /// SGD only: run one trajectory per checkpoint instead of reading all
    /// checkpoints off a single long run.
    pub independent_runs: bool,
    pub problem: ProblemConfig,
    pub target: TargetConfig,
    pub overrides: OverrideConfig,
    pub lemma: LemmaConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: Kind::Gd,
            trials: 100,
            master_seed: None,
            output_path: None,
            csv: false,
            parallelism: None,
            checkpoints: Vec::new(),
            independent_runs: false,
            problem: ProblemConfig::default(),
            target: TargetConfig::default(),
            overrides: OverrideConfig::default(),
            lemma: LemmaConfig::default(),
        }
    }
}

/// Values supplied on the command line; each one that is set wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub out: Option<PathBuf>,
    pub csv: bool,
    pub parallelism: Option<usize>,
    pub c_alpha: Option<f64>,
    pub c_t: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| format!("bytes {}..{}", s.start, s.end)).unwrap_or_else(|| "<file>".into());
            Error::config(field, e.message().to_string())
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Layers a config: defaults, then the file (if any), then
    /// `ZOGRAD_SEED` for an unset seed, then the command line. Validates the result.
    pub fn resolve(file: Option<&Path>, cli: &CliOverrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        if cfg.master_seed.is_none() {
            if let Ok(v) = std::env::var(SEED_ENV) {
                let seed = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(SEED_ENV, format!("not an unsigned 64-bit integer: {v:?}")))?;
                cfg.master_seed = Some(seed);
            }
        }
        cfg.apply(cli);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, cli: &CliOverrides) {
        if let Some(s) = cli.seed {
            self.master_seed = Some(s);
        }
        if let Some(t) = cli.trials {
            self.trials = t;
        }
        if let Some(e) = cli.eps {
            self.target.eps = e;
        }
        if let Some(d) = cli.delta {
            self.target.delta = d;
        }
        if let Some(o) = &cli.out {
            self.output_path = Some(o.clone());
        }
        self.csv |= cli.csv;
        if let Some(p) = cli.parallelism {
            self.parallelism = Some(p);
        }
        if let Some(c) = cli.c_alpha {
            self.overrides.c_alpha = Some(c);
        }
        if let Some(c) = cli.c_t {
            self.overrides.c_t = Some(c);
        }
    }

    pub fn seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    pub fn c_alpha(&self) -> f64 {
        self.overrides.c_alpha.unwrap_or(1.0)
    }

    pub fn c_t(&self) -> f64 {
        self.overrides.c_t.unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        }
        fn unit(field: &str, v: f64) -> Result<()> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::config(field, format!("must lie in (0, 1), got {v}")))
            }
        }

        if self.trials < 1 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.parallelism == Some(0) {
            return Err(Error::config("parallelism", "must be at least 1"));
        }
        unit("target.eps", self.target.eps)?;
        unit("target.delta", self.target.delta)?;
        if let Some(a) = self.overrides.alpha {
            positive("overrides.alpha", a)?;
        }
        if let Some(c) = self.overrides.c_alpha {
            positive("overrides.c_alpha", c)?;
        }
        if let Some(c) = self.overrides.c_t {
            positive("overrides.c_T", c)?;
        }
        if self.kind == Kind::Lemma {
            return Ok(());
        }

        let p = &self.problem;
        if p.d < 1 {
            return Err(Error::config("problem.d", "must be at least 1"));
        }
        positive("problem.mu", p.mu)?;
        positive("problem.L", p.smoothness)?;
        if p.smoothness < p.mu {
            return Err(Error::config("problem.L", format!("must be at least mu = {}, got {}", p.mu, p.smoothness)));
        }
        if self.kind == Kind::Sgd {
            if !(p.sigma.is_finite() && p.sigma >= 0.0) {
                return Err(Error::config("problem.sigma", format!("must be nonnegative, got {}", p.sigma)));
            }
            if p.n_components < 2 {
                return Err(Error::config("problem.n_components", "must be at least 2"));
            }
            if self.checkpoints.contains(&0) {
                return Err(Error::config("checkpoints", "entries must be positive"));
            }
            if self.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config("checkpoints", "must be strictly increasing"));
            }
        }
        Ok(())
    }
}
