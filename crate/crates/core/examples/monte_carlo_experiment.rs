//! A seeded multi-trial experiment from a TOML config, written to JSONL.
//!
//! cargo run --example monte_carlo_experiment [config.toml]

use zograd::harness::{run_experiment, ExperimentConfig};

const DEFAULT: &str = r#"
kind = "gd"
trials = 50
master_seed = 42

[problem]
d = 10
mu = 0.1

[target]
eps = 1e-6
delta = 0.05
eps_relative = true
"#;

fn main() -> zograd::Result<()> {
    let mut cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::from_file(path.as_ref())?,
        None => ExperimentConfig::from_toml_str(DEFAULT)?,
    };
    let out = std::env::temp_dir().join("zograd_monte_carlo.jsonl");
    cfg.output_path = Some(out.clone());
    cfg.csv = true;

    let s = run_experiment(&cfg)?;
    println!("{} trials of {} in d = {}: T = {}, alpha = {:.3e}", s.trials, s.kind, s.d, s.iterations, s.alpha);
    println!("failure rate {:.4} (delta = {})", s.empirical_failure_rate, s.delta);
    println!("final gap quantiles p50 {:.3e}  p90 {:.3e}  p99 {:.3e}", s.quantiles.p50, s.quantiles.p90, s.quantiles.p99);
    println!("records in {}", out.display());
    Ok(())
}
