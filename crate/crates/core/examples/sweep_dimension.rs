//! Planned horizon against dimension at fixed condition number.
//!
//! cargo run --example sweep_dimension

use zograd::harness::{sweep, ExperimentConfig, Kind, ProblemConfig, TargetConfig};

fn main() -> zograd::Result<()> {
    let base = ExperimentConfig {
        kind: Kind::Gd,
        trials: 20,
        master_seed: Some(1),
        problem: ProblemConfig { smoothness: 1.0, mu: 0.1, ..ProblemConfig::default() },
        target: TargetConfig { eps: 1e-6, delta: 0.05, eps_relative: true },
        ..ExperimentConfig::default()
    };
    let result = sweep(&base, "d", &[5.0, 10.0, 20.0, 40.0])?;
    for s in &result.summaries {
        println!("d = {:>3}  T = {:>6}  failure rate {:.3}  median gap {:.2e}", s.d, s.iterations, s.empirical_failure_rate, s.quantiles.p50);
    }
    let fit = result.iterations_fit.expect("four points");
    println!("T ~ {:.1} d + {:.1}   r^2 = {:.6}", fit.slope, fit.intercept, fit.r_squared);
    Ok(())
}
