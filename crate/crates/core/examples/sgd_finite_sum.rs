//! Zeroth-order SGD on a finite-sum quadratic with the decaying step size
//! `2d / (mu (t + T0) ||u||^2)` and `alpha = 1 / sqrt(d (T + T0))`.
//!
//! cargo run --example sgd_finite_sum

use zograd::objectives::{make_finite_sum, StochasticObjective};
use zograd::optimizers::{run_zo_sgd, ZoSgdConfig};
use zograd::theory::sgd_constants;
use zograd::{RngStream, Vector};

fn main() -> zograd::Result<()> {
    let (d, smoothness, mu, sigma, n) = (10, 1.0, 0.1, 1.0, 20);
    let horizon = 1u64 << 16;
    let mut rng = RngStream::new(3);
    let f = make_finite_sum(d, mu, smoothness, sigma, n, &mut rng)?;
    println!("{n} components, max noise {:.3}", f.noise_bound());

    let x0 = Vector::zeros(d);
    let theory = sgd_constants(d, smoothness, mu, sigma, horizon, 1.0, 0.05)?;
    println!("T0 = {}, alpha = {:.3e}", theory.warmup_offset, theory.alpha);

    let cfg = ZoSgdConfig { iterations: horizon as usize, warmup_offset: theory.warmup_offset, alpha: theory.alpha, x0, seed: 11 };
    let traj = run_zo_sgd(&f, &cfg)?;
    let mut t = 1usize << 10;
    while t <= traj.iterations() {
        let delta = traj.suboptimality[t];
        println!("  T = {t:>6}  Delta_T = {delta:.3e}  (T + T0) Delta_T = {:.3}", (t as f64 + theory.warmup_offset) * delta);
        t *= 2;
    }
    println!("queries used: {}", traj.total_queries);
    Ok(())
}
