//! Zeroth-order gradient descent on a random quadratic with the horizon and
//! smoothing radius taken from the high-probability bound.
//!
//! cargo run --example gd_quadratic

use zograd::objectives::{make_quadratic, Objective, SmoothFunction};
use zograd::optimizers::{run_zo_gd, ZoGdConfig};
use zograd::theory::GdTheory;
use zograd::{RngStream, Vector};

fn main() -> zograd::Result<()> {
    let (d, smoothness, mu) = (20, 1.0, 0.1);
    let mut rng = RngStream::new(7);
    let f = make_quadratic(d, mu, smoothness, &mut rng)?;

    let x0 = Vector::zeros(d);
    let delta0 = f.value(&x0) - f.optimum_value();
    let eps = 1e-6 * delta0;
    let plan = GdTheory::new(d, smoothness, mu, delta0, eps, 0.05, 1.0)?;
    println!("Delta0 = {delta0:.4}, target eps = {eps:.3e}");
    println!("T = {} iterations ({} queries), alpha = {:.3e}", plan.iterations, 2 * plan.iterations, plan.alpha);

    let traj = run_zo_gd(&f, &ZoGdConfig { iterations: plan.iterations as usize, alpha: plan.alpha, x0, seed: 1 })?;

    for t in [0, 100, 1_000, 5_000, 10_000, 20_000, traj.iterations()] {
        println!("  t = {t:>6}  f(x_t) - f* = {:.3e}", traj.suboptimality[t]);
    }
    let certificate = traj.contraction_bound(smoothness, mu, plan.alpha);
    println!("final {:.3e} <= path certificate {:.3e} <= eps: {}", traj.final_suboptimality(), certificate, certificate <= eps);
    Ok(())
}
