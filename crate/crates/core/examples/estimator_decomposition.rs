//! The two-point estimate splits as `g = u u^T grad f(x) + beta u`. On a
//! quadratic the residual `beta` is zero up to rounding, and averaging many
//! estimates recovers the gradient.
//!
//! cargo run --example estimator_decomposition

use zograd::estimators::{beta_residual, two_point_estimate, DirectionSample, QueryCounter};
use zograd::objectives::{make_quadratic, SmoothFunction};
use zograd::{RngStream, Vector};

fn main() -> zograd::Result<()> {
    let d = 8;
    let mut rng = RngStream::new(5);
    let f = make_quadratic(d, 0.2, 1.0, &mut rng)?;
    let x = Vector::from_vec((0..d).map(|i| i as f64 * 0.5).collect());
    let grad = f.gradient(&x);

    let dir = DirectionSample::draw(d, &mut rng)?;
    let est = two_point_estimate(&f, &x, 1e-3, &dir)?;
    println!("quotient = {:.6}, u^T grad = {:.6}", est.quotient, zograd::numerics::dot(dir.u(), &grad)?);
    println!("beta = {:.3e}", beta_residual(&f, &x, 1e-3, &dir)?);

    let mut counter = QueryCounter::default();
    let mut mean = Vector::zeros(d);
    let samples = 200_000;
    for _ in 0..samples {
        let dir = DirectionSample::draw(d, &mut rng)?;
        let est = two_point_estimate(&f, &x, 1e-3, &dir)?;
        counter.record(&est);
        mean.axpy(1.0 / samples as f64, &est.g);
    }
    let mut err = mean.clone();
    err.axpy(-1.0, &grad);
    println!("{} queries: ||mean g - grad|| / ||grad|| = {:.4}", counter.total(), err.norm() / grad.norm());
    Ok(())
}
