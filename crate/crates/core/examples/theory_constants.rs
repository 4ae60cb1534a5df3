//! Planned horizons, smoothing radii and the constants behind the
//! stochastic bound.
//!
//! cargo run --example theory_constants

use zograd::harness::complexity_table;
use zograd::theory::{gd_alpha_branches, sgd_constants, GdTheory, CLOSURE_C_ALPHA};

fn main() -> zograd::Result<()> {
    let plan = GdTheory::new(20, 1.0, 0.1, 1.0, 1e-6, 0.05, 1.0)?;
    let (a, b) = gd_alpha_branches(20, 1.0, 0.1, 1e-6, 0.05, plan.iterations)?;
    println!("gd: T = {}, alpha branches {a:.3e} / {b:.3e}", plan.iterations);
    println!("    bound at plan with c_alpha = 1: {:.3e}", plan.planned_bound()?);
    let tight = GdTheory::new(20, 1.0, 0.1, 1.0, 1e-6, 0.05, CLOSURE_C_ALPHA)?;
    println!("    bound at plan with c_alpha = {CLOSURE_C_ALPHA}: {:.3e}", tight.planned_bound()?);

    let th = sgd_constants(10, 1.0, 0.5, 1.0, 1000, 5.0, 0.1)?;
    println!("sgd: T0 = {}, Lambda = {:.4}, c_rho = {:.4}, c_delta = {:.4}", th.warmup_offset, th.lambda, th.c_rho, th.c_delta);
    println!("     C = {:.4e} from terms {:?}", th.curly_c, th.curly_c_terms);
    for k in [0, 250, 500, 1000] {
        println!("     k = {k:>4}: Delta_k <= {:.4e} with probability >= {:.3}", th.delta_threshold(k), 1.0 - th.envelope_failure_probability(k));
    }

    println!();
    println!("{:>5} {:>6} {:>8} {:>10} {:>12}", "d", "kappa", "eps", "gd_T", "sgd_T");
    for r in complexity_table(&[10, 100], &[10.0, 100.0], &[1e-3, 1e-6], &[0.05], 1.0, 1.0)? {
        println!("{:>5} {:>6} {:>8.0e} {:>10} {:>12}", r.d, r.kappa, r.eps, r.gd_iterations, r.sgd_iterations);
    }
    Ok(())
}
