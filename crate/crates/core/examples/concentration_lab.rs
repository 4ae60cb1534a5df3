//! Monte Carlo checks of the probability inequalities the bounds rest on.
//! Each line shows the observed violation rate next to the claimed one.
//!
//! cargo run --example concentration_lab

use zograd::harness::{validate_lemma, LemmaConfig, LEMMA_NAMES};
use zograd::RngStream;

fn main() -> zograd::Result<()> {
    let mut rng = RngStream::new(2024);
    let params = LemmaConfig { n_samples: Some(50_000), ..LemmaConfig::default() };
    for name in LEMMA_NAMES {
        let delta = if name == "suffix_uniform" { 0.1 } else { 0.05 };
        let r = validate_lemma(name, &params, delta, 500, &mut rng)?;
        println!(
            "{name:<18} trials={:<6} violations={:<4} rate={:.4} claimed={:.3} {}",
            r.trials,
            r.violations,
            r.empirical_rate,
            r.claimed_delta,
            if r.passes() { "ok" } else { "VIOLATED" }
        );
    }
    Ok(())
}
