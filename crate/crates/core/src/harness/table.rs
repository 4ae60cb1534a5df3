use serde::Serialize;

use crate::error::Result;
use crate::theory::{gd_alpha, gd_iterations, sgd_query_complexity};

/// Planned iteration counts and smoothing radii for one parameter tuple,
/// with `L = 1`, `mu = 1 / kappa` and `Delta0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityRow {
    pub d: usize,
    pub kappa: f64,
    pub eps: f64,
    pub delta: f64,
    pub gd_iterations: u64,
    pub gd_queries: u64,
    pub gd_alpha: f64,
    pub sgd_iterations: u64,
    pub sgd_queries: u64,
    pub sgd_warmup: f64,
    pub sgd_alpha: f64,
}

/// One row per element of the grid `ds x kappas x epss x deltas`.
pub fn complexity_table(
    ds: &[usize],
    kappas: &[f64],
    epss: &[f64],
    deltas: &[f64],
    c_alpha: f64,
    c_t: f64,
) -> Result<Vec<ComplexityRow>> {
    let mut rows = Vec::new();
    for &d in ds {
        for &kappa in kappas {
            let (l, mu) = (1.0, 1.0 / kappa);
            for &eps in epss {
                for &delta in deltas {
                    let gd_t = gd_iterations(d, l, mu, 1.0, eps, delta)?;
                    let sgd_t = sgd_query_complexity(d, eps, delta, c_t)?;
                    let t0 = 16.0 * d as f64 * l / mu;
                    rows.push(ComplexityRow {
                        d,
                        kappa,
                        eps,
                        delta,
                        gd_iterations: gd_t,
                        gd_queries: 2 * gd_t,
                        gd_alpha: gd_alpha(d, l, mu, eps, delta, gd_t.max(2), c_alpha)?,
                        sgd_iterations: sgd_t,
                        sgd_queries: 2 * sgd_t,
                        sgd_warmup: t0,
                        sgd_alpha: 1.0 / (d as f64 * (sgd_t as f64 + t0)).sqrt(),
                    });
                }
            }
        }
    }
    Ok(rows)
}
