//! Zeroth-order optimization with high-probability guarantees.
//!
//! The crate implements two-point random gradient estimators, zeroth-order
//! gradient descent and SGD on strongly convex test problems, closed-form
//! iteration counts and bounds for both methods, Monte Carlo validators for
//! the concentration inequalities behind those bounds, and a seeded
//! experiment harness.
//!
//! ```
//! use zograd::numerics::{RngStream, Vector};
//! use zograd::objectives::{make_quadratic, Objective};
//! use zograd::optimizers::{run_zo_gd, ZoGdConfig};
//!
//! let q = make_quadratic(5, 0.5, 1.0, &mut RngStream::new(1)).unwrap();
//! let cfg = ZoGdConfig { iterations: 500, alpha: 1e-6, x0: Vector::zeros(5), seed: 7 };
//! let traj = run_zo_gd(&q, &cfg).unwrap();
//! assert!(traj.final_suboptimality() < traj.initial_suboptimality());
//! assert_eq!(traj.total_queries, 1000);
//! ```

pub mod concentration;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod numerics;
pub mod objectives;
pub mod optimizers;
pub mod theory;

pub use error::{Error, Result};
pub use numerics::{RngStream, Vector};
