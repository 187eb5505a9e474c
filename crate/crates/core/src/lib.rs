//! Mach-Zehnder interaction-free measurement with an absorber that may be
//! held in a macroscopic superposition.
//!
//! * [`interferometer`]: exact single-photon and photon⊗absorber evolution.
//! * [`scenario`]: the competing absorber models and their click probabilities.
//! * [`monte_carlo`]: seeded, range-splittable trial runner.
//! * [`analysis`]: phase quadrature, Wilson intervals and exact binomial design.
//! * [`cli`]: the `mz-absorber` command-line surface.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod interferometer;
pub mod monte_carlo;
pub mod scenario;

pub use error::{Error, Result};
