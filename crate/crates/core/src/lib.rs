//! Bregman gradient policy optimization.
//!
//! This crate implements momentum-based (BGPO) and variance-reduced (VR-BGPO)
//! mirror-descent policy optimization, together with everything needed to run
//! them end to end without an external ML framework:
//!
//! - [`mirror`]: Bregman distances, prox (mirror-descent) steps and Bregman
//!   gradients for the Euclidean, ℓp-norm, diagonal-adaptive and
//!   negative-entropy mirror maps.
//! - [`mlp`] and [`policy`]: small tanh MLPs with hand-written reverse-mode
//!   gradients, and categorical / Gaussian / tabular policies with exact score
//!   functions, plus a value network.
//! - [`env`]: CartPole, MountainCarContinuous, Pendulum and finite tabular
//!   MDPs, rollouts, and an exact dynamic-programming policy-gradient oracle
//!   for tabular MDPs.
//! - [`estimate`]: REINFORCE, PGT and GAE estimators, importance weights and
//!   value-network fitting.
//! - [`optim`]: the BGPO / VR-BGPO iteration, step-size and momentum schedules.
//! - [`harness`]: run configuration, presets, seeded training runs, seed
//!   sweeps, gradient checks and SVG plots.
//!
//! See the crate's `examples/` directory for one runnable program per capability.

pub mod env;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod mirror;
pub mod mlp;
pub mod optim;
pub mod params;
pub mod policy;

pub use error::{Error, Result};
pub use params::ParamVector;
