//! Run configuration, seeded training runs, sweeps, gradient checks and plots.
//!
//! Randomness derives from one master seed per run. The init, training and
//! evaluation streams are separate ChaCha8 streams of that seed (see
//! [`run::rng_stream`]), so changing the evaluation protocol never perturbs
//! training.

pub mod check;
pub mod config;
pub mod plot;
pub mod records;
pub mod run;
pub mod sweep;

pub use config::{preset, RunConfig, PRESETS};
pub use records::{AggregateRecord, IterationRecord, RunRecord};
pub use run::{output_root, run, train, RunSummary, TrainOutput, OUTPUT_ROOT_VAR};
