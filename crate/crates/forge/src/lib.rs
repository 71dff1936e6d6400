//! Experiment runner for the kummer crate: a registry of named experiments,
//! deterministic seeded sweeps, slope fits, CSV/JSON report emission, and
//! baseline comparison. The `forge` binary is a thin wrapper over this
//! library.

pub mod experiments;
pub mod fit;
pub mod report;

pub use experiments::{default_config, registry_names, run_experiment, ExperimentConfig};
pub use fit::{fit_slope, SlopeFit};
pub use report::{compare_baseline, CompareOutcome, ExperimentReport};
