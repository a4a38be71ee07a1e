//! Simulation harness: true densities, grid metrics, replicated
//! experiments, and file I/O.

pub mod experiment;
pub mod io;
pub mod metrics;
pub mod truth;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport, ReplicationResult};
pub use metrics::{grid_metrics, metric_grid, GridErrors};
pub use truth::TrueDensity;
