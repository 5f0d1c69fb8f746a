//! Reproduces the per-block latency experiment: a seeded RBAC workload in
//! random-size groups through a local multi-node network.

pub mod calibrate;
pub mod config;
pub mod run;
pub mod workload;

pub use calibrate::{calibrate_difficulty, Calibration};
pub use config::{BenchConfig, GroupLaw};
pub use run::{run_benchmark, write_csv, BenchRecord, BenchReport, Summary};

/// Default calibration target in seconds per block.
pub const DEFAULT_TARGET_S: (f64, f64) = (1.1, 2.8);
