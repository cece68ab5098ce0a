//! Dataset generation, ground truth, and recall/throughput sweeps for the
//! `tsdg` crate.

pub mod config;
mod error;
pub mod runner;
pub mod synthetic;
pub mod truth;

pub use config::BenchConfig;
pub use error::{Error, Result};
pub use runner::{run_bench, BenchReport, BenchRow};
pub use synthetic::{make_synthetic, GaussianMixture};
pub use truth::{ground_truth, recall_at_k, GroundTruth};
