//! Finite-scale invariants of dynamical systems: separated, spanning and
//! covering counts under Bowen metrics, box and metric-order dimensions,
//! metric mean dimension, dynamical metric order, and quantization of
//! atomic measures under Wasserstein and Lévy-Prokhorov metrics.

pub mod cli_harness;
pub mod error;
pub mod estimators;
pub mod measures;
pub mod metric_core;
pub mod systems;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
