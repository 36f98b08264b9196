//! Experiment runner for clipped stochastic proximal gradient methods:
//! bias-variance grids, solver sweeps and the iteration-bound calculators,
//! driven by a JSON config and writing CSV plus plot scripts.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod instance;
pub mod output;
pub mod parallel;
pub mod plots;

pub use error::{CliError, CliResult};
