//! Clipped stochastic proximal gradient methods for composite problems with
//! heavy-tailed gradient noise.
//!
//! The objective is `F = f + h` with `f` smooth and
//! `h = λ‖x‖₁ + ι_{[l,u]}`. Stochastic gradients are clipped coordinate-wise
//! before the proximal step; see [`solvers::run_spgm`] (iterate averaging)
//! and [`solvers::run_spgm_momentum`] (momentum).

pub mod biasvar;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod problems;
pub mod quad;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
