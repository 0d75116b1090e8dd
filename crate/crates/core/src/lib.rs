//! Simulation and verification of the sub-critical reflected Langevin process.
//!
//! A particle whose velocity is a Brownian motion moves on the half line and
//! bounces at 0, keeping a fraction `c` of its incoming speed. For
//! `c < exp(-π/√3)` the bounces accumulate and the particle is absorbed at
//! `(0, 0)` in finite time. The crate samples the bounce skeleton exactly,
//! integrates full paths, and estimates the tail quantities governed by the
//! exponent `k(c)`.

pub mod analytic;
pub mod error;
pub mod ladder;
pub mod numerics;
pub mod path;
pub mod rng;
pub mod skeleton;
pub mod stats;
pub mod verify;

pub use analytic::{ModelParams, StateKU};
pub use error::{Error, Result};
