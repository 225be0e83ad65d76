//! Wagner-style discrete Gaussian sampling over SIS lattices.
//!
//! The crate builds a chain of projected q-ary lattices, lifts vectors through
//! it with exact Gaussian rounding and combines pairs that share a coset. On
//! top of the sampler sit SIS solvers, parameter schedules and a heuristic
//! attack-cost estimator.

pub mod chain;
pub mod cli;
pub mod dgauss;
pub mod error;
pub mod estimator;
pub mod rng;
pub mod solvers;
pub mod wagner;
pub mod zqlin;

pub use error::{Error, Result};
