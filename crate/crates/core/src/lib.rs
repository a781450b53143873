//! Pose-space MCMC for sampling grasp affordances.

pub mod error;
pub mod gdmc;
pub mod geometry;
pub mod harness;
pub mod kameleon;
pub mod kernel;
pub mod metrics;
pub mod rng;
pub mod rwmh;
pub mod targets;

pub use error::{Error, Result};
