//! Estimators for name complexity, Birkhoff pseudo-metrics, mean
//! equicontinuity and Koopman orbit geometry on a catalog of
//! measure-preserving systems.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cover;
pub mod equicontinuity;
pub mod error;
pub mod exec;
pub mod metrics;
pub mod pairwise;
pub mod partition;
pub mod plan;
pub mod spectral;
pub mod stats;
pub mod systems;

pub use error::{Error, Result};
pub use plan::RandomPlan;
