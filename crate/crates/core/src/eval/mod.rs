//! Metrics and experiment drivers.

pub mod experiment;
pub mod metrics;
