//! Interference-aware performance modeling for co-located workloads.
//!
//! The pipeline goes: ingest isolated per-resource utilization profiles,
//! cluster applications by resource signature, learn a stressor prediction
//! model for co-located mixes, explore the utilization space with Latin
//! Hypercube Sampling, build a knowledge base of stressor combinations, and
//! train per-application QoS interference models. A deterministic synthetic
//! contention oracle stands in for physical-testbed measurement so the whole
//! loop runs at desk scale.

pub mod cluster;
pub mod config;
pub mod design;
pub mod error;
pub mod interference;
pub mod oracle;
pub mod profile;
pub mod regression;
pub mod seed;
pub mod stressor;

pub use error::{Error, Result};
