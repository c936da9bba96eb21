//! Flow-record intrusion detection and automated response.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below pin the common `f64` instantiations.

pub mod artifact;
pub mod ensemble;
pub mod error;
pub mod explain;
pub mod flow_model;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod scalar;
pub mod sentinel;
pub mod synth;

pub use error::{Error, Result};
pub use flow_model::{AttackGroup, FlowRecord, LabeledDataset, N_CLASSES};
pub use scalar::Scalar;

pub type Dataset = LabeledDataset<f64>;
pub type Dataset32 = LabeledDataset<f32>;
pub type Plan = preprocess::PreprocessPlan<f64>;
