//! Nearness-context inference over Bluetooth, accelerometer and microphone
//! traces.
//!
//! Four pipelines turn raw sensor samples into per-minute features:
//! proximity (contact detection and social strength), relative distance
//! (path-loss inversion smoothed by an EMA), motion (accelerometer
//! magnitude spread) and environmental sound (amplitude level bands). The
//! [`fusion`] module combines them into the propinquity and
//! social-interaction scores for every pair of nodes, and [`store`] keeps
//! only those per-minute results.
//!
//! The [`simulator`] produces deterministic synthetic traces together with
//! the ground truth used by the tests.
//!
//! The numeric kernels (path loss, EMA, motion feature, fusion) are generic
//! over [`Real`]; the aliases below pin them to `f64` and `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod engine;
pub mod error;
pub mod fusion;
pub mod ingest;
pub mod pipelines;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod simulator;
pub mod store;

pub use domain::{
    canonical_pair, AccelSample, BtSighting, Distance, MinuteRecord, Motion, Nearness, NodeId,
    SensorSample, SoundClass, SoundSample, Tick,
};
pub use engine::{Engine, EngineParams};
pub use error::{Error, Result};
pub use fusion::FusionParams;
pub use ingest::TraceSet;
pub use pipelines::distance::DistanceState;
pub use scalar::Real;
pub use simulator::{RfParams, ScenarioConfig};
pub use store::RecordLog;

/// Fusion parameters in double precision.
pub type FusionParams64 = FusionParams<f64>;
/// Fusion parameters in single precision.
pub type FusionParams32 = FusionParams<f32>;
/// Radio parameters in double precision.
pub type RfParams64 = RfParams<f64>;
/// Radio parameters in single precision.
pub type RfParams32 = RfParams<f32>;
/// Per-pair EMA distance state in double precision.
pub type DistanceState64 = DistanceState<f64>;
/// Per-pair EMA distance state in single precision.
pub type DistanceState32 = DistanceState<f32>;
/// Distance value in double precision, as persisted in minute records.
pub type Distance64 = Distance<f64>;
