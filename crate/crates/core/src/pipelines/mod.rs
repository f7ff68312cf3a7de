//! Per-minute feature extraction: proximity, relative distance, motion,
//! environmental sound and node degree.

pub mod contact;
pub mod degree;
pub mod distance;
pub mod motion;
pub mod social;
pub mod sound;

pub use contact::{detect_contacts, ContactEvent, ContactParams, ContactTracker};
pub use degree::{node_degree, DegreeTracker};
pub use distance::{ema_update, estimate_distance_raw, DistanceState, DistanceTracker};
pub use motion::{classify_motion, MotionParams, MotionTracker};
pub use social::SocialStrengthState;
pub use sound::{classify_sound, SoundParams, SoundTracker};

use serde::Serialize;

/// Tunables of all pipelines. Defaults are the documented assumptions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineParams {
    pub contact: ContactParams,
    /// EMA weight of the newest distance estimate.
    pub alpha: f64,
    /// A pair without a sighting for longer than this has no distance.
    pub stale_after_ms: u64,
    pub motion: MotionParams,
    pub sound: SoundParams,
    pub degree_window_ms: u64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            contact: ContactParams::default(),
            alpha: 0.3,
            stale_after_ms: 300_000,
            motion: MotionParams::default(),
            sound: SoundParams::default(),
            degree_window_ms: 120_000,
        }
    }
}
