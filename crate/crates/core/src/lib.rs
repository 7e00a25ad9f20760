//! Bystander privacy signaling: face tracking plus three signaling
//! modalities (hand swipe, LED beacon, BLE-triggered UWB ranging), a frame
//! synthesizer and an evaluation harness.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assign;
pub mod error;
pub mod face;
pub mod geometry;
pub mod harness;
pub mod gesture;
pub mod scene;
pub mod types;
pub mod uwb;
pub mod vlc;

pub use error::{BurstError, ModelError, PacketError, ScenarioError};
pub use face::{FaceDetection, FaceTracker, TrackedFace, TrackerConfig};
pub use geometry::{NormPoint, NormRect, PixelPoint, PixelRect, Vec3};
pub use gesture::{GestureConfig, HandObservation, HandTracker};
pub use scene::{Actor, CameraModel, FrameObservation, NoiseModel, Scenario, SignalEvent};
pub use types::{FaceId, HandId, Mac, Modality, PrivacyCommand, PrivacyState};
pub use uwb::{BleTrigger, RangingReading, UwbConfig, UwbManager};
pub use vlc::{PacketFormat, VlcConfig, VlcDecoder};
