//! Simulated world: camera, actors, size models and frame synthesis.

pub mod camera;
pub mod models;
pub mod rng;
pub mod synth;
pub mod world;

pub use camera::{CameraModel, Projection};
pub use synth::{synthesize_frame, FrameObservation, Synthesizer};
pub use world::{Actor, NoiseModel, Scenario, SignalEvent, Trajectory, TriggerRecord};
