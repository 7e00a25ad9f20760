use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::scene::camera::CameraModel;
use crate::scene::models::DEFAULT_FACE_HEIGHT_M;
use crate::types::{Mac, Modality, PrivacyCommand};
use crate::vlc::codec::PacketFormat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t_ms: f64,
    pub position_m: Vec3,
}

/// Piecewise-linear path through camera-relative space. Held constant
/// before the first and after the last waypoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory(pub Vec<Waypoint>);

impl Trajectory {
    pub fn fixed(position: Vec3) -> Self {
        Trajectory(vec![Waypoint { t_ms: 0.0, position_m: position }])
    }

    /// Constant-velocity walk starting at `start` at `t0_ms`.
    pub fn walking(start: Vec3, velocity_m_per_s: Vec3, t0_ms: f64, t1_ms: f64) -> Self {
        let secs = (t1_ms - t0_ms) / 1000.0;
        let end = Vec3::new(
            start.x + velocity_m_per_s.x * secs,
            start.y + velocity_m_per_s.y * secs,
            start.z + velocity_m_per_s.z * secs,
        );
        Trajectory(vec![
            Waypoint { t_ms: t0_ms, position_m: start },
            Waypoint { t_ms: t1_ms, position_m: end },
        ])
    }

    pub fn position(&self, t_ms: f64) -> Vec3 {
        let pts = &self.0;
        match pts.len() {
            0 => Vec3::default(),
            1 => pts[0].position_m,
            _ => {
                if t_ms <= pts[0].t_ms {
                    return pts[0].position_m;
                }
                for pair in pts.windows(2) {
                    let (a, b) = (&pair[0], &pair[1]);
                    if t_ms <= b.t_ms {
                        let span = b.t_ms - a.t_ms;
                        let s = if span > 0.0 { (t_ms - a.t_ms) / span } else { 1.0 };
                        return a.position_m.lerp(&b.position_m, s);
                    }
                }
                pts[pts.len() - 1].position_m
            }
        }
    }

    /// Speed in m/s at `t_ms` (0 outside the waypoint span).
    pub fn speed(&self, t_ms: f64) -> f64 {
        for pair in self.0.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if t_ms >= a.t_ms && t_ms < b.t_ms && b.t_ms > a.t_ms {
                let d = Vec3::new(
                    b.position_m.x - a.position_m.x,
                    b.position_m.y - a.position_m.y,
                    b.position_m.z - a.position_m.z,
                );
                return d.norm() / ((b.t_ms - a.t_ms) / 1000.0);
            }
        }
        0.0
    }
}

fn default_led_offset() -> Vec3 {
    Vec3::new(0.0, 0.35, 0.0)
}

fn default_tag_offset() -> Vec3 {
    Vec3::new(0.0, 0.05, 0.0)
}

fn default_face_height() -> f64 {
    DEFAULT_FACE_HEIGHT_M
}

fn yes() -> bool {
    true
}

/// Torso-worn OOK beacon. Offset is relative to the face center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedBeacon {
    #[serde(default = "default_led_offset")]
    pub offset_m: Vec3,
}

impl Default for LedBeacon {
    fn default() -> Self {
        Self { offset_m: default_led_offset() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UwbTag {
    pub mac: Mac,
    #[serde(default = "default_tag_offset")]
    pub offset_m: Vec3,
}

/// Rest pose of the signaling hand's palm center, relative to the face center.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandRig {
    #[serde(default)]
    pub offset_m: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub start_ms: f64,
    pub end_ms: f64,
}

impl TimeWindow {
    pub fn contains(&self, t_ms: f64) -> bool {
        t_ms >= self.start_ms && t_ms < self.end_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub id: String,
    pub trajectory: Trajectory,
    #[serde(default = "default_face_height")]
    pub face_height_m: f64,
    /// False for an actor whose face never appears (e.g. an off-screen attacker).
    #[serde(default = "yes")]
    pub face_visible: bool,
    /// Windows during which the face is occluded.
    #[serde(default)]
    pub hidden_ms: Vec<TimeWindow>,
    #[serde(default)]
    pub led: Option<LedBeacon>,
    #[serde(default)]
    pub uwb_tag: Option<UwbTag>,
    #[serde(default)]
    pub hand: Option<HandRig>,
}

impl Actor {
    pub fn new(id: impl Into<String>, position: Vec3) -> Self {
        Actor {
            id: id.into(),
            trajectory: Trajectory::fixed(position),
            face_height_m: DEFAULT_FACE_HEIGHT_M,
            face_visible: true,
            hidden_ms: Vec::new(),
            led: None,
            uwb_tag: None,
            hand: None,
        }
    }

    pub fn with_led(mut self) -> Self {
        self.led = Some(LedBeacon::default());
        self
    }

    pub fn with_tag(mut self, mac: Mac) -> Self {
        self.uwb_tag = Some(UwbTag { mac, offset_m: default_tag_offset() });
        self
    }

    pub fn with_hand(mut self) -> Self {
        self.hand = Some(HandRig::default());
        self
    }

    pub fn face_position(&self, t_ms: f64) -> Vec3 {
        self.trajectory.position(t_ms)
    }

    pub fn face_shown(&self, t_ms: f64) -> bool {
        self.face_visible && !self.hidden_ms.iter().any(|w| w.contains(t_ms))
    }
}

fn default_gesture_duration() -> f64 {
    // five frames at 30 FPS
    5000.0 / 30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalEvent {
    pub time_ms: f64,
    pub actor_id: String,
    pub modality: Modality,
    pub command: PrivacyCommand,
    #[serde(default = "default_gesture_duration")]
    pub gesture_duration_ms: f64,
}

impl SignalEvent {
    pub fn new(time_ms: f64, actor_id: impl Into<String>, modality: Modality, command: PrivacyCommand) -> Self {
        SignalEvent {
            time_ms,
            actor_id: actor_id.into(),
            modality,
            command,
            gesture_duration_ms: default_gesture_duration(),
        }
    }
}

/// A raw BLE trigger injected into the stream, independent of any signal
/// event. Command is the wire byte (0x01 blur, 0x02 unblur).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerRecord {
    pub time_ms: f64,
    pub mac: Mac,
    pub command: u8,
}

/// Post-projection noise. All probabilities are per frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub face_dropout_prob: f64,
    /// Standard deviation of face centroid jitter, normalized units.
    pub bbox_jitter_sigma: f64,
    pub hand_dropout_prob: f64,
    pub blob_dropout_prob: f64,
    /// Expected false blobs per frame around each visible torso.
    pub false_blob_rate: f64,
    /// Per-frame probability that a transmitting beacon on a moving actor
    /// is observed in the wrong state (motion smear).
    pub motion_glitch_prob: f64,
    pub uwb_angle_sigma_deg: f64,
    pub uwb_distance_sigma_m: f64,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub fn is_valid(&self) -> Result<(), &'static str> {
        for p in [
            self.face_dropout_prob,
            self.hand_dropout_prob,
            self.blob_dropout_prob,
            self.motion_glitch_prob,
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err("probabilities must lie in [0, 1]");
            }
        }
        for s in [
            self.bbox_jitter_sigma,
            self.false_blob_rate,
            self.uwb_angle_sigma_deg,
            self.uwb_distance_sigma_m,
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err("rates and sigmas must be finite and non-negative");
            }
        }
        Ok(())
    }
}

/// Everything the synthesizer needs to render a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub camera: CameraModel,
    pub actors: Vec<Actor>,
    pub events: Vec<SignalEvent>,
    pub injected_triggers: Vec<TriggerRecord>,
    pub noise: NoiseModel,
    pub duration_ms: f64,
    /// Hands farther than this are not detected.
    pub hand_max_range_m: f64,
    /// Swipe threshold as a fraction of face width; scripted swipes travel
    /// 1.2x this distance.
    pub swipe_threshold_factor: f64,
    pub packet_format: PacketFormat,
}

impl Scenario {
    pub fn new(camera: CameraModel, duration_ms: f64) -> Self {
        Scenario {
            camera,
            actors: Vec::new(),
            events: Vec::new(),
            injected_triggers: Vec::new(),
            noise: NoiseModel::default(),
            duration_ms,
            hand_max_range_m: 3.0,
            swipe_threshold_factor: 0.8,
            packet_format: PacketFormat::default(),
        }
    }

    pub fn actor_index(&self, id: &str) -> Option<usize> {
        self.actors.iter().position(|a| a.id == id)
    }

    pub fn frame_count(&self) -> u64 {
        (self.duration_ms / self.camera.frame_period_ms()).floor() as u64 + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_interpolates_and_clamps() {
        let t = Trajectory(vec![
            Waypoint { t_ms: 0.0, position_m: Vec3::new(0.0, 0.0, 1.0) },
            Waypoint { t_ms: 1000.0, position_m: Vec3::new(1.0, 0.0, 1.0) },
        ]);
        assert_eq!(t.position(-5.0), Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(t.position(500.0), Vec3::new(0.5, 0.0, 1.0));
        assert_eq!(t.position(2000.0), Vec3::new(1.0, 0.0, 1.0));
        assert!((t.speed(500.0) - 1.0).abs() < 1e-12);
        assert_eq!(t.speed(1500.0), 0.0);
    }

    #[test]
    fn walking_covers_expected_distance() {
        let t = Trajectory::walking(Vec3::new(0.0, 0.0, 3.0), Vec3::new(0.0, 0.0, -1.2), 0.0, 1000.0);
        assert!((t.position(1000.0).z - 1.8).abs() < 1e-12);
        assert!((t.speed(10.0) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn noise_validation() {
        let mut n = NoiseModel::default();
        assert!(n.is_valid().is_ok());
        n.face_dropout_prob = 1.5;
        assert!(n.is_valid().is_err());
    }
}
