//! Scenario file format.
//!
//! A scenario is a single JSON document. Units live in the field names
//! (`_ms`, `_m`, `_deg`) and unknown fields are rejected at any depth.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::face::TrackerConfig;
use crate::gesture::GestureConfig;
use crate::scene::camera::CameraModel;
use crate::scene::world::{Actor, NoiseModel, Scenario, SignalEvent, TriggerRecord};
use crate::types::Modality;
use crate::uwb::UwbConfig;
use crate::vlc::decoder::VlcConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Tunables for every pipeline stage. Every field has a default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub tracker: TrackerConfig,
    pub gesture: GestureConfig,
    pub vlc: VlcConfig,
    pub uwb: UwbConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSpec {
    #[serde(default)]
    pub condition: String,
    #[serde(default = "one")]
    pub repetitions: u32,
}

fn one() -> u32 {
    1
}

impl Default for TrialSpec {
    fn default() -> Self {
        TrialSpec { condition: String::new(), repetitions: 1 }
    }
}

/// Thresholds checked by `run --check`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    #[serde(default)]
    pub min_accuracy: Option<f64>,
    #[serde(default)]
    pub max_false_positive_rate: Option<f64>,
    /// Inclusive bounds every measured latency must fall in.
    #[serde(default)]
    pub latency_ms: Option<[f64; 2]>,
}

fn default_hand_range() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub camera: CameraModel,
    pub duration_ms: f64,
    /// Active signaling modality; a list so that files naming several are
    /// caught with a clear error rather than a type mismatch.
    pub modalities: Vec<Modality>,
    pub actors: Vec<Actor>,
    #[serde(default)]
    pub events: Vec<SignalEvent>,
    #[serde(default)]
    pub ble_triggers: Vec<TriggerRecord>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub trial: TrialSpec,
    #[serde(default)]
    pub expect: Option<Expectations>,
    #[serde(default)]
    pub config: PipelineConfig,
    #[serde(default = "default_hand_range")]
    pub hand_max_range_m: f64,
}

impl ScenarioFile {
    /// The single active modality. Only valid after [`parse_scenario`].
    pub fn modality(&self) -> Modality {
        self.modalities[0]
    }

    pub fn to_scenario(&self) -> Scenario {
        let mut s = Scenario::new(self.camera, self.duration_ms);
        s.actors = self.actors.clone();
        s.events = self.events.clone();
        s.injected_triggers = self.ble_triggers.clone();
        s.noise = self.noise;
        s.hand_max_range_m = self.hand_max_range_m;
        s.swipe_threshold_factor = self.config.gesture.min_swipe_distance_factor;
        s.packet_format = self.config.vlc.packet_format;
        s
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        use ScenarioError as E;
        if self.schema_version != SCHEMA_VERSION {
            return Err(E::SchemaVersion(self.schema_version));
        }
        if self.modalities.len() != 1 {
            return Err(E::Modalities(self.modalities.len()));
        }
        let modality = self.modalities[0];
        self.camera.validate()?;
        if !(self.duration_ms > 0.0 && self.duration_ms.is_finite()) {
            return Err(E::invalid("duration_ms", "must be positive"));
        }
        if !(self.hand_max_range_m > 0.0) {
            return Err(E::invalid("hand_max_range_m", "must be positive"));
        }
        self.noise.is_valid().map_err(|m| E::invalid("noise", m))?;
        if self.trial.repetitions == 0 {
            return Err(E::invalid("trial.repetitions", "must be at least 1"));
        }
        self.config.uwb.validate().map_err(|m| E::invalid("config.uwb", m))?;
        if self.config.vlc.max_active_paths == 0 {
            return Err(E::invalid("config.vlc.max_active_paths", "must be at least 1"));
        }
        if self.config.vlc.packet_format.payload_bits < 2 || self.config.vlc.packet_format.payload_bits > 16 {
            return Err(E::invalid("config.vlc.packet_format.payload_bits", "must lie in [2, 16]"));
        }

        let mut ids = BTreeSet::new();
        let mut macs = BTreeSet::new();
        for (i, a) in self.actors.iter().enumerate() {
            let field = |name: &str| format!("actors[{i}].{name}");
            if a.id.is_empty() {
                return Err(E::invalid(field("id"), "must not be empty"));
            }
            if !ids.insert(a.id.as_str()) {
                return Err(E::invalid(field("id"), format!("duplicate actor id `{}`", a.id)));
            }
            if !(a.face_height_m > 0.0) {
                return Err(E::invalid(field("face_height_m"), "must be positive"));
            }
            if a.trajectory.0.is_empty() {
                return Err(E::invalid(field("trajectory"), "needs at least one waypoint"));
            }
            if a.trajectory.0.windows(2).any(|w| w[1].t_ms < w[0].t_ms) {
                return Err(E::invalid(field("trajectory"), "waypoints must be in time order"));
            }
            if let Some(tag) = a.uwb_tag {
                if !macs.insert(tag.mac) {
                    return Err(E::invalid(field("uwb_tag.mac"), format!("duplicate mac {}", tag.mac)));
                }
            }
        }

        for (i, e) in self.events.iter().enumerate() {
            let Some(actor) = self.actors.iter().find(|a| a.id == e.actor_id) else {
                return Err(E::UnknownActor { index: i, actor: e.actor_id.clone() });
            };
            if e.modality != modality {
                return Err(E::invalid(
                    format!("events[{i}].modality"),
                    format!("`{}` is not the active modality `{}`", e.modality.as_str(), modality.as_str()),
                ));
            }
            if !(e.time_ms >= 0.0 && e.time_ms.is_finite()) {
                return Err(E::invalid(format!("events[{i}].time_ms"), "must be non-negative"));
            }
            if !(e.gesture_duration_ms >= 0.0) {
                return Err(E::invalid(format!("events[{i}].gesture_duration_ms"), "must be non-negative"));
            }
            let (has, device) = match e.modality {
                Modality::Gesture => (actor.hand.is_some(), "hand"),
                Modality::Vlc => (actor.led.is_some(), "led"),
                Modality::Uwb => (actor.uwb_tag.is_some(), "uwb_tag"),
            };
            if !has {
                return Err(E::invalid(
                    format!("events[{i}]"),
                    format!("actor `{}` has no {device}", actor.id),
                ));
            }
        }

        for (i, t) in self.ble_triggers.iter().enumerate() {
            if modality != Modality::Uwb {
                return Err(E::invalid("ble_triggers", "only valid when the active modality is uwb"));
            }
            if !(t.command == 0x01 || t.command == 0x02) {
                return Err(E::invalid(format!("ble_triggers[{i}].command"), "must be 1 (blur) or 2 (unblur)"));
            }
            if !(t.time_ms >= 0.0) {
                return Err(E::invalid(format!("ble_triggers[{i}].time_ms"), "must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    file.validate()?;
    Ok(file)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile, ScenarioError> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "duration_ms": 3000,
        "modalities": ["vlc"],
        "actors": [{"id": "alice", "trajectory": [{"t_ms": 0, "position_m": [0, 0, 3]}], "led": {}}],
        "events": [{"time_ms": 500, "actor_id": "alice", "modality": "vlc", "command": "blur"}]
    }"#;

    #[test]
    fn minimal_file_parses() {
        let f = parse_scenario(MINIMAL).unwrap();
        assert_eq!(f.modality(), Modality::Vlc);
        assert_eq!(f.trial.repetitions, 1);
        let s = f.to_scenario();
        assert_eq!(s.actors.len(), 1);
        assert_eq!(s.actors[0].led.unwrap().offset_m.y, 0.35);
    }

    #[test]
    fn unknown_actor_is_named() {
        let text = MINIMAL.replace(r#""actor_id": "alice""#, r#""actor_id": "mallory""#);
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(&err, ScenarioError::UnknownActor { actor, index: 0 } if actor == "mallory"));
        assert!(err.to_string().contains("mallory"));
    }

    #[test]
    fn two_modalities_rejected() {
        let text = MINIMAL.replace(r#"["vlc"]"#, r#"["vlc", "uwb"]"#);
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Modalities(2))));
        let text = MINIMAL.replace(r#"["vlc"]"#, "[]");
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Modalities(0))));
    }

    #[test]
    fn unknown_field_reports_location() {
        let text = MINIMAL.replace(r#""duration_ms": 3000,"#, "\"duration_ms\": 3000,\n \"durration\": 1,");
        match parse_scenario(&text) {
            Err(ScenarioError::Syntax { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("durration"));
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn event_modality_must_match() {
        let text = MINIMAL.replace(r#""modality": "vlc""#, r#""modality": "uwb""#);
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::Invalid { .. })));
    }

    #[test]
    fn actor_needs_the_device() {
        let text = MINIMAL.replace(r#", "led": {}"#, "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("no led"), "{err}");
    }

    #[test]
    fn schema_version_checked() {
        let text = MINIMAL.replace(r#""schema_version": 1"#, r#""schema_version": 7"#);
        assert!(matches!(parse_scenario(&text), Err(ScenarioError::SchemaVersion(7))));
    }
}
