//! Face tracking, distance estimation and per-face privacy state.

use serde::{Deserialize, Serialize};

use crate::assign::greedy_assign;
use crate::error::ModelError;
use crate::geometry::{NormPoint, NormRect};
use crate::scene::camera::CameraModel;
use crate::scene::models;
use crate::types::{FaceId, PrivacyCommand, PrivacyState};

/// Stateless per-frame detector output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceDetection {
    pub bbox: NormRect,
    pub confidence: f64,
    /// Index of the actor that produced this detection. Ground truth for
    /// scoring only; the tracker never reads it.
    #[serde(skip)]
    pub source: Option<usize>,
}

impl FaceDetection {
    pub fn new(bbox: NormRect) -> Self {
        FaceDetection { bbox, confidence: 1.0, source: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedFace {
    pub face_id: FaceId,
    pub bbox: NormRect,
    pub centroid: NormPoint,
    pub last_seen_ms: f64,
    pub privacy_state: PrivacyState,
    /// Set by the gesture modality after a recognized swipe.
    pub face_cooldown_until_ms: f64,
    pub last_state_change_ms: Option<f64>,
}

impl TrackedFace {
    pub fn new(face_id: FaceId, bbox: NormRect, now_ms: f64) -> Self {
        TrackedFace {
            face_id,
            bbox,
            centroid: bbox.centroid(),
            last_seen_ms: now_ms,
            privacy_state: PrivacyState::Clear,
            face_cooldown_until_ms: f64::NEG_INFINITY,
            last_state_change_ms: None,
        }
    }

    pub fn height_px(&self, camera: &CameraModel) -> f64 {
        self.bbox.h * camera.height_px as f64
    }

    pub fn width_px(&self, camera: &CameraModel) -> f64 {
        self.bbox.w * camera.width_px as f64
    }

    /// Distance implied by the current bounding-box height.
    pub fn distance_m(&self, camera: &CameraModel) -> Result<f64, ModelError> {
        estimate_distance_from_face(self.height_px(camera))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Maximum centroid distance (normalized) for a detection to continue a track.
    pub match_threshold: f64,
    pub prune_after_ms: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig { match_threshold: 0.25, prune_after_ms: 1000.0 }
    }
}

/// What one tracker update did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaceUpdate {
    /// Track assigned to each detection, in detection order.
    pub assignments: Vec<FaceId>,
    pub created: Vec<FaceId>,
    /// Tracks pruned this frame for staleness.
    pub lost: Vec<FaceId>,
}

/// Associate one frame of detections with `tracks`.
///
/// Stale tracks (unseen for longer than `prune_after_ms`) are pruned first,
/// then detections are matched greedily by ascending centroid distance.
/// Unmatched detections open new tracks with ids taken from `next_id`.
pub fn track_faces(
    tracks: &mut Vec<TrackedFace>,
    next_id: &mut u64,
    detections: &[FaceDetection],
    now_ms: f64,
    cfg: &TrackerConfig,
) -> FaceUpdate {
    let mut update = FaceUpdate::default();
    tracks.retain(|t| {
        let stale = now_ms - t.last_seen_ms > cfg.prune_after_ms;
        if stale {
            update.lost.push(t.face_id);
        }
        !stale
    });

    let ranks: Vec<u64> = tracks.iter().map(|t| t.face_id.0).collect();
    let centroids: Vec<NormPoint> = detections.iter().map(|d| d.bbox.centroid()).collect();
    let matched = greedy_assign(&ranks, detections.len(), cfg.match_threshold, |t, d| {
        tracks[t].centroid.distance(&centroids[d])
    });

    for (d, det) in detections.iter().enumerate() {
        let id = match matched[d] {
            Some(t) => {
                let track = &mut tracks[t];
                track.bbox = det.bbox;
                track.centroid = centroids[d];
                track.last_seen_ms = now_ms;
                track.face_id
            }
            None => {
                let id = FaceId(*next_id);
                *next_id += 1;
                tracks.push(TrackedFace::new(id, det.bbox, now_ms));
                update.created.push(id);
                id
            }
        };
        update.assignments.push(id);
    }
    update
}

/// Owning wrapper around [`track_faces`].
#[derive(Debug, Clone, Default)]
pub struct FaceTracker {
    pub cfg: TrackerConfig,
    tracks: Vec<TrackedFace>,
    next_id: u64,
}

impl FaceTracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        FaceTracker { cfg, tracks: Vec::new(), next_id: 1 }
    }

    pub fn update(&mut self, detections: &[FaceDetection], now_ms: f64) -> FaceUpdate {
        track_faces(&mut self.tracks, &mut self.next_id, detections, now_ms, &self.cfg)
    }

    pub fn tracks(&self) -> &[TrackedFace] {
        &self.tracks
    }

    pub fn tracks_mut(&mut self) -> &mut [TrackedFace] {
        &mut self.tracks
    }

    pub fn get(&self, id: FaceId) -> Option<&TrackedFace> {
        self.tracks.iter().find(|t| t.face_id == id)
    }

    pub fn get_mut(&mut self, id: FaceId) -> Option<&mut TrackedFace> {
        self.tracks.iter_mut().find(|t| t.face_id == id)
    }

    pub fn is_live(&self, id: FaceId) -> bool {
        self.get(id).is_some()
    }
}

pub fn estimate_distance_from_face(bbox_height_px: f64) -> Result<f64, ModelError> {
    models::distance_from_face_height(bbox_height_px)
}

/// A privacy-state transition on one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateChange {
    pub face_id: FaceId,
    pub from: PrivacyState,
    pub to: PrivacyState,
    pub t_ms: f64,
}

/// Set the face's privacy state. Commands are idempotent: a command that
/// matches the current state returns `None` and leaves the track untouched.
pub fn apply_privacy_command(track: &mut TrackedFace, command: PrivacyCommand, now_ms: f64) -> Option<StateChange> {
    let target = command.target_state();
    if track.privacy_state == target {
        return None;
    }
    let change = StateChange { face_id: track.face_id, from: track.privacy_state, to: target, t_ms: now_ms };
    track.privacy_state = target;
    track.last_state_change_ms = Some(now_ms);
    Some(change)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annotation {
    pub face_id: FaceId,
    pub bbox: NormRect,
    pub privacy_state: PrivacyState,
}

/// Per-face render instructions (stand-in for the blur pass).
pub fn render_annotations(tracks: &[TrackedFace]) -> Vec<Annotation> {
    tracks
        .iter()
        .map(|t| Annotation { face_id: t.face_id, bbox: t.bbox, privacy_state: t.privacy_state })
        .collect()
}
