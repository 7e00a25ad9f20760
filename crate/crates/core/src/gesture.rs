//! Hand tracking and swipe recognition with signal-source validation.
//!
//! A swipe fires for a hand/face pair only when all of these hold:
//! horizontal travel within the recent history reaches a fraction of the
//! face width, the palm stays in a band around the face for the whole
//! travel, neither the hand nor the face is cooling down, and the distance
//! implied by the fingertip span agrees with the one implied by the face.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::assign::greedy_assign;
use crate::face::TrackedFace;
use crate::geometry::NormPoint;
use crate::scene::camera::CameraModel;
use crate::scene::models::{distance_from_hand_span, relative_mismatch};
use crate::types::{FaceId, HandId, PrivacyCommand};

/// The five landmarks the recognizer consumes, normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HandObservation {
    pub wrist: NormPoint,
    pub index_mcp: NormPoint,
    pub pinky_mcp: NormPoint,
    pub index_tip: NormPoint,
    pub pinky_tip: NormPoint,
}

impl HandObservation {
    /// Fingertip span in pixels.
    pub fn span_px(&self, camera: &CameraModel) -> f64 {
        let dx = (self.index_tip.x - self.pinky_tip.x) * camera.width_px as f64;
        let dy = (self.index_tip.y - self.pinky_tip.y) * camera.height_px as f64;
        dx.hypot(dy)
    }
}

/// Mean of the wrist and the index/pinky MCP joints.
pub fn palm_center(obs: &HandObservation) -> NormPoint {
    NormPoint::new(
        (obs.wrist.x + obs.index_mcp.x + obs.pinky_mcp.x) / 3.0,
        (obs.wrist.y + obs.index_mcp.y + obs.pinky_mcp.y) / 3.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PalmSample {
    pub t_ms: f64,
    pub palm: NormPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedHand {
    pub hand_id: HandId,
    pub wrist: NormPoint,
    pub last_seen_ms: f64,
    /// Palm positions, oldest first, strictly increasing in time.
    pub history: VecDeque<PalmSample>,
    pub hand_cooldown_until_ms: f64,
    pub latest: HandObservation,
}

impl TrackedHand {
    fn new(hand_id: HandId, obs: HandObservation, now_ms: f64) -> Self {
        let mut history = VecDeque::new();
        history.push_back(PalmSample { t_ms: now_ms, palm: palm_center(&obs) });
        TrackedHand {
            hand_id,
            wrist: obs.wrist,
            last_seen_ms: now_ms,
            history,
            hand_cooldown_until_ms: f64::NEG_INFINITY,
            latest: obs,
        }
    }

    fn observe(&mut self, obs: HandObservation, now_ms: f64) {
        self.wrist = obs.wrist;
        self.latest = obs;
        self.last_seen_ms = now_ms;
        if self.history.back().is_none_or(|s| s.t_ms < now_ms) {
            self.history.push_back(PalmSample { t_ms: now_ms, palm: palm_center(&obs) });
        }
    }

    fn evict(&mut self, now_ms: f64, max_age_ms: f64) {
        while self.history.front().is_some_and(|s| now_ms - s.t_ms > max_age_ms) {
            self.history.pop_front();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GestureConfig {
    pub history_max_age_ms: f64,
    /// Required horizontal travel as a fraction of face width.
    pub min_swipe_distance_factor: f64,
    /// Vertical band around the face bbox, as a fraction of face height.
    pub vertical_tolerance_factor: f64,
    pub cooldown_ms: f64,
    /// Wrist match gate, normalized units.
    pub hand_match_max_distance: f64,
    pub geo_tolerance: f64,
    /// Hands unseen this long are dropped.
    pub prune_after_ms: f64,
    /// Treat leftward image motion as Blur (bystander body frame).
    pub mirror: bool,
}

impl Default for GestureConfig {
    fn default() -> Self {
        GestureConfig {
            history_max_age_ms: 300.0,
            min_swipe_distance_factor: 0.8,
            vertical_tolerance_factor: 0.5,
            cooldown_ms: 1500.0,
            hand_match_max_distance: 0.1,
            geo_tolerance: 0.10,
            prune_after_ms: 300.0,
            mirror: false,
        }
    }
}

/// Match one frame of hand observations to `tracks` by wrist distance and
/// append palm samples. Returns the hand id assigned to each observation.
pub fn track_hands(
    tracks: &mut Vec<TrackedHand>,
    next_id: &mut u64,
    observations: &[HandObservation],
    now_ms: f64,
    cfg: &GestureConfig,
) -> Vec<HandId> {
    tracks.retain(|h| now_ms - h.last_seen_ms <= cfg.prune_after_ms);

    let ranks: Vec<u64> = tracks.iter().map(|h| h.hand_id.0).collect();
    let matched = greedy_assign(&ranks, observations.len(), cfg.hand_match_max_distance, |t, d| {
        tracks[t].wrist.distance(&observations[d].wrist)
    });

    let mut ids = Vec::with_capacity(observations.len());
    for (d, obs) in observations.iter().enumerate() {
        match matched[d] {
            Some(t) => {
                tracks[t].observe(*obs, now_ms);
                ids.push(tracks[t].hand_id);
            }
            None => {
                let id = HandId(*next_id);
                *next_id += 1;
                tracks.push(TrackedHand::new(id, *obs, now_ms));
                ids.push(id);
            }
        }
    }
    for h in tracks.iter_mut() {
        h.evict(now_ms, cfg.history_max_age_ms);
    }
    ids
}

#[derive(Debug, Clone, Default)]
pub struct HandTracker {
    tracks: Vec<TrackedHand>,
    next_id: u64,
}

impl HandTracker {
    pub fn new() -> Self {
        HandTracker { tracks: Vec::new(), next_id: 1 }
    }

    pub fn update(&mut self, observations: &[HandObservation], now_ms: f64, cfg: &GestureConfig) -> Vec<HandId> {
        track_hands(&mut self.tracks, &mut self.next_id, observations, now_ms, cfg)
    }

    pub fn tracks(&self) -> &[TrackedHand] {
        &self.tracks
    }

    pub fn get_mut(&mut self, id: HandId) -> Option<&mut TrackedHand> {
        self.tracks.iter_mut().find(|h| h.hand_id == id)
    }
}

/// The face whose bbox centroid is nearest the hand's wrist. Ties go to the
/// lower face id.
pub fn associate_face(hand: &TrackedHand, faces: &[TrackedFace]) -> Option<FaceId> {
    faces
        .iter()
        .map(|f| (f.centroid.distance(&hand.wrist), f.face_id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SwipeDecision {
    /// No qualifying displacement in the history.
    NoSwipe,
    /// A swipe qualified but the hand or face is cooling down.
    CoolingDown,
    /// Hand and face distances disagree beyond tolerance.
    Inconsistent { hand_m: f64, face_m: f64 },
    Fired(PrivacyCommand),
}

/// Largest qualifying horizontal displacement ending at the newest sample,
/// requiring every sample in between to sit inside the vertical band.
fn best_displacement(hand: &TrackedHand, face: &TrackedFace, cfg: &GestureConfig) -> Option<f64> {
    let current = hand.history.back()?;
    let band = cfg.vertical_tolerance_factor * face.bbox.h;
    let (lo, hi) = (face.bbox.top() - band, face.bbox.bottom() + band);
    let in_zone = |p: &NormPoint| p.y >= lo && p.y <= hi;
    if !in_zone(&current.palm) {
        return None;
    }
    let threshold = cfg.min_swipe_distance_factor * face.bbox.w;

    let mut best: Option<f64> = None;
    for sample in hand.history.iter().rev().skip(1) {
        if !in_zone(&sample.palm) {
            break;
        }
        let dx = current.palm.x - sample.palm.x;
        if dx.abs() >= threshold && best.is_none_or(|b| dx.abs() > b.abs()) {
            best = Some(dx);
        }
    }
    best
}

/// Full recognizer. On `Fired`, both cooldowns are armed and the hand's
/// history is cleared. A geometric rejection also clears the history so the
/// same motion is not re-evaluated on every following frame.
pub fn evaluate_swipe(
    hand: &mut TrackedHand,
    face: &mut TrackedFace,
    now_ms: f64,
    cfg: &GestureConfig,
    camera: &CameraModel,
) -> SwipeDecision {
    let Some(dx) = best_displacement(hand, face, cfg) else {
        return SwipeDecision::NoSwipe;
    };
    if now_ms < hand.hand_cooldown_until_ms || now_ms < face.face_cooldown_until_ms {
        return SwipeDecision::CoolingDown;
    }

    let hand_m = distance_from_hand_span(hand.latest.span_px(camera)).unwrap_or(f64::INFINITY);
    let face_m = face.distance_m(camera).unwrap_or(f64::NAN);
    if !(relative_mismatch(hand_m, face_m) <= cfg.geo_tolerance) {
        hand.history.clear();
        return SwipeDecision::Inconsistent { hand_m, face_m };
    }

    let rightward = dx > 0.0;
    let command = if rightward != cfg.mirror { PrivacyCommand::Blur } else { PrivacyCommand::Unblur };
    hand.hand_cooldown_until_ms = now_ms + cfg.cooldown_ms;
    face.face_cooldown_until_ms = now_ms + cfg.cooldown_ms;
    hand.history.clear();
    SwipeDecision::Fired(command)
}

pub fn recognize_swipe(
    hand: &mut TrackedHand,
    face: &mut TrackedFace,
    now_ms: f64,
    cfg: &GestureConfig,
    camera: &CameraModel,
) -> Option<PrivacyCommand> {
    match evaluate_swipe(hand, face, now_ms, cfg, camera) {
        SwipeDecision::Fired(c) => Some(c),
        _ => None,
    }
}
