//! Per-frame observation synthesis.
//!
//! Ground truth comes from actor trajectories sampled at mid-exposure.
//! Apparent sizes follow the inverse-distance size models evaluated at the
//! Euclidean range of each body part; positions follow the pinhole camera.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::camera::CameraModel;
use super::models::{face_pixel_height, hand_keypoint_span, led_blob_area, FACE_ASPECT};
use super::rng::{stream_rng, Stream};
use super::world::{Actor, Scenario, SignalEvent};
use crate::face::FaceDetection;
use crate::geometry::{NormPoint, NormRect, PixelPoint, Vec3};
use crate::gesture::HandObservation;
use crate::types::{Modality, PrivacyCommand};
use crate::uwb::{BleTrigger, RangingReading};
use crate::vlc::blob::LuminanceBlob;
use crate::vlc::codec::encode_with_format;

/// The hand is raised and held at its start pose this long before a swipe.
pub const HAND_LEAD_MS: f64 = 200.0;
/// Extra time a hand stays in view after its swipe completes.
pub const HAND_LINGER_MS: f64 = 300.0;
/// Scripted swipes travel this multiple of the recognition threshold.
pub const SWIPE_OVERSHOOT: f64 = 1.2;

/// Everything the pipeline sees on one frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameObservation {
    pub frame: u64,
    pub t_ms: f64,
    pub faces: Vec<FaceDetection>,
    pub hands: Vec<HandObservation>,
    pub emitters: Vec<LuminanceBlob>,
    pub ble_triggers: Vec<BleTrigger>,
}

/// Rendered face of one actor, before noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceRender {
    pub bbox: NormRect,
    pub range_m: f64,
}

pub fn render_face(actor: &Actor, t_ms: f64, camera: &CameraModel) -> Option<FaceRender> {
    let p = actor.face_position(t_ms);
    let proj = camera.project(p)?;
    let range_m = p.norm();
    let h = face_pixel_height(range_m).ok()?;
    let w = h * FACE_ASPECT;
    let (fw, fh) = (camera.width_px as f64, camera.height_px as f64);
    let bbox = NormRect::new((proj.screen.x - w / 2.0) / fw, (proj.screen.y - h / 2.0) / fh, w / fw, h / fh);
    Some(FaceRender { bbox, range_m })
}

/// Landmarks around a palm center for a hand whose fingertip span is
/// `span_px`: wrist below the palm, MCP joints beside it, fingertips above.
pub fn hand_landmarks(palm: NormPoint, span_px: f64, camera: &CameraModel) -> HandObservation {
    let (sx, sy) = (span_px / camera.width_px as f64, span_px / camera.height_px as f64);
    HandObservation {
        wrist: NormPoint::new(palm.x, palm.y + 0.4 * sy),
        index_mcp: NormPoint::new(palm.x - 0.3 * sx, palm.y - 0.2 * sy),
        pinky_mcp: NormPoint::new(palm.x + 0.3 * sx, palm.y - 0.2 * sy),
        index_tip: NormPoint::new(palm.x - 0.5 * sx, palm.y - 0.8 * sy),
        pinky_tip: NormPoint::new(palm.x + 0.5 * sx, palm.y - 0.8 * sy),
    }
}

/// Deterministic synthesizer for one scenario and seed.
#[derive(Debug, Clone)]
pub struct Synthesizer<'a> {
    pub scenario: &'a Scenario,
    pub seed: u64,
    /// Encoded packet per VLC event (indexed like `scenario.events`).
    packets: Vec<Option<Vec<bool>>>,
}

impl<'a> Synthesizer<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64) -> Self {
        let packets = scenario
            .events
            .iter()
            .map(|e| (e.modality == Modality::Vlc).then(|| encode_with_format(e.command, scenario.packet_format)))
            .collect();
        Synthesizer { scenario, seed, packets }
    }

    fn seed(&self) -> u64 {
        self.seed ^ self.scenario.noise.rng_seed
    }

    pub fn frame(&self, n: u64) -> FrameObservation {
        let cam = &self.scenario.camera;
        let t_ms = cam.frame_time_ms(n);
        let ts = cam.exposure_time_ms(n);
        let mut obs = FrameObservation { frame: n, t_ms, ..Default::default() };
        self.faces(n, ts, &mut obs);
        self.hands(n, ts, &mut obs);
        self.emitters(n, ts, &mut obs);
        self.triggers(n, &mut obs);
        obs
    }

    fn faces(&self, n: u64, ts: f64, obs: &mut FrameObservation) {
        let sc = self.scenario;
        let noise = &sc.noise;
        for (i, actor) in sc.actors.iter().enumerate() {
            if !actor.face_shown(ts) {
                continue;
            }
            let Some(face) = render_face(actor, ts, &sc.camera) else {
                continue;
            };
            let mut rng = stream_rng(self.seed(), Stream::Face, n, i as u64);
            if rng.random::<f64>() < noise.face_dropout_prob {
                continue;
            }
            let mut bbox = face.bbox;
            if noise.bbox_jitter_sigma > 0.0 {
                let g = Normal::new(0.0, noise.bbox_jitter_sigma).expect("validated sigma");
                bbox.x += g.sample(&mut rng);
                bbox.y += g.sample(&mut rng);
            }
            obs.faces.push(FaceDetection { bbox, confidence: 1.0, source: Some(i) });
        }
    }

    fn hands(&self, n: u64, ts: f64, obs: &mut FrameObservation) {
        let sc = self.scenario;
        for (k, ev) in sc.events.iter().enumerate() {
            if ev.modality != Modality::Gesture {
                continue;
            }
            let Some(i) = sc.actor_index(&ev.actor_id) else {
                continue;
            };
            let actor = &sc.actors[i];
            let Some(rig) = actor.hand else {
                continue;
            };
            if ts < ev.time_ms - HAND_LEAD_MS || ts > ev.time_ms + ev.gesture_duration_ms + HAND_LINGER_MS {
                continue;
            }
            let face_pos = actor.face_position(ts);
            let hand_pos = face_pos + rig.offset_m;
            let range = hand_pos.norm();
            if range > sc.hand_max_range_m {
                continue;
            }
            let Some(proj) = sc.camera.project(hand_pos) else {
                continue;
            };
            let Ok(span) = hand_keypoint_span(range) else {
                continue;
            };
            let mut rng = stream_rng(self.seed(), Stream::Hand, n, k as u64);
            if rng.random::<f64>() < sc.noise.hand_dropout_prob {
                continue;
            }
            // travel is sized against the width the face itself renders at
            let face_w_px = face_pixel_height(face_pos.norm()).unwrap_or(0.0) * FACE_ASPECT;
            let travel = SWIPE_OVERSHOOT * sc.swipe_threshold_factor * face_w_px;
            let sign = match ev.command {
                PrivacyCommand::Blur => 1.0,
                PrivacyCommand::Unblur => -1.0,
            };
            let progress = swipe_progress(ev, ts);
            let x = proj.screen.x + sign * travel * (progress - 0.5);
            let palm = NormPoint::new(x / sc.camera.width_px as f64, proj.screen.y / sc.camera.height_px as f64);
            obs.hands.push(hand_landmarks(palm, span, &sc.camera));
        }
    }

    fn emitters(&self, n: u64, ts: f64, obs: &mut FrameObservation) {
        let sc = self.scenario;
        let noise = &sc.noise;
        let period = sc.camera.frame_period_ms();
        for (i, actor) in sc.actors.iter().enumerate() {
            let face_shown = actor.face_shown(ts);
            if noise.false_blob_rate > 0.0 && face_shown {
                if let Some(face) = render_face(actor, ts, &sc.camera) {
                    self.false_blobs(n, i, &face, &mut obs.emitters);
                }
            }
            let Some(led) = actor.led else {
                continue;
            };
            let pos = actor.face_position(ts) + led.offset_m;
            let Some(proj) = sc.camera.project(pos) else {
                continue;
            };
            let Ok(area) = led_blob_area(pos.norm()) else {
                continue;
            };
            let bit = self.transmitted_bit(i, ts, period);
            let mut rng = stream_rng(self.seed(), Stream::Led, n, i as u64);
            let (glitch, dropout) = (rng.random::<f64>(), rng.random::<f64>());
            let mut on = bit.unwrap_or(false);
            if bit.is_some() && actor.trajectory.speed(ts) > 0.0 && glitch < noise.motion_glitch_prob {
                on = !on;
            }
            if on && dropout < noise.blob_dropout_prob {
                on = false;
            }
            if on {
                obs.emitters.push(LuminanceBlob { centroid: proj.screen, area_px: area, on, source: Some(i) });
            }
        }
    }

    /// Bit the actor's beacon is sending at scene time `ts`, if any.
    fn transmitted_bit(&self, actor: usize, ts: f64, period: f64) -> Option<bool> {
        let id = &self.scenario.actors[actor].id;
        self.scenario
            .events
            .iter()
            .zip(&self.packets)
            .filter(|(e, _)| e.actor_id == *id && ts >= e.time_ms)
            .find_map(|(e, bits)| {
                let bits = bits.as_ref()?;
                let k = ((ts - e.time_ms) / period).floor() as usize;
                bits.get(k).copied()
            })
    }

    fn false_blobs(&self, n: u64, actor: usize, face: &FaceRender, out: &mut Vec<LuminanceBlob>) {
        let sc = self.scenario;
        let mut rng = stream_rng(self.seed(), Stream::FalseBlob, n, actor as u64);
        let count = Poisson::new(sc.noise.false_blob_rate).map(|p| p.sample(&mut rng) as usize).unwrap_or(0);
        let expected = led_blob_area(face.range_m).unwrap_or(0.0);
        let (fw, fh) = (sc.camera.width_px as f64, sc.camera.height_px as f64);
        let b = face.bbox;
        let c = b.centroid();
        for _ in 0..count {
            let x = (c.x + b.w * (2.0 * rng.random::<f64>() - 1.0)) * fw;
            let y = (b.bottom() + 3.0 * b.h * rng.random::<f64>()) * fh;
            let area = expected * rng.random_range(0.5..1.5);
            out.push(LuminanceBlob { centroid: PixelPoint::new(x, y), area_px: area, on: true, source: None });
        }
    }

    fn triggers(&self, n: u64, obs: &mut FrameObservation) {
        let sc = self.scenario;
        let cam = &sc.camera;
        let delivered_now = |t: f64| cam.first_frame_at_or_after(t) == n;
        for ev in &sc.events {
            if ev.modality != Modality::Uwb || !delivered_now(ev.time_ms) {
                continue;
            }
            let tag = sc.actor_index(&ev.actor_id).and_then(|i| sc.actors[i].uwb_tag);
            if let Some(tag) = tag {
                obs.ble_triggers.push(BleTrigger { t_ms: ev.time_ms, mac: tag.mac, command: ev.command });
            }
        }
        for rec in &sc.injected_triggers {
            if !delivered_now(rec.time_ms) {
                continue;
            }
            if let Some(command) = PrivacyCommand::from_code(rec.command as u16) {
                obs.ble_triggers.push(BleTrigger { t_ms: rec.time_ms, mac: rec.mac, command });
            }
        }
        obs.ble_triggers.sort_by(|a, b| a.t_ms.total_cmp(&b.t_ms).then(a.mac.cmp(&b.mac)));
    }

    /// UWB reading of the tag with `mac` at `t_ms`; `None` when no actor
    /// wears it or the tag is outside the antenna field of view.
    pub fn uwb_reading(&self, mac: crate::types::Mac, t_ms: f64) -> Option<RangingReading> {
        let sc = self.scenario;
        let (i, actor) = sc.actors.iter().enumerate().find(|(_, a)| a.uwb_tag.is_some_and(|t| t.mac == mac))?;
        let tag = actor.uwb_tag?;
        let p = actor.face_position(t_ms) + tag.offset_m;
        let mut r = true_reading(p)?;
        if r.azimuth_deg.abs() > sc.camera.hfov_deg / 2.0 || r.elevation_deg.abs() > sc.camera.vfov_deg / 2.0 {
            return None;
        }
        let noise = &sc.noise;
        if noise.uwb_angle_sigma_deg > 0.0 || noise.uwb_distance_sigma_m > 0.0 {
            let mut rng = stream_rng(self.seed(), Stream::Uwb, t_ms.to_bits(), i as u64);
            let mut gauss = |sigma: f64| if sigma > 0.0 { Normal::new(0.0, sigma).expect("validated sigma").sample(&mut rng) } else { 0.0 };
            r.azimuth_deg += gauss(noise.uwb_angle_sigma_deg);
            r.elevation_deg += gauss(noise.uwb_angle_sigma_deg);
            r.distance_m = (r.distance_m + gauss(noise.uwb_distance_sigma_m)).max(1e-3);
        }
        Some(r)
    }
}

/// Fraction of the swipe completed at `ts`, clamped to `[0, 1]`.
fn swipe_progress(ev: &SignalEvent, ts: f64) -> f64 {
    if ev.gesture_duration_ms <= 0.0 {
        return 1.0;
    }
    ((ts - ev.time_ms) / ev.gesture_duration_ms).clamp(0.0, 1.0)
}

/// Noise-free spherical coordinates of a camera-frame point.
pub fn true_reading(p: Vec3) -> Option<RangingReading> {
    if p.z <= 0.0 {
        return None;
    }
    Some(RangingReading {
        distance_m: p.norm(),
        azimuth_deg: p.x.atan2(p.z).to_degrees(),
        elevation_deg: (-p.y).atan2(p.x.hypot(p.z)).to_degrees(),
    })
}

pub fn synthesize_frame(scenario: &Scenario, frame: u64, seed: u64) -> FrameObservation {
    Synthesizer::new(scenario, seed).frame(frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::models::distance_from_face_height;
    use crate::types::Mac;
    use approx::assert_abs_diff_eq;

    fn scene_with(actor: Actor) -> Scenario {
        let mut s = Scenario::new(CameraModel::default(), 3000.0);
        s.actors.push(actor);
        s
    }

    #[test]
    fn face_size_follows_range() {
        let s = scene_with(Actor::new("a", Vec3::new(0.0, 0.0, 3.0)));
        let f = synthesize_frame(&s, 0, 1);
        assert_eq!(f.faces.len(), 1);
        let h_px = f.faces[0].bbox.h * 960.0;
        assert_abs_diff_eq!(distance_from_face_height(h_px).unwrap(), 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.faces[0].bbox.centroid().x, 0.5, epsilon = 1e-12);
        assert_eq!(f.faces[0].source, Some(0));
    }

    #[test]
    fn actor_behind_or_outside_is_not_seen() {
        let s = scene_with(Actor::new("a", Vec3::new(5.0, 0.0, 1.0)));
        assert!(synthesize_frame(&s, 0, 1).faces.is_empty());
        let s = scene_with(Actor::new("a", Vec3::new(0.0, 0.0, -1.0)));
        assert!(synthesize_frame(&s, 0, 1).faces.is_empty());
    }

    #[test]
    fn beacon_plays_packet_bits_frame_by_frame() {
        let mut s = scene_with(Actor::new("a", Vec3::new(0.0, 0.0, 3.0)).with_led());
        s.events.push(SignalEvent::new(1000.0, "a", Modality::Vlc, PrivacyCommand::Blur));
        let synth = Synthesizer::new(&s, 9);
        let first = s.camera.first_frame_at_or_after(1000.0) + 1;
        let seen: Vec<bool> = (first..first + 18).map(|n| !synth.frame(n).emitters.is_empty()).collect();
        assert_eq!(seen, encode_with_format(PrivacyCommand::Blur, s.packet_format));
        assert!(synth.frame(first - 1).emitters.is_empty());
        assert!(synth.frame(first + 18).emitters.is_empty());
    }

    #[test]
    fn hand_beyond_range_is_withheld() {
        let mut s = scene_with(Actor::new("a", Vec3::new(0.0, 0.0, 3.5)).with_hand());
        s.events.push(SignalEvent::new(100.0, "a", Modality::Gesture, PrivacyCommand::Blur));
        assert!((0..20).all(|n| synthesize_frame(&s, n, 1).hands.is_empty()));
        s.actors[0].trajectory = crate::scene::world::Trajectory::fixed(Vec3::new(0.0, 0.0, 2.0));
        assert!((0..20).any(|n| !synthesize_frame(&s, n, 1).hands.is_empty()));
    }

    #[test]
    fn swipe_travel_exceeds_threshold() {
        let mut s = scene_with(Actor::new("a", Vec3::new(0.0, 0.0, 1.0)).with_hand());
        s.events.push(SignalEvent::new(1000.0, "a", Modality::Gesture, PrivacyCommand::Blur));
        let palms: Vec<f64> = (0..90)
            .filter_map(|n| synthesize_frame(&s, n, 1).hands.first().map(|h| crate::gesture::palm_center(h).x))
            .collect();
        let travel = palms.last().unwrap() - palms.first().unwrap();
        let face_w = 215.0 * FACE_ASPECT / 1280.0;
        assert!(travel > 0.8 * face_w);
    }

    #[test]
    fn trigger_delivered_once_on_first_frame_after_event() {
        let mac: Mac = "A1B2C3D4E5F6".parse().unwrap();
        let mut s = scene_with(Actor::new("a", Vec3::new(0.0, 0.0, 6.0)).with_tag(mac));
        s.events.push(SignalEvent::new(1010.0, "a", Modality::Uwb, PrivacyCommand::Blur));
        let frames: Vec<u64> = (0..60).filter(|n| !synthesize_frame(&s, *n, 1).ble_triggers.is_empty()).collect();
        assert_eq!(frames, [31]);
        let r = Synthesizer::new(&s, 1).uwb_reading(mac, 1000.0).unwrap();
        assert_abs_diff_eq!(r.distance_m, (36.0f64 + 0.0025).sqrt(), epsilon = 1e-12);
        assert!(r.elevation_deg < 0.0);
    }

    #[test]
    fn optical_noise_does_not_touch_uwb() {
        let mac: Mac = "A1B2C3D4E5F6".parse().unwrap();
        let mut s = scene_with(Actor::new("a", Vec3::new(0.5, 0.0, 4.0)).with_tag(mac));
        s.noise.uwb_angle_sigma_deg = 1.0;
        let quiet = Synthesizer::new(&s, 3).uwb_reading(mac, 500.0);
        s.noise.false_blob_rate = 3.0;
        s.noise.blob_dropout_prob = 0.5;
        s.noise.face_dropout_prob = 0.2;
        assert_eq!(Synthesizer::new(&s, 3).uwb_reading(mac, 500.0), quiet);
    }
}
