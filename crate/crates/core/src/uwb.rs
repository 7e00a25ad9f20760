//! Hybrid BLE + UWB protocol.
//!
//! A BLE trigger from an unbound tag starts a fixed-length ranging burst.
//! The smoothed tail of the burst is mapped linearly from angles to screen
//! coordinates and bound to a face whose width-expanded bbox contains the
//! point and whose implied distance agrees with the ranged one. Later
//! triggers from a bound tag toggle the face directly (the Fast Path) for as
//! long as that face stays tracked.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::BurstError;
use crate::face::TrackedFace;
use crate::geometry::PixelPoint;
use crate::scene::camera::CameraModel;
use crate::scene::models::relative_mismatch;
use crate::types::{FaceId, Mac, PrivacyCommand};

/// Privacy request written to the tag's GATT characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleTrigger {
    pub t_ms: f64,
    pub mac: Mac,
    pub command: PrivacyCommand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangingReading {
    pub distance_m: f64,
    /// Positive to the right of the optical axis.
    pub azimuth_deg: f64,
    /// Positive above the optical axis.
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UwbConfig {
    pub total_reading_count: usize,
    pub readings_to_average: usize,
    pub ranging_interval_ms: f64,
    pub bbox_width_expansion: f64,
    pub geo_tolerance: f64,
}

impl Default for UwbConfig {
    fn default() -> Self {
        UwbConfig {
            total_reading_count: 15,
            readings_to_average: 3,
            ranging_interval_ms: 130.0,
            bbox_width_expansion: 2.5,
            geo_tolerance: 0.10,
        }
    }
}

impl UwbConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.readings_to_average == 0 || self.readings_to_average > self.total_reading_count {
            return Err("readings_to_average must lie in [1, total_reading_count]");
        }
        if self.bbox_width_expansion < 1.0 {
            return Err("bbox_width_expansion must be >= 1");
        }
        if !(self.ranging_interval_ms > 0.0) {
            return Err("ranging_interval_ms must be positive");
        }
        Ok(())
    }

    pub fn burst_duration_ms(&self) -> f64 {
        self.total_reading_count as f64 * self.ranging_interval_ms
    }
}

/// Mean of the last `readings_to_average` readings of a complete burst.
pub fn smooth_burst(readings: &[RangingReading], cfg: &UwbConfig) -> Result<RangingReading, BurstError> {
    if readings.len() != cfg.total_reading_count {
        return Err(BurstError::Short { expected: cfg.total_reading_count, got: readings.len() });
    }
    let tail = &readings[readings.len() - cfg.readings_to_average..];
    let n = tail.len() as f64;
    Ok(RangingReading {
        distance_m: tail.iter().map(|r| r.distance_m).sum::<f64>() / n,
        azimuth_deg: tail.iter().map(|r| r.azimuth_deg).sum::<f64>() / n,
        elevation_deg: tail.iter().map(|r| r.elevation_deg).sum::<f64>() / n,
    })
}

/// Linear angle-to-pixel mapping; `None` outside the camera FoV.
pub fn project_to_screen(r: &RangingReading, camera: &CameraModel) -> Option<PixelPoint> {
    let half_h = camera.hfov_deg / 2.0;
    let half_v = camera.vfov_deg / 2.0;
    if r.azimuth_deg.abs() > half_h || r.elevation_deg.abs() > half_v {
        return None;
    }
    Some(PixelPoint::new(
        (r.azimuth_deg / half_h + 1.0) / 2.0 * camera.width_px as f64,
        (-r.elevation_deg / half_v + 1.0) / 2.0 * camera.height_px as f64,
    ))
}

/// Pick the face the tag belongs to, if any.
///
/// Candidates are faces whose bbox, widened about its center by
/// `bbox_width_expansion`, contains `point`. A candidate survives if the
/// ranged distance is within `geo_tolerance` of the face-implied distance;
/// among survivors the smallest residual wins (ties: lower face id).
pub fn bind(
    point: PixelPoint,
    r: &RangingReading,
    faces: &[TrackedFace],
    camera: &CameraModel,
    cfg: &UwbConfig,
) -> Option<FaceId> {
    let (w, h) = (camera.width_px as f64, camera.height_px as f64);
    faces
        .iter()
        .filter(|f| {
            let c = f.bbox.centroid();
            let half_w = f.bbox.w * cfg.bbox_width_expansion / 2.0 * w;
            let (top, bottom) = (f.bbox.top() * h, f.bbox.bottom() * h);
            (point.x - c.x * w).abs() <= half_w && point.y >= top && point.y <= bottom
        })
        .filter_map(|f| {
            let d_face = f.distance_m(camera).ok()?;
            let mismatch = relative_mismatch(r.distance_m, d_face);
            (mismatch <= cfg.geo_tolerance).then_some(((r.distance_m - d_face).abs(), f.face_id))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriggerDecision {
    /// Apply the command to this face now; no ranging.
    FastPathToggle(FaceId),
    StartBurst,
    /// A burst for this tag is already running.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagPhase {
    Unbound,
    Ranging { collected: usize },
    Bound(FaceId),
}

#[derive(Debug, Clone, PartialEq)]
struct Burst {
    command: PrivacyCommand,
    started_ms: f64,
    readings: Vec<RangingReading>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BurstOutcome {
    Bound {
        mac: Mac,
        face_id: FaceId,
        command: PrivacyCommand,
        reading: RangingReading,
        point: PixelPoint,
    },
    /// Burst completed but no face passed both checks.
    Unmatched {
        mac: Mac,
        reading: RangingReading,
        point: Option<PixelPoint>,
    },
    /// A reading was missing (tag left the FoV mid-burst).
    Aborted { mac: Mac, collected: usize },
}

#[derive(Debug, Clone, Default)]
pub struct UwbManager {
    pub cfg: UwbConfig,
    bindings: BTreeMap<Mac, FaceId>,
    bursts: BTreeMap<Mac, Burst>,
    ranging_sessions_started: u64,
    fast_path_hits: u64,
}

impl UwbManager {
    pub fn new(cfg: UwbConfig) -> Self {
        UwbManager { cfg, ..Default::default() }
    }

    /// The Fast Path cache.
    pub fn bindings(&self) -> &BTreeMap<Mac, FaceId> {
        &self.bindings
    }

    pub fn ranging_sessions_started(&self) -> u64 {
        self.ranging_sessions_started
    }

    pub fn fast_path_hits(&self) -> u64 {
        self.fast_path_hits
    }

    pub fn phase(&self, mac: Mac) -> TagPhase {
        if let Some(b) = self.bursts.get(&mac) {
            TagPhase::Ranging { collected: b.readings.len() }
        } else if let Some(face) = self.bindings.get(&mac) {
            TagPhase::Bound(*face)
        } else {
            TagPhase::Unbound
        }
    }

    pub fn on_ble_trigger(&mut self, trigger: &BleTrigger, is_live: impl Fn(FaceId) -> bool) -> TriggerDecision {
        if self.bursts.contains_key(&trigger.mac) {
            return TriggerDecision::Drop;
        }
        if let Some(&face) = self.bindings.get(&trigger.mac) {
            if is_live(face) {
                self.fast_path_hits += 1;
                return TriggerDecision::FastPathToggle(face);
            }
            self.bindings.remove(&trigger.mac);
        }
        self.bursts.insert(
            trigger.mac,
            Burst { command: trigger.command, started_ms: trigger.t_ms, readings: Vec::new() },
        );
        self.ranging_sessions_started += 1;
        TriggerDecision::StartBurst
    }

    /// Face Track Lost: purge every binding that points at `face_id`.
    pub fn on_face_lost(&mut self, face_id: FaceId) {
        self.bindings.retain(|_, f| *f != face_id);
    }

    /// Collect every reading due by `now_ms` and resolve finished bursts
    /// against the live `faces`. `measure` returns the reading taken at the
    /// given instant, or `None` if the tag could not be ranged.
    pub fn advance(
        &mut self,
        now_ms: f64,
        faces: &[TrackedFace],
        camera: &CameraModel,
        mut measure: impl FnMut(Mac, f64) -> Option<RangingReading>,
    ) -> Vec<BurstOutcome> {
        let cfg = self.cfg;
        let mut outcomes = Vec::new();
        let mut finished = Vec::new();

        for (mac, burst) in self.bursts.iter_mut() {
            let mut aborted = false;
            while burst.readings.len() < cfg.total_reading_count {
                let due = burst.started_ms + (burst.readings.len() + 1) as f64 * cfg.ranging_interval_ms;
                if due > now_ms + 1e-9 {
                    break;
                }
                match measure(*mac, due) {
                    Some(r) => burst.readings.push(r),
                    None => {
                        aborted = true;
                        break;
                    }
                }
            }
            if aborted {
                outcomes.push(BurstOutcome::Aborted { mac: *mac, collected: burst.readings.len() });
                finished.push(*mac);
            } else if burst.readings.len() == cfg.total_reading_count {
                let reading = smooth_burst(&burst.readings, &cfg).expect("burst is complete");
                let point = project_to_screen(&reading, camera);
                let face = point.and_then(|p| bind(p, &reading, faces, camera, &cfg));
                match (face, point) {
                    (Some(face_id), Some(point)) => {
                        outcomes.push(BurstOutcome::Bound { mac: *mac, face_id, command: burst.command, reading, point })
                    }
                    _ => outcomes.push(BurstOutcome::Unmatched { mac: *mac, reading, point }),
                }
                finished.push(*mac);
            }
        }

        for mac in finished {
            self.bursts.remove(&mac);
        }
        for o in &outcomes {
            if let BurstOutcome::Bound { mac, face_id, .. } = o {
                self.bindings.insert(*mac, *face_id);
            }
        }
        outcomes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::NormRect;
    use crate::scene::models::{face_pixel_height, FACE_ASPECT};
    use approx::assert_abs_diff_eq;

    fn cam() -> CameraModel {
        CameraModel::default()
    }

    fn reading(d: f64) -> RangingReading {
        RangingReading { distance_m: d, azimuth_deg: 0.0, elevation_deg: 0.0 }
    }

    /// Face of the size-model height at `d`, centered at pixel `(cx, cy)`.
    fn face(id: u64, cx: f64, cy: f64, d: f64) -> TrackedFace {
        let c = cam();
        let h = face_pixel_height(d).unwrap();
        let w = h * FACE_ASPECT;
        let rect = NormRect::new(
            (cx - w / 2.0) / c.width_px as f64,
            (cy - h / 2.0) / c.height_px as f64,
            w / c.width_px as f64,
            h / c.height_px as f64,
        );
        TrackedFace::new(FaceId(id), rect, 0.0)
    }

    const MAC: Mac = Mac([0xA1, 0xB2, 0xC3, 0xD4, 0xE5, 0xF6]);

    #[test]
    fn smoothing_uses_only_the_tail() {
        let cfg = UwbConfig::default();
        let r = RangingReading { distance_m: 4.0, azimuth_deg: 3.0, elevation_deg: -2.0 };
        assert_eq!(smooth_burst(&vec![r; 15], &cfg).unwrap(), r);

        let mut burst: Vec<_> = (0..12).map(|i| RangingReading { distance_m: 99.0 + i as f64, azimuth_deg: -40.0, elevation_deg: 17.0 }).collect();
        burst.extend([r; 3]);
        assert_eq!(smooth_burst(&burst, &cfg).unwrap(), r);

        let mut burst = vec![reading(1.0); 12];
        burst.extend([reading(4.9), reading(5.0), reading(5.1)]);
        assert_abs_diff_eq!(smooth_burst(&burst, &cfg).unwrap().distance_m, 5.0, epsilon = 1e-12);

        assert_eq!(smooth_burst(&burst[..9], &cfg), Err(BurstError::Short { expected: 15, got: 9 }));
    }

    #[test]
    fn linear_angle_mapping() {
        let c = cam();
        assert_eq!(project_to_screen(&reading(3.0), &c), Some(PixelPoint::new(640.0, 480.0)));
        let edge = RangingReading { distance_m: 3.0, azimuth_deg: 36.0, elevation_deg: 0.0 };
        assert_eq!(project_to_screen(&edge, &c).unwrap().x, 1280.0);
        let outside = RangingReading { azimuth_deg: 37.0, ..edge };
        assert_eq!(project_to_screen(&outside, &c), None);
        let up = RangingReading { distance_m: 3.0, azimuth_deg: 0.0, elevation_deg: 28.8 };
        assert_eq!(project_to_screen(&up, &c).unwrap().y, 0.0);
        let too_high = RangingReading { elevation_deg: 29.0, ..up };
        assert_eq!(project_to_screen(&too_high, &c), None);
    }

    #[test]
    fn bind_within_expanded_width() {
        let c = cam();
        let cfg = UwbConfig::default();
        let f = face(1, 640.0, 480.0, 3.0);
        let w = f.width_px(&c);
        let near = PixelPoint::new(640.0 - 1.2 * w, 480.0);
        assert_eq!(bind(near, &reading(3.0), std::slice::from_ref(&f), &c, &cfg), Some(FaceId(1)));
        let far = PixelPoint::new(640.0 - 1.3 * w, 480.0);
        assert_eq!(bind(far, &reading(3.0), std::slice::from_ref(&f), &c, &cfg), None);
        // height is not expanded
        let below = PixelPoint::new(640.0, 480.0 + 0.6 * f.height_px(&c));
        assert_eq!(bind(below, &reading(3.0), std::slice::from_ref(&f), &c, &cfg), None);
    }

    #[test]
    fn bind_rejects_distance_mismatch() {
        let c = cam();
        let cfg = UwbConfig::default();
        let f = face(1, 640.0, 480.0, 3.0);
        let p = PixelPoint::new(640.0, 480.0);
        assert_eq!(bind(p, &reading(5.0), std::slice::from_ref(&f), &c, &cfg), None);
        assert_eq!(bind(p, &reading(1.0), std::slice::from_ref(&f), &c, &cfg), None);
        assert_eq!(bind(p, &reading(3.0 * 1.09), std::slice::from_ref(&f), &c, &cfg), Some(FaceId(1)));
        assert_eq!(bind(p, &reading(3.0 * 0.91), std::slice::from_ref(&f), &c, &cfg), Some(FaceId(1)));
        assert_eq!(bind(p, &reading(3.0 * 1.11), std::slice::from_ref(&f), &c, &cfg), None);
        assert_eq!(bind(p, &reading(3.0 * 0.89), std::slice::from_ref(&f), &c, &cfg), None);
    }

    #[test]
    fn bind_picks_the_face_with_matching_distance() {
        let c = cam();
        let cfg = UwbConfig::default();
        // overlapping expanded boxes, different depths
        let faces = [face(1, 620.0, 480.0, 3.0), face(2, 660.0, 480.0, 5.0)];
        let p = PixelPoint::new(640.0, 480.0);
        assert_eq!(bind(p, &reading(5.0), &faces, &c, &cfg), Some(FaceId(2)));
        assert_eq!(bind(p, &reading(3.0), &faces, &c, &cfg), Some(FaceId(1)));
        assert_eq!(bind(p, &reading(4.0), &faces, &c, &cfg), None);
    }

    fn trigger(t: f64, cmd: PrivacyCommand) -> BleTrigger {
        BleTrigger { t_ms: t, mac: MAC, command: cmd }
    }

    #[test]
    fn trigger_decisions_follow_binding_state() {
        let mut m = UwbManager::new(UwbConfig::default());
        assert_eq!(m.on_ble_trigger(&trigger(0.0, PrivacyCommand::Blur), |_| true), TriggerDecision::StartBurst);
        assert_eq!(m.phase(MAC), TagPhase::Ranging { collected: 0 });
        assert_eq!(m.on_ble_trigger(&trigger(10.0, PrivacyCommand::Blur), |_| true), TriggerDecision::Drop);

        let faces = [face(7, 640.0, 480.0, 3.0)];
        let out = m.advance(1950.0, &faces, &cam(), |_, _| Some(reading(3.0)));
        assert!(matches!(out[..], [BurstOutcome::Bound { face_id: FaceId(7), .. }]));
        assert_eq!(m.phase(MAC), TagPhase::Bound(FaceId(7)));

        assert_eq!(
            m.on_ble_trigger(&trigger(3000.0, PrivacyCommand::Unblur), |f| f == FaceId(7)),
            TriggerDecision::FastPathToggle(FaceId(7))
        );
        assert_eq!(m.fast_path_hits(), 1);
        assert_eq!(m.ranging_sessions_started(), 1);

        // face no longer live: binding purged, new burst
        assert_eq!(m.on_ble_trigger(&trigger(4000.0, PrivacyCommand::Blur), |_| false), TriggerDecision::StartBurst);
        assert!(m.bindings().is_empty());
        assert_eq!(m.ranging_sessions_started(), 2);
    }

    #[test]
    fn burst_completes_after_full_reading_count() {
        let mut m = UwbManager::new(UwbConfig::default());
        m.on_ble_trigger(&trigger(100.0, PrivacyCommand::Blur), |_| true);
        let faces = [face(1, 640.0, 480.0, 3.0)];
        let mut times = Vec::new();
        let out = m.advance(100.0 + 1949.0, &faces, &cam(), |_, t| {
            times.push(t);
            Some(reading(3.0))
        });
        assert!(out.is_empty());
        assert_eq!(m.phase(MAC), TagPhase::Ranging { collected: 14 });
        let out = m.advance(100.0 + 1950.0, &faces, &cam(), |_, t| {
            times.push(t);
            Some(reading(3.0))
        });
        assert_eq!(out.len(), 1);
        assert_eq!(times.len(), 15);
        assert_abs_diff_eq!(times[14], 2050.0, epsilon = 1e-9);
    }

    #[test]
    fn short_burst_aborts_without_binding() {
        let mut m = UwbManager::new(UwbConfig::default());
        m.on_ble_trigger(&trigger(0.0, PrivacyCommand::Blur), |_| true);
        let faces = [face(1, 640.0, 480.0, 3.0)];
        let out = m.advance(2000.0, &faces, &cam(), |_, t| (t < 700.0).then(|| reading(3.0)));
        assert_eq!(out, vec![BurstOutcome::Aborted { mac: MAC, collected: 5 }]);
        assert_eq!(m.phase(MAC), TagPhase::Unbound);
    }

    #[test]
    fn face_lost_purges_only_its_bindings() {
        let other = Mac([1, 2, 3, 4, 5, 6]);
        let mut m = UwbManager::new(UwbConfig::default());
        m.on_ble_trigger(&trigger(0.0, PrivacyCommand::Blur), |_| true);
        m.on_ble_trigger(&BleTrigger { t_ms: 0.0, mac: other, command: PrivacyCommand::Blur }, |_| true);
        let faces = [face(1, 400.0, 480.0, 3.0), face(2, 900.0, 480.0, 3.0)];
        let c = cam();
        m.advance(2000.0, &faces, &c, |mac, _| {
            let x: f64 = if mac == MAC { 400.0 } else { 900.0 };
            Some(RangingReading { distance_m: 3.0, azimuth_deg: (x / 1280.0 * 2.0 - 1.0) * 36.0, elevation_deg: 0.0 })
        });
        assert_eq!(m.bindings().len(), 2);
        m.on_face_lost(FaceId(1));
        assert_eq!(m.phase(MAC), TagPhase::Unbound);
        assert_eq!(m.phase(other), TagPhase::Bound(FaceId(2)));
        m.on_face_lost(FaceId(1));
        assert_eq!(m.bindings().len(), 1);
    }

    #[test]
    fn unbound_mac_unaffected_by_face_loss() {
        let mut m = UwbManager::new(UwbConfig::default());
        m.on_face_lost(FaceId(3));
        assert_eq!(m.phase(MAC), TagPhase::Unbound);
    }
}
