use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::geometry::{PixelPoint, Vec3};

/// Pinhole camera. Pixel aspect follows from the two fields of view, so the
/// horizontal and vertical focal lengths may differ slightly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub width_px: u32,
    pub height_px: u32,
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub frame_rate_hz: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width_px: 1280,
            height_px: 960,
            hfov_deg: 72.0,
            vfov_deg: 57.6,
            frame_rate_hz: 30.0,
        }
    }
}

/// Result of projecting a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub screen: PixelPoint,
    pub depth: f64,
}

// Relative slack on the FoV test so points placed exactly on the boundary
// by construction still project.
const FOV_SLACK: f64 = 1e-9;

impl CameraModel {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(ScenarioError::invalid("camera", "resolution must be non-zero"));
        }
        if self.width_px as u64 * 3 != self.height_px as u64 * 4 {
            return Err(ScenarioError::invalid("camera", "resolution must be 4:3"));
        }
        for (name, fov) in [("camera.hfov_deg", self.hfov_deg), ("camera.vfov_deg", self.vfov_deg)] {
            if !(fov > 0.0 && fov < 180.0) {
                return Err(ScenarioError::invalid(name, "field of view must lie in (0, 180)"));
            }
        }
        if !(self.frame_rate_hz > 0.0 && self.frame_rate_hz.is_finite()) {
            return Err(ScenarioError::invalid("camera.frame_rate_hz", "must be positive"));
        }
        Ok(())
    }

    pub fn frame_period_ms(&self) -> f64 {
        1000.0 / self.frame_rate_hz
    }

    /// Timestamp of frame `n`. Frame `n` is delivered at the end of its
    /// exposure, which spans `[t(n) - period, t(n))`.
    pub fn frame_time_ms(&self, n: u64) -> f64 {
        n as f64 * 1000.0 / self.frame_rate_hz
    }

    /// Instant at which frame `n` samples the scene (mid-exposure).
    pub fn exposure_time_ms(&self, n: u64) -> f64 {
        self.frame_time_ms(n) - self.frame_period_ms() / 2.0
    }

    /// First frame whose timestamp is at or after `t_ms`.
    pub fn first_frame_at_or_after(&self, t_ms: f64) -> u64 {
        let n = (t_ms * self.frame_rate_hz / 1000.0 - 1e-9).ceil();
        if n <= 0.0 {
            0
        } else {
            n as u64
        }
    }

    pub fn cx(&self) -> f64 {
        self.width_px as f64 / 2.0
    }

    pub fn cy(&self) -> f64 {
        self.height_px as f64 / 2.0
    }

    pub fn half_hfov_rad(&self) -> f64 {
        (self.hfov_deg / 2.0).to_radians()
    }

    pub fn half_vfov_rad(&self) -> f64 {
        (self.vfov_deg / 2.0).to_radians()
    }

    /// Horizontal focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        self.cx() / self.half_hfov_rad().tan()
    }

    /// Vertical focal length in pixels.
    pub fn focal_v_px(&self) -> f64 {
        self.cy() / self.half_vfov_rad().tan()
    }

    /// Pinhole projection. `None` behind the camera or outside the FoV.
    pub fn project(&self, p: Vec3) -> Option<Projection> {
        if p.z <= 0.0 {
            return None;
        }
        let tx = p.x / p.z;
        let ty = p.y / p.z;
        if tx.abs() > self.half_hfov_rad().tan() * (1.0 + FOV_SLACK)
            || ty.abs() > self.half_vfov_rad().tan() * (1.0 + FOV_SLACK)
        {
            return None;
        }
        Some(Projection {
            screen: PixelPoint::new(self.cx() + self.focal_px() * tx, self.cy() + self.focal_v_px() * ty),
            depth: p.z,
        })
    }

    /// Inverse of [`CameraModel::project`] at a known depth.
    pub fn unproject(&self, screen: PixelPoint, depth: f64) -> Vec3 {
        Vec3::new(
            (screen.x - self.cx()) / self.focal_px() * depth,
            (screen.y - self.cy()) / self.focal_v_px() * depth,
            depth,
        )
    }

    /// True when the pixel lies inside `[0, width) x [0, height)`.
    pub fn in_frame(&self, p: PixelPoint) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.width_px as f64 && p.y < self.height_px as f64
    }
}

/// Free-function form of [`CameraModel::project`].
pub fn project_point(camera: &CameraModel, p: Vec3) -> Option<Projection> {
    camera.project(p)
}
