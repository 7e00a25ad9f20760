//! Inverse-distance size models calibrated at 1 m on the 1280x960 stream.
//!
//! Each model has a forward form (distance to on-screen size, used to render
//! the synthetic world) and an inverse form (on-screen size to distance, used
//! by the signal-source validation checks).

use crate::error::{require_positive, ModelError};

/// Face bounding-box height at 1 m, in pixels.
pub const FACE_HEIGHT_PX_AT_1M: f64 = 215.0;
/// LED blob area at 1 m, in square pixels.
pub const LED_AREA_PX_AT_1M: f64 = 400.0;
/// Index-to-pinky fingertip span at 1 m, in pixels.
pub const HAND_SPAN_PX_AT_1M: f64 = 88.0;
/// Face bbox width / height. Only used to render bounding boxes.
pub const FACE_ASPECT: f64 = 0.78;
/// Physical face height that reproduces the 1 m calibration under the default camera.
pub const DEFAULT_FACE_HEIGHT_M: f64 = 0.244;

pub fn face_pixel_height(distance_m: f64) -> Result<f64, ModelError> {
    Ok(FACE_HEIGHT_PX_AT_1M / require_positive("distance", distance_m)?)
}

pub fn led_blob_area(distance_m: f64) -> Result<f64, ModelError> {
    let d = require_positive("distance", distance_m)?;
    Ok(LED_AREA_PX_AT_1M / (d * d))
}

pub fn hand_keypoint_span(distance_m: f64) -> Result<f64, ModelError> {
    Ok(HAND_SPAN_PX_AT_1M / require_positive("distance", distance_m)?)
}

/// Distance implied by a face bounding-box height in pixels.
pub fn distance_from_face_height(height_px: f64) -> Result<f64, ModelError> {
    Ok(FACE_HEIGHT_PX_AT_1M / require_positive("face height", height_px)?)
}

/// Distance implied by an LED blob area in square pixels.
pub fn distance_from_blob_area(area_px: f64) -> Result<f64, ModelError> {
    Ok((LED_AREA_PX_AT_1M / require_positive("blob area", area_px)?).sqrt())
}

/// Distance implied by an index-to-pinky fingertip span in pixels.
pub fn distance_from_hand_span(span_px: f64) -> Result<f64, ModelError> {
    Ok(HAND_SPAN_PX_AT_1M / require_positive("hand span", span_px)?)
}

/// Relative disagreement `|candidate - reference| / reference` used by all
/// three signal-source validation checks.
pub fn relative_mismatch(candidate_m: f64, reference_m: f64) -> f64 {
    (candidate_m - reference_m).abs() / reference_m
}
