use serde::Serialize;

use crate::face::TrackedFace;
use crate::geometry::{NormRect, PixelRect};
use crate::scene::camera::CameraModel;
use crate::scene::models::led_blob_area;
use crate::types::FaceId;

/// Torso search area under one tracked face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchRegion {
    pub owner: FaceId,
    pub norm: NormRect,
    pub rect: PixelRect,
    /// LED area expected at the face-implied distance, px^2.
    pub expected_blob_area: f64,
}

const EDGE_EPS: f64 = 1e-6;

/// Region twice the face width, three face heights tall, hanging from the
/// bottom edge of the bbox; clamped to the frame.
pub fn search_region_for_face(face: &TrackedFace, camera: &CameraModel) -> SearchRegion {
    let b = face.bbox;
    let norm = NormRect::new(b.x - b.w / 2.0, b.bottom(), 2.0 * b.w, 3.0 * b.h).clamped();
    let (w, h) = (camera.width_px as f64, camera.height_px as f64);
    let rect = PixelRect {
        x0: (norm.x * w + EDGE_EPS).floor() as i32,
        y0: (norm.y * h + EDGE_EPS).floor() as i32,
        x1: ((norm.x + norm.w) * w - EDGE_EPS).ceil() as i32,
        y1: ((norm.y + norm.h) * h - EDGE_EPS).ceil() as i32,
    };
    let expected_blob_area = face
        .distance_m(camera)
        .and_then(led_blob_area)
        .unwrap_or(0.0);
    SearchRegion { owner: face.face_id, norm, rect, expected_blob_area }
}
