//! Multi-hypothesis bit-stream decoding over successive frames.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::blob::{detect_blobs, Blob, LuminanceBlob, LuminanceField};
use super::codec::{decode_with_format, PacketFormat};
use super::region::{search_region_for_face, SearchRegion};
use crate::error::{ModelError, PacketError};
use crate::face::TrackedFace;
use crate::geometry::PixelPoint;
use crate::scene::camera::CameraModel;
use crate::scene::models::{distance_from_blob_area, relative_mismatch};
use crate::types::{FaceId, PrivacyCommand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VlcConfig {
    pub max_active_paths: usize,
    /// Cost added for a frame in which a path finds no blob.
    pub miss_penalty: f64,
    /// Association gate as a multiple of the expected blob diameter scale
    /// `sqrt(expected area)`.
    pub gate_scale: f64,
    pub geo_tolerance: f64,
    pub packet_format: PacketFormat,
}

impl Default for VlcConfig {
    fn default() -> Self {
        VlcConfig {
            max_active_paths: 8,
            miss_penalty: 1.0,
            gate_scale: 4.0,
            geo_tolerance: 0.10,
            packet_format: PacketFormat::default(),
        }
    }
}

impl VlcConfig {
    pub fn gate_px(&self, expected_blob_area: f64) -> f64 {
        self.gate_scale * expected_blob_area.max(0.0).sqrt()
    }
}

/// One hypothesis about which blob sequence is the beacon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViterbiPath {
    pub bits: Vec<bool>,
    pub cost: f64,
    pub last_blob_pos: PixelPoint,
    pub last_blob_area: f64,
    pub owner: FaceId,
}

impl ViterbiPath {
    pub fn seeded(blob: &Blob, owner: FaceId) -> Self {
        ViterbiPath {
            bits: vec![true],
            cost: 0.0,
            last_blob_pos: blob.centroid,
            last_blob_area: blob.area,
            owner,
        }
    }
}

/// Extend every path by one bit. Paths are served cheapest first (older
/// first on equal cost); each claims the nearest unclaimed blob inside the
/// gate as a `1`, or records a `0` and pays the miss penalty. Blobs nobody
/// claimed start fresh paths. The result is cut to `max_active_paths`.
pub fn step_decoder(
    mut paths: Vec<ViterbiPath>,
    blobs: &[Blob],
    gate_px: f64,
    owner: FaceId,
    cfg: &VlcConfig,
) -> Vec<ViterbiPath> {
    sort_paths(&mut paths);
    let mut claimed = vec![false; blobs.len()];
    for path in paths.iter_mut() {
        let nearest = blobs
            .iter()
            .enumerate()
            .filter(|(i, _)| !claimed[*i])
            .map(|(i, b)| (i, b.centroid.distance(&path.last_blob_pos)))
            .filter(|(_, d)| *d <= gate_px)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        match nearest {
            Some((i, _)) => {
                claimed[i] = true;
                path.bits.push(true);
                path.last_blob_pos = blobs[i].centroid;
                path.last_blob_area = blobs[i].area;
            }
            None => {
                path.bits.push(false);
                path.cost += cfg.miss_penalty;
            }
        }
    }
    for (blob, _) in blobs.iter().zip(&claimed).filter(|(_, c)| !**c) {
        paths.push(ViterbiPath::seeded(blob, owner));
    }
    sort_paths(&mut paths);
    paths.truncate(cfg.max_active_paths);
    paths
}

fn sort_paths(paths: &mut [ViterbiPath]) {
    paths.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(b.bits.len().cmp(&a.bits.len())));
}

#[derive(Debug, Clone, PartialEq)]
pub enum Resolution {
    Command(PrivacyCommand),
    Rejected(PacketError),
    /// Blob-implied and face-implied distances disagree.
    Inconsistent { blob_m: f64, face_m: f64 },
    /// A distance could not be estimated at all.
    Degenerate(ModelError),
}

/// Validate a complete path: packet structure, then that the last blob's size
/// agrees with the owning face's distance.
pub fn try_resolve(path: &ViterbiPath, face: &TrackedFace, camera: &CameraModel, cfg: &VlcConfig) -> Resolution {
    let command = match decode_with_format(&path.bits, cfg.packet_format) {
        Ok(c) => c,
        Err(e) => return Resolution::Rejected(e),
    };
    let blob_m = match distance_from_blob_area(path.last_blob_area) {
        Ok(d) => d,
        Err(e) => return Resolution::Degenerate(e),
    };
    let face_m = match face.distance_m(camera) {
        Ok(d) => d,
        Err(e) => return Resolution::Degenerate(e),
    };
    if relative_mismatch(blob_m, face_m) > cfg.geo_tolerance {
        return Resolution::Inconsistent { blob_m, face_m };
    }
    Resolution::Command(command)
}

/// Everything the decoder did for one face in one frame.
#[derive(Debug, Clone)]
pub struct RegionStep {
    pub region: SearchRegion,
    pub blobs: Vec<Blob>,
    pub resolved: Vec<(Vec<bool>, Resolution)>,
}

/// Per-face path sets.
#[derive(Debug, Clone, Default)]
pub struct VlcDecoder {
    pub cfg: VlcConfig,
    paths: BTreeMap<FaceId, Vec<ViterbiPath>>,
}

impl VlcDecoder {
    pub fn new(cfg: VlcConfig) -> Self {
        VlcDecoder { cfg, paths: BTreeMap::new() }
    }

    pub fn paths(&self, face: FaceId) -> &[ViterbiPath] {
        self.paths.get(&face).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Drop state for faces the tracker no longer holds.
    pub fn retain_faces(&mut self, mut live: impl FnMut(FaceId) -> bool) {
        self.paths.retain(|id, _| live(*id));
    }

    /// Search the face's torso region, advance its paths, and resolve any
    /// that reached full packet length.
    pub fn process_face(&mut self, face: &TrackedFace, camera: &CameraModel, emitters: &[LuminanceBlob]) -> RegionStep {
        let region = search_region_for_face(face, camera);
        let field = LuminanceField::render(region.rect, emitters);
        let blobs = detect_blobs(&field);
        let gate = self.cfg.gate_px(region.expected_blob_area);
        let previous = self.paths.remove(&face.face_id).unwrap_or_default();
        let stepped = step_decoder(previous, &blobs, gate, face.face_id, &self.cfg);
        let total = self.cfg.packet_format.total_bits();
        let (complete, pending): (Vec<_>, Vec<_>) = stepped.into_iter().partition(|p| p.bits.len() >= total);
        let resolved = complete
            .into_iter()
            .map(|p| {
                let r = try_resolve(&p, face, camera, &self.cfg);
                (p.bits, r)
            })
            .collect();
        if !pending.is_empty() {
            self.paths.insert(face.face_id, pending);
        }
        RegionStep { region, blobs, resolved }
    }
}
