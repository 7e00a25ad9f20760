//! Frame-synchronous orchestration of one trial.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::face::{apply_privacy_command, FaceTracker, TrackedFace};
use crate::gesture::{associate_face, evaluate_swipe, HandTracker, SwipeDecision};
use crate::scene::camera::CameraModel;
use crate::scene::synth::{FrameObservation, Synthesizer};
use crate::scene::world::Scenario;
use crate::types::{FaceId, Modality, PrivacyCommand};
use crate::uwb::{BurstOutcome, TriggerDecision, UwbManager};
use crate::vlc::decoder::{Resolution, VlcDecoder};

use super::metrics::{score_trial, ToggleRecord, TrialResult};
use super::scenario::PipelineConfig;
use super::trace::{Trace, TraceEvent, TraceKind};

/// All per-run pipeline state.
#[derive(Debug)]
pub struct Pipeline {
    pub camera: CameraModel,
    pub modality: Modality,
    pub cfg: PipelineConfig,
    pub faces: FaceTracker,
    pub hands: HandTracker,
    pub vlc: VlcDecoder,
    pub uwb: UwbManager,
    pub trace: Trace,
    pub toggles: Vec<ToggleRecord>,
    /// Ground-truth actor behind each face id, refreshed from detections.
    owners: BTreeMap<FaceId, Option<usize>>,
    /// Fast Path toggles aimed at a face the tracker no longer holds.
    pub stale_fast_path: u64,
}

impl Pipeline {
    pub fn new(camera: CameraModel, modality: Modality, cfg: PipelineConfig) -> Self {
        Pipeline {
            camera,
            modality,
            cfg,
            faces: FaceTracker::new(cfg.tracker),
            hands: HandTracker::new(),
            vlc: VlcDecoder::new(cfg.vlc),
            uwb: UwbManager::new(cfg.uwb),
            trace: Trace::default(),
            toggles: Vec::new(),
            owners: BTreeMap::new(),
            stale_fast_path: 0,
        }
    }

    /// Process one frame. `synth` answers UWB ranging requests.
    pub fn step(&mut self, obs: &FrameObservation, synth: &Synthesizer<'_>) {
        let t = obs.t_ms;
        let update = self.faces.update(&obs.faces, t);
        for (det, id) in obs.faces.iter().zip(&update.assignments) {
            self.owners.insert(*id, det.source);
        }
        for id in &update.lost {
            self.trace.push(TraceEvent::new(t, TraceKind::FaceLost).with("face_id", id.0));
            self.uwb.on_face_lost(*id);
            self.owners.remove(id);
        }
        for id in &update.created {
            self.trace.push(TraceEvent::new(t, TraceKind::FaceTracked).with("face_id", id.0));
        }
        let faces = &self.faces;
        self.vlc.retain_faces(|id| faces.is_live(id));

        match self.modality {
            Modality::Gesture => self.step_gesture(obs),
            Modality::Vlc => self.step_vlc(obs),
            Modality::Uwb => self.step_uwb(obs, synth),
        }
    }

    fn toggle(&mut self, face_id: FaceId, command: PrivacyCommand, t: f64, cause: Modality) {
        let Some(track) = self.faces.get_mut(face_id) else {
            return;
        };
        if let Some(change) = apply_privacy_command(track, command, t) {
            let actor = self.owners.get(&face_id).copied().flatten();
            self.trace.push(
                TraceEvent::new(t, TraceKind::StateChanged)
                    .with("face_id", face_id.0)
                    .with("from", change.from.as_str())
                    .with("to", change.to.as_str())
                    .with("cause", cause.as_str()),
            );
            self.toggles.push(ToggleRecord { t_ms: t, face_id, command, actor });
        }
    }

    fn step_gesture(&mut self, obs: &FrameObservation) {
        let t = obs.t_ms;
        let ids = self.hands.update(&obs.hands, t, &self.cfg.gesture);
        for hand_id in ids {
            let Some(hand) = self.hands.get_mut(hand_id) else {
                continue;
            };
            let Some(face_id) = associate_face(hand, self.faces.tracks()) else {
                continue;
            };
            let face = self.faces.get_mut(face_id).expect("associated face is live");
            match evaluate_swipe(hand, face, t, &self.cfg.gesture, &self.camera) {
                SwipeDecision::Fired(command) => {
                    self.trace.push(
                        TraceEvent::new(t, TraceKind::GestureFired)
                            .with("face_id", face_id.0)
                            .with("hand_id", hand_id.0)
                            .with("command", command.as_str()),
                    );
                    self.toggle(face_id, command, t, Modality::Gesture);
                }
                SwipeDecision::Inconsistent { hand_m, face_m } => self.trace.push(
                    TraceEvent::new(t, TraceKind::ValidationRejected)
                        .with("modality", "gesture")
                        .with("face_id", face_id.0)
                        .with("signal_m", hand_m)
                        .with("face_m", face_m),
                ),
                SwipeDecision::NoSwipe | SwipeDecision::CoolingDown => {}
            }
        }
    }

    fn step_vlc(&mut self, obs: &FrameObservation) {
        let t = obs.t_ms;
        let live: Vec<TrackedFace> = self.faces.tracks().to_vec();
        for face in &live {
            let step = self.vlc.process_face(face, &self.camera, &obs.emitters);
            for (bits, resolution) in step.resolved {
                let bits: String = bits.iter().map(|b| if *b { '1' } else { '0' }).collect();
                match resolution {
                    Resolution::Command(command) => {
                        self.trace.push(
                            TraceEvent::new(t, TraceKind::PacketDecoded)
                                .with("face_id", face.face_id.0)
                                .with("bits", bits)
                                .with("command", command.as_str()),
                        );
                        self.toggle(face.face_id, command, t, Modality::Vlc);
                    }
                    Resolution::Rejected(err) => self.trace.push(
                        TraceEvent::new(t, TraceKind::PacketRejected)
                            .with("face_id", face.face_id.0)
                            .with("bits", bits)
                            .with("reason", err.to_string()),
                    ),
                    Resolution::Inconsistent { blob_m, face_m } => self.trace.push(
                        TraceEvent::new(t, TraceKind::ValidationRejected)
                            .with("modality", "vlc")
                            .with("face_id", face.face_id.0)
                            .with("signal_m", blob_m)
                            .with("face_m", face_m),
                    ),
                    Resolution::Degenerate(err) => self.trace.push(
                        TraceEvent::new(t, TraceKind::PacketRejected)
                            .with("face_id", face.face_id.0)
                            .with("bits", bits)
                            .with("reason", err.to_string()),
                    ),
                }
            }
        }
    }

    fn step_uwb(&mut self, obs: &FrameObservation, synth: &Synthesizer<'_>) {
        let t = obs.t_ms;
        for trigger in &obs.ble_triggers {
            let faces = &self.faces;
            let decision = self.uwb.on_ble_trigger(trigger, |id| faces.is_live(id));
            let mac = trigger.mac.to_string();
            match decision {
                TriggerDecision::FastPathToggle(face_id) => {
                    if !self.faces.is_live(face_id) {
                        self.stale_fast_path += 1;
                        continue;
                    }
                    self.trace.push(
                        TraceEvent::new(t, TraceKind::FastPath)
                            .with("mac", mac)
                            .with("face_id", face_id.0)
                            .with("command", trigger.command.as_str()),
                    );
                    self.toggle(face_id, trigger.command, t, Modality::Uwb);
                }
                TriggerDecision::StartBurst => self.trace.push(
                    TraceEvent::new(t, TraceKind::BurstStarted)
                        .with("mac", mac)
                        .with("command", trigger.command.as_str()),
                ),
                TriggerDecision::Drop => {
                    self.trace.push(TraceEvent::new(t, TraceKind::TriggerDropped).with("mac", mac))
                }
            }
        }

        let outcomes = self.uwb.advance(t, self.faces.tracks(), &self.camera, |mac, at| synth.uwb_reading(mac, at));
        for outcome in outcomes {
            match outcome {
                BurstOutcome::Bound { mac, face_id, command, reading, .. } => {
                    self.trace.push(
                        TraceEvent::new(t, TraceKind::Bound)
                            .with("mac", mac.to_string())
                            .with("face_id", face_id.0)
                            .with("distance_m", reading.distance_m),
                    );
                    self.toggle(face_id, command, t, Modality::Uwb);
                }
                BurstOutcome::Unmatched { mac, reading, .. } => self.trace.push(
                    TraceEvent::new(t, TraceKind::ValidationRejected)
                        .with("modality", "uwb")
                        .with("mac", mac.to_string())
                        .with("signal_m", reading.distance_m),
                ),
                BurstOutcome::Aborted { mac, collected } => self.trace.push(
                    TraceEvent::new(t, TraceKind::ValidationRejected)
                        .with("modality", "uwb")
                        .with("mac", mac.to_string())
                        .with("reason", format!("burst aborted after {collected} readings")),
                ),
            }
        }
    }
}

/// Everything one trial produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: TrialResult,
    pub trace: Trace,
    pub trace_hash: String,
    pub toggles: Vec<ToggleRecord>,
    pub stale_fast_path: u64,
    /// Wall-clock processing time per frame, excluding synthesis. Not part
    /// of the deterministic output.
    pub frame_times_ms: Vec<f64>,
}

/// Run one trial of `scenario` with the given seed.
pub fn run_scenario(scenario: &Scenario, modality: Modality, cfg: &PipelineConfig, seed: u64) -> RunOutput {
    let synth = Synthesizer::new(scenario, seed);
    let mut pipeline = Pipeline::new(scenario.camera, modality, *cfg);
    let frames = scenario.frame_count();
    let mut frame_times_ms = Vec::with_capacity(frames as usize);
    for n in 0..frames {
        let obs = synth.frame(n);
        let start = Instant::now();
        pipeline.step(&obs, &synth);
        frame_times_ms.push(start.elapsed().as_secs_f64() * 1000.0);
    }
    let mut result = score_trial(scenario, modality, &pipeline.toggles);
    result.ranging_sessions = pipeline.uwb.ranging_sessions_started();
    result.fast_path_hits = pipeline.uwb.fast_path_hits();
    let trace_hash = pipeline.trace.hash();
    RunOutput {
        result,
        trace: pipeline.trace,
        trace_hash,
        toggles: pipeline.toggles,
        stale_fast_path: pipeline.stale_fast_path,
        frame_times_ms,
    }
}

/// 95th percentile (nearest rank) of a sample.
pub fn percentile_95(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((0.95 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}
