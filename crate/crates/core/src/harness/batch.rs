//! Repeated trials and the message-length sweep.

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::Vec3;
use crate::scene::world::{Scenario, Trajectory};
use crate::types::Modality;
use crate::vlc::codec::PacketFormat;

use super::metrics::TrialResult;
use super::runner::{percentile_95, run_scenario};
use super::scenario::PipelineConfig;
use super::trace::Trace;

/// Aggregate of a batch. Per-trial pieces are kept in trial order.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub aggregate: TrialResult,
    pub trials: Vec<TrialResult>,
    pub trace_hashes: Vec<String>,
    pub traces: Vec<Trace>,
    pub frame_p95_ms: f64,
    pub stale_fast_path: u64,
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool")
}

/// Trials `i = 0..repetitions` with seed `base_seed + i`, on `workers` threads.
pub fn run_batch(
    scenario: &Scenario,
    modality: Modality,
    cfg: &PipelineConfig,
    repetitions: u32,
    base_seed: u64,
    workers: usize,
) -> BatchOutput {
    let runs: Vec<_> = pool(workers).install(|| {
        (0..repetitions as u64)
            .into_par_iter()
            .map(|i| run_scenario(scenario, modality, cfg, base_seed.wrapping_add(i)))
            .collect()
    });
    let mut aggregate = TrialResult::default();
    let mut frame_times = Vec::new();
    let mut stale_fast_path = 0;
    for r in &runs {
        aggregate.merge(&r.result);
        frame_times.extend_from_slice(&r.frame_times_ms);
        stale_fast_path += r.stale_fast_path;
    }
    BatchOutput {
        aggregate,
        trials: runs.iter().map(|r| r.result.clone()).collect(),
        trace_hashes: runs.iter().map(|r| r.trace_hash.clone()).collect(),
        traces: runs.into_iter().map(|r| r.trace).collect(),
        frame_p95_ms: percentile_95(&frame_times),
        stale_fast_path,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Static,
    Walking,
}

pub const WALKING_SPEED_M_PER_S: f64 = 1.2;
/// Walkers stop once they are this close to the camera.
pub const WALK_MIN_RANGE_M: f64 = 1.0;

/// Replace every actor's path with a straight walk toward the camera that
/// starts at the actor's initial position.
pub fn make_walking(scenario: &mut Scenario) {
    for actor in &mut scenario.actors {
        let start = actor.trajectory.position(0.0);
        let range = start.norm();
        if range <= WALK_MIN_RANGE_M {
            continue;
        }
        let dir = Vec3::new(-start.x / range, -start.y / range, -start.z / range);
        let vel = Vec3::new(dir.x * WALKING_SPEED_M_PER_S, dir.y * WALKING_SPEED_M_PER_S, dir.z * WALKING_SPEED_M_PER_S);
        let stop_ms = (range - WALK_MIN_RANGE_M) / WALKING_SPEED_M_PER_S * 1000.0;
        actor.trajectory = Trajectory::walking(start, vel, 0.0, stop_ms.min(scenario.duration_ms));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub bits: usize,
    pub signals: u64,
    pub decoded: u64,
    pub success_rate: f64,
    pub false_positives: u64,
}

/// Decode success per packet length. Each length reuses the same seeds, so
/// every length sees the same per-frame noise draws.
pub fn message_length_sweep(
    base: &Scenario,
    cfg: &PipelineConfig,
    lengths: &[usize],
    motion: Motion,
    trials: u32,
    base_seed: u64,
    workers: usize,
) -> Vec<SweepRow> {
    let mut scenario = base.clone();
    if motion == Motion::Walking {
        make_walking(&mut scenario);
    }
    lengths
        .iter()
        .filter_map(|&bits| {
            let format = PacketFormat::with_total_bits(bits)?;
            let mut s = scenario.clone();
            s.packet_format = format;
            let mut c = *cfg;
            c.vlc.packet_format = format;
            let out = run_batch(&s, Modality::Vlc, &c, trials, base_seed, workers);
            let agg = out.aggregate;
            Some(SweepRow {
                bits,
                signals: agg.signals,
                decoded: agg.correct,
                success_rate: agg.accuracy(),
                false_positives: agg.false_positives,
            })
        })
        .collect()
}
