//! Trial scoring: attribution of state changes to signals.

use serde::{Deserialize, Serialize};

use crate::scene::world::Scenario;
use crate::types::{FaceId, Modality, PrivacyCommand};

/// How long after a signal starts a matching toggle still counts.
pub fn attribution_window_ms(modality: Modality) -> f64 {
    match modality {
        Modality::Gesture => 1000.0,
        Modality::Vlc => 2000.0,
        Modality::Uwb => 4000.0,
    }
}

/// A toggle as the pipeline produced it, with the ground-truth owner of the
/// face it was applied to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToggleRecord {
    pub t_ms: f64,
    pub face_id: FaceId,
    pub command: PrivacyCommand,
    /// Actor index of the face, when known.
    pub actor: Option<usize>,
}

/// Raw counts. Summing counts is the only aggregation, so merges commute.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialResult {
    pub trials: u64,
    pub signals: u64,
    pub correct: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub state_changes: u64,
    pub latencies_ms: Vec<f64>,
    pub ranging_sessions: u64,
    pub fast_path_hits: u64,
}

impl TrialResult {
    /// Correct toggles per signal; 1 when there were no signals.
    pub fn accuracy(&self) -> f64 {
        if self.signals == 0 {
            1.0
        } else {
            self.correct as f64 / self.signals as f64
        }
    }

    /// Unattributed toggles per signal (per trial when there were none).
    pub fn false_positive_rate(&self) -> f64 {
        let denom = if self.signals > 0 { self.signals } else { self.trials.max(1) };
        self.false_positives as f64 / denom as f64
    }

    pub fn false_negative_rate(&self) -> f64 {
        if self.signals == 0 {
            0.0
        } else {
            self.false_negatives as f64 / self.signals as f64
        }
    }

    pub fn merge(&mut self, other: &TrialResult) {
        self.trials += other.trials;
        self.signals += other.signals;
        self.correct += other.correct;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
        self.state_changes += other.state_changes;
        self.latencies_ms.extend_from_slice(&other.latencies_ms);
        self.ranging_sessions += other.ranging_sessions;
        self.fast_path_hits += other.fast_path_hits;
    }

    pub fn mean_latency_ms(&self) -> Option<f64> {
        (!self.latencies_ms.is_empty())
            .then(|| self.latencies_ms.iter().sum::<f64>() / self.latencies_ms.len() as f64)
    }
}

/// Score one trial. Each toggle is matched to the earliest unmatched signal
/// of the same command from the same actor whose window contains it;
/// unmatched toggles are false positives and unmatched signals are false
/// negatives.
pub fn score_trial(scenario: &Scenario, modality: Modality, toggles: &[ToggleRecord]) -> TrialResult {
    let window = attribution_window_ms(modality);
    let mut signals: Vec<(f64, usize, PrivacyCommand)> = scenario
        .events
        .iter()
        .filter(|e| e.modality == modality)
        .filter_map(|e| scenario.actor_index(&e.actor_id).map(|a| (e.time_ms, a, e.command)))
        .collect();
    signals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut matched = vec![false; signals.len()];

    let mut r = TrialResult { trials: 1, signals: signals.len() as u64, ..Default::default() };
    for t in toggles {
        r.state_changes += 1;
        let hit = signals.iter().enumerate().position(|(i, (at, actor, cmd))| {
            !matched[i] && Some(*actor) == t.actor && *cmd == t.command && t.t_ms >= *at && t.t_ms <= at + window
        });
        match hit {
            Some(i) => {
                matched[i] = true;
                r.correct += 1;
                r.latencies_ms.push(t.t_ms - signals[i].0);
            }
            None => r.false_positives += 1,
        }
    }
    r.false_negatives = matched.iter().filter(|m| !**m).count() as u64;
    r
}
