use bystander_core::geometry::Vec3;
use bystander_core::harness::{parse_scenario, run_batch, run_scenario, PipelineConfig, TraceKind};
use bystander_core::scene::camera::CameraModel;
use bystander_core::scene::world::{Actor, NoiseModel, Scenario, SignalEvent, TriggerRecord};
use bystander_core::types::{Mac, Modality, PrivacyCommand};
use proptest::prelude::*;

const TAG: Mac = Mac([0x10, 0x20, 0x30, 0x40, 0x50, 0x60]);

fn scene(actor: Actor, duration_ms: f64) -> Scenario {
    let mut s = Scenario::new(CameraModel::default(), duration_ms);
    s.actors.push(actor);
    s
}

#[test]
fn quiet_scene_never_toggles() {
    let s = scene(Actor::new("a", Vec3::new(0.2, 0.0, 3.0)).with_led(), 3000.0);
    for m in [Modality::Gesture, Modality::Vlc, Modality::Uwb] {
        let out = run_scenario(&s, m, &PipelineConfig::default(), 5);
        assert_eq!(out.result.state_changes, 0);
        assert_eq!(out.result.false_positives, 0);
        assert_eq!(out.trace.count(TraceKind::StateChanged), 0);
        assert_eq!(out.trace.count(TraceKind::FaceTracked), 1);
    }
}

#[test]
fn vlc_at_three_metres() {
    let mut s = scene(Actor::new("a", Vec3::new(0.0, 0.0, 3.0)).with_led(), 5000.0);
    s.events.push(SignalEvent::new(500.0, "a", Modality::Vlc, PrivacyCommand::Blur));
    s.events.push(SignalEvent::new(3000.0, "a", Modality::Vlc, PrivacyCommand::Unblur));
    let out = run_scenario(&s, Modality::Vlc, &PipelineConfig::default(), 0);
    assert_eq!(out.result.correct, 2);
    for l in &out.result.latencies_ms {
        assert!((l - 600.0).abs() <= 33.0, "latency {l}");
    }
    let decoded: Vec<_> = out.trace.of_kind(TraceKind::PacketDecoded).collect();
    assert_eq!(decoded.len(), 2);
    assert_eq!(decoded[0].attr_str("bits"), Some("101011000000010011"));
    assert_eq!(decoded[1].attr_str("bits"), Some("101011000000100110"));
}

#[test]
fn uwb_at_six_metres_then_fast_path() {
    let mut s = scene(Actor::new("a", Vec3::new(0.0, 0.0, 6.0)).with_tag(TAG), 7000.0);
    s.events.push(SignalEvent::new(500.0, "a", Modality::Uwb, PrivacyCommand::Blur));
    s.events.push(SignalEvent::new(4000.0, "a", Modality::Uwb, PrivacyCommand::Unblur));
    let out = run_scenario(&s, Modality::Uwb, &PipelineConfig::default(), 0);
    let r = &out.result;
    assert_eq!((r.correct, r.false_positives), (2, 0));
    assert!((1950.0..=2017.0).contains(&r.latencies_ms[0]));
    assert!(r.latencies_ms[1] <= 1000.0 / 30.0);
    assert_eq!((r.ranging_sessions, r.fast_path_hits), (1, 1));
    assert_eq!(out.trace.count(TraceKind::Bound), 1);
    assert_eq!(out.trace.count(TraceKind::FastPath), 1);
}

#[test]
fn trigger_during_burst_is_dropped() {
    let mut s = scene(Actor::new("a", Vec3::new(0.0, 0.0, 4.0)).with_tag(TAG), 4000.0);
    s.events.push(SignalEvent::new(500.0, "a", Modality::Uwb, PrivacyCommand::Blur));
    s.injected_triggers.push(TriggerRecord { time_ms: 1200.0, mac: TAG, command: 0x02 });
    let out = run_scenario(&s, Modality::Uwb, &PipelineConfig::default(), 0);
    assert_eq!(out.trace.count(TraceKind::TriggerDropped), 1);
    assert_eq!(out.result.ranging_sessions, 1);
    assert_eq!(out.result.correct, 1);
}

#[test]
fn occlusion_forces_a_new_burst() {
    let mut actor = Actor::new("a", Vec3::new(0.0, 0.0, 4.0)).with_tag(TAG);
    actor.hidden_ms.push(bystander_core::scene::world::TimeWindow { start_ms: 3000.0, end_ms: 4500.0 });
    let mut s = scene(actor, 9000.0);
    s.events.push(SignalEvent::new(300.0, "a", Modality::Uwb, PrivacyCommand::Blur));
    s.events.push(SignalEvent::new(5000.0, "a", Modality::Uwb, PrivacyCommand::Unblur));
    let out = run_scenario(&s, Modality::Uwb, &PipelineConfig::default(), 0);
    assert_eq!(out.trace.count(TraceKind::FaceLost), 1);
    assert_eq!(out.result.ranging_sessions, 2);
    assert_eq!(out.result.fast_path_hits, 0);
    assert_eq!(out.stale_fast_path, 0);
    // the new face starts clear, so the unblur has nothing to do
    assert_eq!(out.result.correct, 1);
}

#[test]
fn uwb_ignores_optical_noise() {
    let mut s = scene(Actor::new("a", Vec3::new(0.5, 0.0, 5.0)).with_tag(TAG).with_led(), 7000.0);
    s.events.push(SignalEvent::new(500.0, "a", Modality::Uwb, PrivacyCommand::Blur));
    s.noise.uwb_angle_sigma_deg = 0.5;
    s.noise.uwb_distance_sigma_m = 0.05;
    let quiet = run_scenario(&s, Modality::Uwb, &PipelineConfig::default(), 11);
    s.noise.false_blob_rate = 2.0;
    s.noise.blob_dropout_prob = 0.3;
    s.noise.motion_glitch_prob = 0.2;
    s.noise.hand_dropout_prob = 0.5;
    let loud = run_scenario(&s, Modality::Uwb, &PipelineConfig::default(), 11);
    assert_eq!(quiet.result, loud.result);
    assert_eq!(quiet.trace_hash, loud.trace_hash);
}

#[test]
fn trace_is_time_ordered_and_every_change_has_a_cause() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/multi_user_vlc.json")).unwrap();
    let file = parse_scenario(&text).unwrap();
    let mut s = file.to_scenario();
    s.noise.false_blob_rate = 0.3;
    let out = run_scenario(&s, file.modality(), &file.config, 3);
    assert!(out.trace.events.windows(2).all(|w| w[0].t_ms <= w[1].t_ms));
    for e in out.trace.of_kind(TraceKind::StateChanged) {
        assert!(e.attrs.contains_key("face_id"));
        assert!(e.attr_str("cause").is_some());
    }
    let jsonl = out.trace.to_jsonl();
    assert_eq!(jsonl.lines().count(), out.trace.events.len());
}

#[test]
fn batch_seeds_are_base_plus_index() {
    let mut s = scene(Actor::new("a", Vec3::new(0.0, 0.0, 3.0)).with_led(), 2500.0);
    s.events.push(SignalEvent::new(500.0, "a", Modality::Vlc, PrivacyCommand::Blur));
    s.noise = NoiseModel { false_blob_rate: 0.8, blob_dropout_prob: 0.02, ..NoiseModel::default() };
    let cfg = PipelineConfig::default();
    let batch = run_batch(&s, Modality::Vlc, &cfg, 4, 10, 2);
    for (i, hash) in batch.trace_hashes.iter().enumerate() {
        assert_eq!(hash, &run_scenario(&s, Modality::Vlc, &cfg, 10 + i as u64).trace_hash);
    }
    assert_eq!(batch.aggregate.trials, 4);
}

#[test]
fn twenty_clean_trials_are_all_correct() {
    let mut s = scene(Actor::new("a", Vec3::new(0.0, 0.0, 1.0)).with_hand(), 2000.0);
    s.events.push(SignalEvent::new(400.0, "a", Modality::Gesture, PrivacyCommand::Blur));
    let out = run_batch(&s, Modality::Gesture, &PipelineConfig::default(), 20, 0, 3);
    assert_eq!(out.aggregate.accuracy(), 1.0);
    assert_eq!(out.aggregate.latencies_ms.len(), 20);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    /// Every toggle is either attributed or a false positive, and accuracy
    /// plus miss rate never exceeds one.
    #[test]
    fn metric_soundness(
        seed in any::<u64>(),
        false_blobs in 0.0f64..1.5,
        dropout in 0.0f64..0.2,
        jitter in 0.0f64..0.01,
        modality in prop_oneof![Just(Modality::Gesture), Just(Modality::Vlc), Just(Modality::Uwb)],
    ) {
        let mut s = Scenario::new(CameraModel::default(), 6000.0);
        s.actors.push(Actor::new("a", Vec3::new(-0.4, 0.0, 2.0)).with_led().with_hand().with_tag(TAG));
        s.actors.push(Actor::new("b", Vec3::new(0.6, 0.0, 2.5)).with_led().with_hand());
        s.events.push(SignalEvent::new(400.0, "a", modality, PrivacyCommand::Blur));
        if modality != Modality::Uwb {
            s.events.push(SignalEvent::new(2200.0, "b", modality, PrivacyCommand::Blur));
        }
        s.noise = NoiseModel {
            false_blob_rate: false_blobs,
            blob_dropout_prob: dropout,
            face_dropout_prob: dropout / 4.0,
            hand_dropout_prob: dropout,
            bbox_jitter_sigma: jitter,
            uwb_angle_sigma_deg: 1.0,
            ..NoiseModel::default()
        };
        let out = run_scenario(&s, modality, &PipelineConfig::default(), seed);
        let r = &out.result;
        prop_assert_eq!(r.correct + r.false_positives, r.state_changes);
        prop_assert_eq!(r.state_changes as usize, out.trace.count(TraceKind::StateChanged));
        prop_assert!(r.accuracy() + r.false_negative_rate() <= 1.0 + 1e-12);
        prop_assert!(r.latencies_ms.iter().all(|l| *l >= 0.0));
    }
}
