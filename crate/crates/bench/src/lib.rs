//! Fixtures shared by the benchmarks.

use bystander_core::geometry::Vec3;
use bystander_core::scene::camera::CameraModel;
use bystander_core::scene::world::{Actor, Scenario, SignalEvent};
use bystander_core::types::{Mac, Modality, PrivacyCommand};

/// `n` actors spread across the frame at 2-6 m, each carrying every signaling
/// device and signaling once with `modality`.
pub fn crowd(n: usize, modality: Modality, duration_ms: f64) -> Scenario {
    let mut s = Scenario::new(CameraModel::default(), duration_ms);
    s.hand_max_range_m = 6.5;
    for i in 0..n {
        let z = 2.0 + (i % 5) as f64;
        let x = (i as f64 / n.max(1) as f64 - 0.5) * 0.9 * z;
        let id = format!("p{i}");
        let mac = Mac([0x0B, 0, 0, 0, 0, i as u8]);
        s.actors.push(Actor::new(&id, Vec3::new(x, 0.0, z)).with_led().with_hand().with_tag(mac));
        s.events.push(SignalEvent::new(300.0 + 150.0 * i as f64, id, modality, PrivacyCommand::Blur));
    }
    s
}
