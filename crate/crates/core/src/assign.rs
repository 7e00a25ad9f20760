//! Greedy nearest-pair assignment shared by the face and hand trackers.

/// Pair tracks with detections in ascending distance order. Pairs at or
/// beyond `gate` are never formed. Equal distances are broken by the
/// track's `rank` (lower wins), then by detection index.
///
/// Returns, for each detection, the index of the track it was given.
pub fn greedy_assign(
    ranks: &[u64],
    detections: usize,
    gate: f64,
    mut distance: impl FnMut(usize, usize) -> f64,
) -> Vec<Option<usize>> {
    let mut pairs = Vec::new();
    for (t, _) in ranks.iter().enumerate() {
        for d in 0..detections {
            let dist = distance(t, d);
            if dist < gate {
                pairs.push((dist, ranks[t], d, t));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut track_used = vec![false; ranks.len()];
    let mut out = vec![None; detections];
    for (_, _, d, t) in pairs {
        if !track_used[t] && out[d].is_none() {
            track_used[t] = true;
            out[d] = Some(t);
        }
    }
    out
}
