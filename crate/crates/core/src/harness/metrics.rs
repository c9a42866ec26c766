use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::log::SimLog;
use crate::guidance::WaypointPlan;

/// Scenario statistics derived from a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// First time each waypoint's sphere was entered, in plan order.
    pub waypoint_hit_times: Vec<Option<f64>>,
    /// Mean surge over the interior 80% of every segment, m/s.
    pub mean_surge: f64,
    pub surge_std: f64,
    /// Degrees.
    pub mean_abs_roll: f64,
    /// Degrees.
    pub max_abs_roll: f64,
    pub max_abs_tau: f64,
    /// RMS distance to the line of each segment, m; `None` when no samples fall in it.
    pub cross_track_rms: Vec<Option<f64>>,
    pub completed: bool,
}

/// Distance to the infinite line through `a` and `b`.
fn distance_to_line(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = (p - a).dot(&ab) / len2;
    (p - (a + ab * s)).norm()
}

/// Derives [`Metrics`] from a log.
///
/// Hit times come from sequential sphere tests on the logged positions.
/// Segment `p` spans from the previous hit (or the first row) to its own hit
/// (or the last row when never reached).
pub fn compute_metrics(log: &SimLog, plan: &WaypointPlan) -> Metrics {
    let n = plan.waypoints.len();
    let mut hits: Vec<Option<f64>> = vec![None; n];
    let mut next = 0;
    for row in &log.rows {
        let pos = (row.pose[0], row.pose[1], row.pose[2]);
        while next < n && crate::guidance::switch_condition(pos, &plan.waypoints[next], plan.rho_s)
        {
            hits[next] = Some(row.t);
            next += 1;
        }
    }
    let completed = n > 0 && hits.iter().all(Option::is_some);

    let (first_t, last_t) = match (log.rows.first(), log.rows.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => {
            return Metrics {
                waypoint_hit_times: hits,
                mean_surge: 0.0,
                surge_std: 0.0,
                mean_abs_roll: 0.0,
                max_abs_roll: 0.0,
                max_abs_tau: 0.0,
                cross_track_rms: vec![None; n],
                completed: false,
            }
        }
    };

    let mut surge = Vec::new();
    let mut cross_track_rms = vec![None; n];
    for p in 0..n {
        let start = if p == 0 { Some(first_t) } else { hits[p - 1] };
        let Some(start) = start else { break };
        let end = hits[p].unwrap_or(last_t);
        let margin = 0.1 * (end - start);
        let a = plan.segment_start(p).to_vector();
        let b = plan.waypoints[p].to_vector();
        let mut sq = 0.0;
        let mut count = 0usize;
        for row in log.rows.iter().filter(|r| r.t >= start && r.t <= end) {
            let pos = Vector3::new(row.pose[0], row.pose[1], row.pose[2]);
            let d = distance_to_line(&pos, &a, &b);
            sq += d * d;
            count += 1;
            if row.t >= start + margin && row.t <= end - margin {
                surge.push(row.nu[0]);
            }
        }
        if count > 0 {
            cross_track_rms[p] = Some((sq / count as f64).sqrt());
        }
    }
    let (mean_surge, surge_std) = if surge.is_empty() {
        (0.0, 0.0)
    } else {
        let m = surge.iter().sum::<f64>() / surge.len() as f64;
        let var = surge.iter().map(|u| (u - m) * (u - m)).sum::<f64>() / surge.len() as f64;
        (m, var.sqrt())
    };

    let rolls: Vec<f64> = log
        .rows
        .iter()
        .map(|r| r.pose[3].abs().to_degrees())
        .collect();
    let mean_abs_roll = rolls.iter().sum::<f64>() / rolls.len() as f64;
    let max_abs_roll = rolls.iter().copied().fold(0.0, f64::max);
    let max_abs_tau = log
        .rows
        .iter()
        .flat_map(|r| r.tau.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));

    Metrics {
        waypoint_hit_times: hits,
        mean_surge,
        surge_std,
        mean_abs_roll,
        max_abs_roll,
        max_abs_tau,
        cross_track_rms,
        completed,
    }
}
