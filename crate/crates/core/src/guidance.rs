//! Three-dimensional line-of-sight guidance.
//!
//! The horizontal LOS point sits on the circle of acceptance around the
//! vehicle along the bearing to the active waypoint. The LOS depth keeps the
//! elevation angle to the waypoint, and the orientation reference follows
//! the straight segment leading into the active waypoint with zero roll.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vehicle::Pose;
use crate::wrap_angle;

/// Horizontal separations below this are treated as coincident.
pub const MIN_HORIZONTAL_DISTANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GuidanceError {
    #[error("vehicle is horizontally coincident with the target waypoint")]
    CoincidentPoint,
    #[error("segment ending at waypoint {index} is vertical or zero-length")]
    DegenerateSegment { index: usize },
    #[error("waypoint plan is complete")]
    PlanComplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_pose(pose: &Pose) -> Self {
        Self::new(pose.x, pose.y, pose.z)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }
}

impl From<[f64; 3]> for Waypoint {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Ordered waypoints (the last one is the destination) with acceptance radii.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPlan {
    pub waypoints: Vec<Waypoint>,
    /// Circle-of-acceptance radius, m.
    pub rho_c: f64,
    /// Sphere-of-acceptance radius, m.
    pub rho_s: f64,
    /// Index of the waypoint currently steered to; equals the waypoint count
    /// once the destination is reached.
    pub active_index: usize,
    /// Start of the first segment.
    pub origin: Waypoint,
}

impl WaypointPlan {
    pub fn new(waypoints: Vec<Waypoint>, rho_c: f64, rho_s: f64, origin: Waypoint) -> Self {
        Self {
            waypoints,
            rho_c,
            rho_s,
            active_index: 0,
            origin,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.active_index >= self.waypoints.len()
    }

    pub fn active(&self) -> Option<&Waypoint> {
        self.waypoints.get(self.active_index)
    }

    /// Start point of the segment ending at waypoint `index`.
    pub fn segment_start(&self, index: usize) -> Waypoint {
        if index == 0 {
            self.origin
        } else {
            self.waypoints[index - 1]
        }
    }
}

/// The tracked reference `[x_los y_los z_los 0 θp ψp]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LosReference {
    pub x_los: f64,
    pub y_los: f64,
    pub z_los: f64,
    pub phi_ref: f64,
    pub theta_ref: f64,
    pub psi_ref: f64,
}

impl LosReference {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.x_los,
            self.y_los,
            self.z_los,
            self.phi_ref,
            self.theta_ref,
            self.psi_ref,
        ]
    }
}

/// atan2 folded into `(-π, π]`.
fn heading(dy: f64, dx: f64) -> f64 {
    wrap_angle(dy.atan2(dx))
}

/// Bearing from the vehicle to the waypoint in the horizontal plane.
pub fn desired_heading(pos: (f64, f64), wp: &Waypoint) -> Result<f64, GuidanceError> {
    let dx = wp.x - pos.0;
    let dy = wp.y - pos.1;
    if dx.hypot(dy) < MIN_HORIZONTAL_DISTANCE {
        return Err(GuidanceError::CoincidentPoint);
    }
    Ok(heading(dy, dx))
}

/// Point on the circle of acceptance along `psi_d`.
///
/// The offset `ρc·(cos ψd, sin ψd)` is at distance ρc, lies on the ψd ray and
/// carries the sign of `x_p − x` in every quadrant.
pub fn los_horizontal(pos: (f64, f64), psi_d: f64, rho_c: f64) -> (f64, f64) {
    let (s, c) = psi_d.sin_cos();
    (pos.0 + rho_c * c, pos.1 + rho_c * s)
}

/// Finite-difference LOS surge speed. Diagnostic only.
pub fn los_surge_speed(x_los: f64, x_los_prev: f64, ts: f64) -> f64 {
    (x_los - x_los_prev) / ts
}

/// Elevation of the waypoint seen from the vehicle.
pub fn elevation_angle(pos: (f64, f64, f64), wp: &Waypoint) -> Result<f64, GuidanceError> {
    let h = (wp.x - pos.0).hypot(wp.y - pos.1);
    if h < MIN_HORIZONTAL_DISTANCE {
        return Err(GuidanceError::CoincidentPoint);
    }
    Ok(((wp.z - pos.2) / h).atan())
}

pub fn los_depth(z: f64, theta0: f64, rho_c: f64) -> f64 {
    z + theta0.tan() * rho_c
}

/// Sphere-of-acceptance test (inclusive).
pub fn switch_condition(pos: (f64, f64, f64), wp: &Waypoint, rho_s: f64) -> bool {
    let dx = wp.x - pos.0;
    let dy = wp.y - pos.1;
    let dz = wp.z - pos.2;
    dx * dx + dy * dy + dz * dz <= rho_s * rho_s
}

/// Yaw and pitch of the straight segment `from → to`, returned as
/// `(psi_p, theta_p)`.
pub fn path_orientation(from: &Waypoint, to: &Waypoint) -> Result<(f64, f64), GuidanceError> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    let h = dx.hypot(dy);
    if h < MIN_HORIZONTAL_DISTANCE {
        return Err(GuidanceError::DegenerateSegment { index: 0 });
    }
    Ok((heading(dy, dx), -((to.z - from.z) / h).atan()))
}

/// Advances waypoint switching for the current pose and computes the LOS
/// reference toward the active waypoint.
///
/// Switching is repeated while the pose lies inside the next sphere too.
/// Returns [`GuidanceError::PlanComplete`] once the destination is reached.
pub fn guidance_update(
    plan: &WaypointPlan,
    pose: &Pose,
) -> Result<(WaypointPlan, LosReference), GuidanceError> {
    let pos = (pose.x, pose.y, pose.z);
    let mut next = plan.clone();
    while let Some(wp) = next.active() {
        if switch_condition(pos, wp, next.rho_s) {
            next.active_index += 1;
        } else {
            break;
        }
    }
    let index = next.active_index;
    let target = *next.active().ok_or(GuidanceError::PlanComplete)?;

    let psi_d = desired_heading((pos.0, pos.1), &target)?;
    let (x_los, y_los) = los_horizontal((pos.0, pos.1), psi_d, next.rho_c);
    let theta0 = elevation_angle(pos, &target)?;
    let z_los = los_depth(pos.2, theta0, next.rho_c);
    let (psi_p, theta_p) = path_orientation(&next.segment_start(index), &target)
        .map_err(|_| GuidanceError::DegenerateSegment { index })?;

    Ok((
        next,
        LosReference {
            x_los,
            y_los,
            z_los,
            phi_ref: 0.0,
            theta_ref: theta_p,
            psi_ref: psi_p,
        },
    ))
}
