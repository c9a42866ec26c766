//! Three-dimensional waypoint path following for a fully coupled 6-DOF
//! autonomous underwater vehicle.
//!
//! The stack has four layers, each usable on its own:
//!
//! - [`vehicle`]: the continuous-time rigid-body + hydrodynamic model used as
//!   the simulation truth, plus the inverse-dynamics map from velocity
//!   increments to generalized forces.
//! - [`disturbance`]: second-order wave-force filters with a clipped Wiener
//!   bias.
//! - [`guidance`]: line-of-sight guidance producing a 3D position and
//!   orientation reference from a waypoint plan.
//! - [`controller`]: a linear parameter-varying minimax MPC solved exactly as a
//!   convex epigraph QP.
//!
//! [`harness`] closes the loop, logs every step and computes scenario metrics.
//!
//! Sign convention: `z` is a signed inertial coordinate and every formula is
//! applied literally. The kinematics are the usual north-east-down ones, so a
//! positive pitch with positive surge makes `z` decrease.

pub mod controller;
pub mod disturbance;
pub mod guidance;
pub mod harness;
pub mod vehicle;

pub use controller::{mpc_step, ControlSolution, McTuning, SolveStatus};
pub use disturbance::{WaveAxisParams, WaveAxisState, WaveField};
pub use guidance::{guidance_update, LosReference, Waypoint, WaypointPlan};
pub use harness::{run_simulation, Metrics, ScenarioConfig, SimLog};
pub use vehicle::{Pose, VehicleParams, VehicleState, Velocity, Wrench};

use std::f64::consts::PI;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}
