//! Closed-loop scenario runner.
//!
//! Per-step order: disturbance draw → guidance → controller → actuation →
//! truth step → log. Row `k` holds the state at `t = k·Ts` together with the
//! reference, wrench and wave force applied over `[t, t + Ts)`. When the
//! destination sphere is reached a final `terminal` row records the state
//! with zero wrench and the run stops.

pub mod config;
pub mod log;
pub mod metrics;

use rayon::prelude::*;
use thiserror::Error;

pub use config::{ConfigError, ScenarioConfig};
pub use log::{read_log, write_log, LogError, LogFormat, LogRow, RowStatus, SimLog};
pub use metrics::{compute_metrics, Metrics};

use crate::controller::{mpc_step, ControlError};
use crate::guidance::{guidance_update, GuidanceError, LosReference};
use crate::vehicle::{step_truth, DynamicsError, VehicleState};

#[derive(Debug, Error)]
pub enum AbortReason {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Control(#[from] ControlError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run aborted at t = {time} s: {reason}")]
    Aborted {
        time: f64,
        reason: AbortReason,
        /// Rows logged before the abort.
        log: Box<SimLog>,
    },
    #[error("sweep values must be positive and strictly ascending")]
    InvalidSweep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub log: SimLog,
    pub metrics: Metrics,
}

#[allow(clippy::too_many_arguments)]
fn row(
    t: f64,
    state: &VehicleState,
    tau: [f64; 6],
    tau_w: &nalgebra::Vector6<f64>,
    reference: &LosReference,
    active_index: usize,
    status: RowStatus,
    iterations: usize,
    cost: f64,
) -> LogRow {
    LogRow {
        t,
        pose: state.pose.to_vector().into(),
        nu: state.nu.to_vector().into(),
        tau,
        tau_w: [tau_w[0], tau_w[1], tau_w[2]],
        los_ref: reference.to_array(),
        active_index,
        qp_status: status,
        qp_iterations: iterations,
        worst_case_cost: cost,
    }
}

/// Runs the closed loop until the destination is reached or `max_sim_time`
/// elapses. Deterministic for a given config.
pub fn run_simulation(config: &ScenarioConfig) -> Result<SimResult, HarnessError> {
    config.validate()?;
    let params = config.vehicle_params();
    let tuning = config.tuning();
    let initial_plan = config.plan();
    let ts = config.ts;
    let steps = (config.max_sim_time / ts).floor() as usize;

    let mut plan = initial_plan.clone();
    let mut field = config.wave_field();
    let mut state = config.initial_state();
    let mut log = SimLog::default();
    let mut last_ref: Option<LosReference> = None;

    let abort = |t: f64, reason: AbortReason, log: SimLog| HarnessError::Aborted {
        time: t,
        reason,
        log: Box::new(log),
    };

    for k in 0..steps {
        let t = k as f64 * ts;
        let (next_field, tau_w) = field.step(ts);
        field = next_field;

        let reference = match guidance_update(&plan, &state.pose) {
            Ok((next_plan, reference)) => {
                plan = next_plan;
                reference
            }
            Err(GuidanceError::PlanComplete) => {
                plan.active_index = plan.waypoints.len();
                let reference = last_ref.unwrap_or_else(|| {
                    let dest = plan.waypoints.last().expect("plan is nonempty");
                    LosReference {
                        x_los: dest.x,
                        y_los: dest.y,
                        z_los: dest.z,
                        ..Default::default()
                    }
                });
                log.rows.push(row(
                    t,
                    &state,
                    [0.0; 6],
                    &tau_w,
                    &reference,
                    plan.active_index,
                    RowStatus::Terminal,
                    0,
                    0.0,
                ));
                break;
            }
            Err(e) => return Err(abort(t, e.into(), log)),
        };
        last_ref = Some(reference);

        let (tau, sol) = match mpc_step(&state, &state.nu, &reference, &tuning, &params) {
            Ok(out) => out,
            Err(e) => return Err(abort(t, e.into(), log)),
        };
        log.rows.push(row(
            t,
            &state,
            tau.0.into(),
            &tau_w,
            &reference,
            plan.active_index,
            sol.status.into(),
            sol.iterations,
            sol.worst_case_cost,
        ));

        state = match step_truth(&state, &tau, &tau_w, &params, ts) {
            Ok(s) => s,
            Err(e) => return Err(abort(t, e.into(), log)),
        };
    }

    let metrics = compute_metrics(&log, &initial_plan);
    Ok(SimResult { log, metrics })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho_c: f64,
    pub mean_surge: f64,
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows are comparable only when every run completed the plan.
    pub fn comparable(&self) -> bool {
        self.rows.iter().all(|r| r.completed)
    }

    pub fn surge_strictly_increasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].mean_surge > w[0].mean_surge)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("rho_c,mean_surge,completed\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.rho_c, r.mean_surge, r.completed));
        }
        out
    }
}

/// One run per circle-of-acceptance radius with the config's seed. Runs
/// execute in parallel; an aborted run contributes its partial-log metrics.
pub fn sweep_rho_c(config: &ScenarioConfig, values: &[f64]) -> Result<SweepTable, HarnessError> {
    if values.is_empty()
        || values.iter().any(|v| !(v.is_finite() && *v > 0.0))
        || values.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(HarnessError::InvalidSweep);
    }
    config.validate()?;
    let rows = values
        .par_iter()
        .map(|&rho_c| {
            let mut c = config.clone();
            c.guidance.rho_c = rho_c;
            let metrics = match run_simulation(&c) {
                Ok(res) => res.metrics,
                Err(HarnessError::Aborted { log, .. }) => compute_metrics(&log, &c.plan()),
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                rho_c,
                mean_surge: metrics.mean_surge,
                completed: metrics.completed,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable { rows })
}
