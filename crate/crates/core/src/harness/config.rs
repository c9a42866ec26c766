//! Scenario configuration file.
//!
//! JSON, UTF-8, strict: unknown keys are rejected at every level. Matrices
//! are row-major nested arrays. See `scenarios/reference_course.json` for a
//! complete example.

use std::path::Path;

use nalgebra::{Matrix6, SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::McTuning;
use crate::disturbance::{WaveAxisParams, WaveField};
use crate::guidance::{Waypoint, WaypointPlan};
use crate::vehicle::{Pose, VehicleParams, VehicleState, Velocity, DEFAULT_PITCH_MARGIN};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Malformed(String),
    #[error("{field}: {message}")]
    Schema { field: String, message: String },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    /// Dotted path of the offending field, when known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Schema { field, .. } | ConfigError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    #[serde(rename = "M")]
    pub mass_matrix: [[f64; 6]; 6],
    #[serde(rename = "D_lin")]
    pub linear_damping: [[f64; 6]; 6],
    #[serde(rename = "D_quad")]
    pub quadratic_damping: [f64; 6],
    #[serde(rename = "W")]
    pub weight: f64,
    #[serde(rename = "B")]
    pub buoyancy: f64,
    pub r_g: [f64; 3],
    pub r_b: [f64; 3],
    #[serde(rename = "L")]
    pub length: f64,
    pub tau_bar: f64,
    #[serde(default = "default_pitch_margin")]
    pub pitch_margin: f64,
}

fn default_pitch_margin() -> f64 {
    DEFAULT_PITCH_MARGIN
}

fn rows_to_matrix(rows: &[[f64; 6]; 6]) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| rows[i][j])
}

fn matrix_to_rows(m: &Matrix6<f64>) -> [[f64; 6]; 6] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

impl VehicleConfig {
    pub fn to_params(&self) -> VehicleParams {
        VehicleParams {
            mass_matrix: rows_to_matrix(&self.mass_matrix),
            linear_damping: rows_to_matrix(&self.linear_damping),
            quadratic_damping: Vector6::from_row_slice(&self.quadratic_damping),
            weight: self.weight,
            buoyancy: self.buoyancy,
            r_g: Vector3::from_row_slice(&self.r_g),
            r_b: Vector3::from_row_slice(&self.r_b),
            length: self.length,
            tau_bar: self.tau_bar,
            pitch_margin: self.pitch_margin,
        }
    }

    pub fn from_params(p: &VehicleParams) -> Self {
        Self {
            mass_matrix: matrix_to_rows(&p.mass_matrix),
            linear_damping: matrix_to_rows(&p.linear_damping),
            quadratic_damping: p.quadratic_damping.into(),
            weight: p.weight,
            buoyancy: p.buoyancy,
            r_g: p.r_g.into(),
            r_b: p.r_b.into(),
            length: p.length,
            tau_bar: p.tau_bar,
            pitch_margin: p.pitch_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceConfig {
    pub waypoints: Vec<[f64; 3]>,
    pub rho_c: f64,
    pub rho_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    #[serde(rename = "Q")]
    pub q: [f64; 6],
    #[serde(rename = "R")]
    pub r: [f64; 6],
    #[serde(rename = "N")]
    pub horizon: usize,
    #[serde(rename = "Nu")]
    pub control_horizon: usize,
    pub d_bar: [f64; 12],
    #[serde(default = "default_qp_tol")]
    pub qp_tol: f64,
    #[serde(default = "default_qp_max_iter")]
    pub qp_max_iter: usize,
}

fn default_qp_tol() -> f64 {
    1e-6
}

fn default_qp_max_iter() -> usize {
    4000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    /// Drive all three axes from one noise and one bias stream.
    pub common_mode: bool,
    /// X, Y, Z.
    pub axes: [WaveAxisParams; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    /// `[x, y, z, phi, theta, psi]`.
    pub pose: [f64; 6],
    /// `[u, v, w, p, q, r]`.
    pub nu: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub vehicle: VehicleConfig,
    pub guidance: GuidanceConfig,
    pub tuning: TuningConfig,
    pub wave: WaveConfig,
    pub initial_state: InitialStateConfig,
    #[serde(rename = "Ts")]
    pub ts: f64,
    pub max_sim_time: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// The reference course with the synthetic default vehicle.
    pub fn reference() -> Self {
        let tuning = McTuning::reference();
        let start = [10.0, 30.0, -16.0];
        let yaw = (40.0f64 - start[1]).atan2(20.0 - start[0]);
        Self {
            vehicle: VehicleConfig::from_params(&VehicleParams::synthetic_default()),
            guidance: GuidanceConfig {
                waypoints: vec![
                    [20.0, 40.0, -16.0],
                    [50.0, 20.0, -16.0],
                    [70.0, 50.0, -8.0],
                    [40.0, 70.0, -4.0],
                ],
                rho_c: 0.5,
                rho_s: 3.0,
            },
            tuning: TuningConfig {
                q: tuning.q.into(),
                r: tuning.r.into(),
                horizon: tuning.horizon,
                control_horizon: tuning.control_horizon,
                d_bar: tuning.d_bar.into(),
                qp_tol: tuning.qp_tol,
                qp_max_iter: tuning.qp_max_iter,
            },
            wave: WaveConfig {
                common_mode: true,
                axes: [WaveAxisParams::reference(); 3],
            },
            initial_state: InitialStateConfig {
                pose: [start[0], start[1], start[2], 0.0, 0.0, yaw],
                nu: [0.0; 6],
            },
            ts: tuning.ts,
            max_sim_time: 300.0,
            seed: 42,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn vehicle_params(&self) -> VehicleParams {
        self.vehicle.to_params()
    }

    pub fn tuning(&self) -> McTuning {
        let t = &self.tuning;
        McTuning {
            q: Vector6::from_row_slice(&t.q),
            r: Vector6::from_row_slice(&t.r),
            horizon: t.horizon,
            control_horizon: t.control_horizon,
            d_bar: SVector::from_row_slice(&t.d_bar),
            tau_bar: self.vehicle.tau_bar,
            ts: self.ts,
            qp_tol: t.qp_tol,
            qp_max_iter: t.qp_max_iter,
        }
    }

    pub fn initial_state(&self) -> VehicleState {
        let p = &self.initial_state.pose;
        let v = &self.initial_state.nu;
        VehicleState::new(
            Pose::new(p[0], p[1], p[2], p[3], p[4], p[5]),
            Velocity::new(v[0], v[1], v[2], v[3], v[4], v[5]),
        )
    }

    /// Waypoint plan whose first segment starts at the initial position.
    pub fn plan(&self) -> WaypointPlan {
        let origin = Waypoint::from_pose(&self.initial_state().pose);
        WaypointPlan::new(
            self.guidance
                .waypoints
                .iter()
                .map(|w| Waypoint::from(*w))
                .collect(),
            self.guidance.rho_c,
            self.guidance.rho_s,
            origin,
        )
    }

    pub fn wave_field(&self) -> WaveField {
        WaveField::new(self.wave.axes, self.wave.common_mode, self.seed)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.vehicle_params().validate().map_err(|e| match e {
            crate::vehicle::ParamsError::Invalid { field, reason } => invalid(field, reason),
        })?;

        let g = &self.guidance;
        if g.waypoints.is_empty() {
            return Err(invalid(
                "guidance.waypoints",
                "at least one waypoint is required",
            ));
        }
        if g.waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("guidance.waypoints", "coordinates must be finite"));
        }
        if !(g.rho_c.is_finite() && g.rho_c > 0.0) {
            return Err(invalid("guidance.rho_c", "must be positive"));
        }
        if !(g.rho_s.is_finite() && g.rho_s > 0.0) {
            return Err(invalid("guidance.rho_s", "must be positive"));
        }

        self.tuning().validate().map_err(|e| match e {
            crate::controller::ControlError::InvalidTuning { field, reason } => {
                invalid(field, reason)
            }
            other => invalid("tuning", other.to_string()),
        })?;

        for (i, axis) in self.wave.axes.iter().enumerate() {
            axis.validate(&format!("wave.axes[{i}]"))
                .map_err(|e| invalid(e.field, e.reason))?;
        }

        let s = &self.initial_state;
        if s.pose.iter().chain(s.nu.iter()).any(|v| !v.is_finite()) {
            return Err(invalid("initial_state", "values must be finite"));
        }
        if self
            .initial_state()
            .pose
            .check_pitch(self.vehicle.pitch_margin)
            .is_err()
        {
            return Err(invalid("initial_state.pose", "pitch is too close to ±π/2"));
        }
        if !(self.ts.is_finite() && self.ts > 0.0) {
            return Err(invalid("Ts", "must be positive"));
        }
        if !(self.max_sim_time.is_finite() && self.max_sim_time > self.ts) {
            return Err(invalid("max_sim_time", "must exceed Ts"));
        }
        Ok(())
    }
}

/// Maps a deserialization failure to the dotted field it concerns.
fn schema_error(err: serde_path_to_error::Error<serde_json::Error>) -> ConfigError {
    let path = err.path().to_string();
    let inner = err.into_inner();
    if inner.is_syntax() || inner.is_eof() || inner.is_io() {
        return ConfigError::Malformed(inner.to_string());
    }
    let message = inner.to_string();
    // unknown keys are already the last path segment
    let named = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    let field = match (named, path.as_str()) {
        (Some(name), ".") => name.to_owned(),
        (Some(name), parent) => format!("{parent}.{name}"),
        (None, p) => p.to_owned(),
    };
    ConfigError::Schema { field, message }
}
