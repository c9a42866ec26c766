//! Wave-force disturbance.
//!
//! Each translational axis carries a second-order filter driven by white
//! noise plus a slowly varying bias:
//!
//! ```text
//! ż1 = z2
//! ż2 = -ω0² z1 - 2 ξ ω0 z2 + Kw w
//! τʷ = z2 + d
//! ```
//!
//! The bias `d` is a Wiener process clamped to `bias_bounds`. Both are
//! advanced with Euler-Maruyama at the caller's sample time.

use nalgebra::Vector6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct WaveParamsError {
    pub field: String,
    pub reason: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveAxisParams {
    /// Damping ratio.
    pub xi: f64,
    /// Peak frequency, rad/s.
    pub omega0: f64,
    #[serde(rename = "Kw")]
    pub kw: f64,
    pub noise_std: f64,
    pub bias_bounds: [f64; 2],
    /// Wiener increment standard deviation per √s.
    pub bias_step_std: f64,
}

impl WaveAxisParams {
    /// Wave settings of the reference course.
    pub fn reference() -> Self {
        Self {
            xi: 0.2573,
            omega0: 0.8,
            kw: 1.5,
            noise_std: 0.15,
            bias_bounds: [-100.0, 100.0],
            bias_step_std: 2.0,
        }
    }

    /// No noise and no bias drift.
    pub fn calm() -> Self {
        Self {
            noise_std: 0.0,
            bias_step_std: 0.0,
            ..Self::reference()
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<(), WaveParamsError> {
        let err = |name: &str, reason| WaveParamsError {
            field: format!("{prefix}.{name}"),
            reason,
        };
        if !(self.xi.is_finite() && self.xi > 0.0) {
            return Err(err("xi", "must be positive"));
        }
        if !(self.omega0.is_finite() && self.omega0 > 0.0) {
            return Err(err("omega0", "must be positive"));
        }
        if !self.kw.is_finite() {
            return Err(err("Kw", "must be finite"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(err("noise_std", "must be nonnegative"));
        }
        let [lo, hi] = self.bias_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(err("bias_bounds", "must be finite with lo <= hi"));
        }
        if !(self.bias_step_std.is_finite() && self.bias_step_std >= 0.0) {
            return Err(err("bias_step_std", "must be nonnegative"));
        }
        Ok(())
    }

    /// Stationary variance of `z2` for the continuous-time filter.
    pub fn stationary_rate_variance(&self) -> f64 {
        let s = self.kw * self.noise_std;
        s * s / (4.0 * self.xi * self.omega0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WaveAxisState {
    pub z1: f64,
    pub z2: f64,
    /// Slowly varying bias.
    pub d: f64,
}

/// One Euler-Maruyama step. `noise_sample` and `bias_sample` are already
/// scaled by their standard deviations.
pub fn wave_step(
    state: &WaveAxisState,
    params: &WaveAxisParams,
    noise_sample: f64,
    bias_sample: f64,
    ts: f64,
) -> WaveAxisState {
    let w0 = params.omega0;
    let z1 = state.z1 + ts * state.z2;
    let z2 = state.z2
        + ts * (-w0 * w0 * state.z1 - 2.0 * params.xi * w0 * state.z2)
        + params.kw * noise_sample * ts.sqrt();
    let [lo, hi] = params.bias_bounds;
    let d = (state.d + bias_sample * ts.sqrt()).clamp(lo, hi);
    WaveAxisState { z1, z2, d }
}

pub fn wave_output(state: &WaveAxisState) -> f64 {
    state.z2 + state.d
}

/// Three-axis wave field with its own seeded generator.
///
/// The generator is ChaCha8 seeded through `seed_from_u64`, and standard
/// normals come from `rand_distr::StandardNormal`. Per step the draw order
/// is X noise, X bias, Y noise, Y bias, Z noise, Z bias; in common-mode only
/// one noise and one bias sample are drawn and shared by all axes.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub axes: [(WaveAxisParams, WaveAxisState); 3],
    pub common_mode: bool,
    pub rng_seed: u64,
    step_index: u64,
    rng: ChaCha8Rng,
}

impl WaveField {
    pub fn new(params: [WaveAxisParams; 3], common_mode: bool, seed: u64) -> Self {
        Self {
            axes: params.map(|p| (p, WaveAxisState::default())),
            common_mode,
            rng_seed: seed,
            step_index: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn with_states(mut self, states: [WaveAxisState; 3]) -> Self {
        for (axis, s) in self.axes.iter_mut().zip(states) {
            axis.1 = s;
        }
        self
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn wrench(&self) -> Vector6<f64> {
        assemble_wrench(self)
    }

    /// Advances every axis one sample and returns the new field with its
    /// wrench.
    pub fn step(&self, ts: f64) -> (WaveField, Vector6<f64>) {
        let mut next = self.clone();
        let draw = |std: f64, rng: &mut ChaCha8Rng| {
            let z: f64 = rng.sample(StandardNormal);
            z * std
        };
        if self.common_mode {
            let p = &self.axes[0].0;
            let noise = draw(p.noise_std, &mut next.rng);
            let bias = draw(p.bias_step_std, &mut next.rng);
            for (params, state) in next.axes.iter_mut() {
                *state = wave_step(state, params, noise, bias, ts);
            }
        } else {
            for (params, state) in next.axes.iter_mut() {
                let noise = draw(params.noise_std, &mut next.rng);
                let bias = draw(params.bias_step_std, &mut next.rng);
                *state = wave_step(state, params, noise, bias, ts);
            }
        }
        next.step_index += 1;
        let w = next.wrench();
        (next, w)
    }
}

/// `[τʷ_X τʷ_Y τʷ_Z 0 0 0]`.
pub fn assemble_wrench(field: &WaveField) -> Vector6<f64> {
    let out = field.axes.map(|(_, s)| wave_output(&s));
    Vector6::new(out[0], out[1], out[2], 0.0, 0.0, 0.0)
}

pub fn field_step(field: &WaveField, ts: f64) -> (WaveField, Vector6<f64>) {
    field.step(ts)
}
