//! Coupled 6-DOF vehicle model.
//!
//! `M ν̇ + C(ν)ν + D(ν)ν + g(η) = τ + τʷ` with `η̇ = J(η)ν`.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default margin kept between |θ| and π/2.
pub const DEFAULT_PITCH_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("pitch {theta} rad is within {margin} rad of the ±π/2 singularity")]
    PitchSingularity { theta: f64, margin: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ParamsError {
    ParamsError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Inertial position and Euler angles (roll, pitch, yaw).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, phi: f64, theta: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            z,
            phi,
            theta,
            psi,
        }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.x, self.y, self.z, self.phi, self.theta, self.psi)
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }

    pub fn check_pitch(&self, margin: f64) -> Result<(), DynamicsError> {
        if self.theta.is_finite() && self.theta.abs() < std::f64::consts::FRAC_PI_2 - margin {
            Ok(())
        } else {
            Err(DynamicsError::PitchSingularity {
                theta: self.theta,
                margin,
            })
        }
    }
}

/// Body-frame linear velocities and angular rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl Velocity {
    pub fn new(u: f64, v: f64, w: f64, p: f64, q: f64, r: f64) -> Self {
        Self { u, v, w, p, q, r }
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.u, self.v, self.w, self.p, self.q, self.r)
    }
}

/// Generalized forces and moments `[X Y Z K M N]` at the center of gravity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench(pub Vector6<f64>);

impl Wrench {
    pub fn zero() -> Self {
        Self(Vector6::zeros())
    }

    pub fn as_vector(&self) -> &Vector6<f64> {
        &self.0
    }

    /// Clips every component to `[-bound, bound]`.
    pub fn saturate(&self, bound: f64) -> Self {
        Self(self.0.map(|v| v.clamp(-bound, bound)))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub pose: Pose,
    pub nu: Velocity,
}

impl VehicleState {
    pub fn new(pose: Pose, nu: Velocity) -> Self {
        Self { pose, nu }
    }
}

/// Full parameterization of the dynamic model.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    /// Rigid-body plus added-mass inertia.
    pub mass_matrix: Matrix6<f64>,
    pub linear_damping: Matrix6<f64>,
    /// Modulus damping coefficients; `D_quad(ν) = diag(|ν_i| · c_i)`.
    pub quadratic_damping: Vector6<f64>,
    /// Weight W, N.
    pub weight: f64,
    /// Buoyancy B, N.
    pub buoyancy: f64,
    /// Center of gravity in the body frame, m.
    pub r_g: Vector3<f64>,
    /// Center of buoyancy in the body frame, m.
    pub r_b: Vector3<f64>,
    /// Vehicle length, m.
    pub length: f64,
    /// Per-axis bound on generalized forces, N and N·m.
    pub tau_bar: f64,
    pub pitch_margin: f64,
}

impl VehicleParams {
    /// A synthetic 3 m vehicle. Non-physical but plausible: diagonally
    /// dominant SPD inertia with a few coupling terms, dissipative damping,
    /// slightly positive buoyancy and the center of gravity below the center
    /// of buoyancy.
    pub fn synthetic_default() -> Self {
        let mut mass_matrix =
            Matrix6::from_diagonal(&Vector6::new(190.0, 340.0, 340.0, 5.0, 220.0, 220.0));
        for &(i, j, v) in &[(0, 4, 9.0), (1, 3, -9.0), (1, 5, 6.0), (2, 4, -6.0)] {
            mass_matrix[(i, j)] = v;
            mass_matrix[(j, i)] = v;
        }
        Self {
            mass_matrix,
            linear_damping: Matrix6::from_diagonal(&Vector6::new(
                70.0, 200.0, 200.0, 15.0, 150.0, 150.0,
            )),
            quadratic_damping: Vector6::new(50.0, 300.0, 300.0, 5.0, 200.0, 200.0),
            weight: 1765.8,
            buoyancy: 1770.0,
            r_g: Vector3::new(0.0, 0.0, 0.05),
            r_b: Vector3::zeros(),
            length: 3.0,
            tau_bar: 2000.0,
            pitch_margin: DEFAULT_PITCH_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let m = &self.mass_matrix;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vehicle.M", "non-finite entry"));
        }
        if (m - m.transpose()).amax() > 1e-12 {
            return Err(invalid("vehicle.M", "not symmetric"));
        }
        let min_eig = SymmetricEigen::new(*m).eigenvalues.min();
        if min_eig <= 0.0 {
            return Err(invalid(
                "vehicle.M",
                format!("not positive definite (smallest eigenvalue {min_eig})"),
            ));
        }
        let d = &self.linear_damping;
        if d.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vehicle.D_lin", "non-finite entry"));
        }
        let sym = (d + d.transpose()) * 0.5;
        if SymmetricEigen::new(sym).eigenvalues.min() < -1e-12 {
            return Err(invalid(
                "vehicle.D_lin",
                "symmetric part is not positive semidefinite",
            ));
        }
        if self
            .quadratic_damping
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(invalid(
                "vehicle.D_quad",
                "coefficients must be finite and nonnegative",
            ));
        }
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(invalid("vehicle.W", "must be finite and nonnegative"));
        }
        if !(self.buoyancy.is_finite() && self.buoyancy >= 0.0) {
            return Err(invalid("vehicle.B", "must be finite and nonnegative"));
        }
        if self.r_g.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vehicle.r_g", "non-finite entry"));
        }
        if self.r_b.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vehicle.r_b", "non-finite entry"));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(invalid("vehicle.L", "must be positive"));
        }
        if !(self.tau_bar.is_finite() && self.tau_bar > 0.0) {
            return Err(invalid("vehicle.tau_bar", "must be positive"));
        }
        if !(self.pitch_margin.is_finite()
            && self.pitch_margin > 0.0
            && self.pitch_margin < std::f64::consts::FRAC_PI_2)
        {
            return Err(invalid("vehicle.pitch_margin", "must lie in (0, π/2)"));
        }
        Ok(())
    }
}

/// Body-to-inertial rotation of linear velocities.
pub fn linear_rotation(pose: &Pose) -> Matrix3<f64> {
    let (sphi, cphi) = pose.phi.sin_cos();
    let (sth, cth) = pose.theta.sin_cos();
    let (spsi, cpsi) = pose.psi.sin_cos();
    Matrix3::new(
        cpsi * cth,
        -spsi * cphi + cpsi * sth * sphi,
        spsi * sphi + cpsi * cphi * sth,
        spsi * cth,
        cpsi * cphi + sphi * sth * spsi,
        sth * spsi * cphi - cpsi * sphi,
        -sth,
        cth * sphi,
        cth * cphi,
    )
}

/// Body angular rates to Euler-angle rates. Singular at θ = ±π/2.
pub fn euler_rate_matrix(pose: &Pose, pitch_margin: f64) -> Result<Matrix3<f64>, DynamicsError> {
    pose.check_pitch(pitch_margin)?;
    let (sphi, cphi) = pose.phi.sin_cos();
    let cth = pose.theta.cos();
    let tth = pose.theta.tan();
    Ok(Matrix3::new(
        1.0,
        sphi * tth,
        cphi * tth,
        0.0,
        cphi,
        -sphi,
        0.0,
        sphi / cth,
        cphi / cth,
    ))
}

/// Block-diagonal kinematic transform `J(η) = diag(J1, J2)`.
pub fn rotation_matrix(pose: &Pose, pitch_margin: f64) -> Result<Matrix6<f64>, DynamicsError> {
    let j2 = euler_rate_matrix(pose, pitch_margin)?;
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&linear_rotation(pose));
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&j2);
    Ok(j)
}

fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Coriolis-centripetal matrix from the partitioned inertia matrix:
///
/// ```text
/// C(ν) = [ 0               -S(M11ν1 + M12ν2) ]
///        [ -S(M11ν1+M12ν2) -S(M21ν1 + M22ν2) ]
/// ```
///
/// Skew-symmetric for symmetric M, so `νᵀC(ν)ν = 0`.
pub fn coriolis_matrix(nu: &Velocity, params: &VehicleParams) -> Matrix6<f64> {
    let m = &params.mass_matrix;
    let v = nu.to_vector();
    let mv = m * v;
    let linear = Vector3::new(mv[0], mv[1], mv[2]);
    let angular = Vector3::new(mv[3], mv[4], mv[5]);
    let s_lin = -skew(&linear);
    let mut c = Matrix6::zeros();
    c.fixed_view_mut::<3, 3>(0, 3).copy_from(&s_lin);
    c.fixed_view_mut::<3, 3>(3, 0).copy_from(&s_lin);
    c.fixed_view_mut::<3, 3>(3, 3).copy_from(&(-skew(&angular)));
    c
}

/// `D_lin + diag(|ν_i| · D_quad_i)`.
pub fn damping_matrix(nu: &Velocity, params: &VehicleParams) -> Matrix6<f64> {
    let v = nu.to_vector();
    let quad = v.abs().component_mul(&params.quadratic_damping);
    params.linear_damping + Matrix6::from_diagonal(&quad)
}

/// Gravity and buoyancy wrench `g(η) = -[f_g + f_b; r_g × f_g + r_b × f_b]`
/// with `f_g = J1ᵀ[0 0 W]ᵀ` and `f_b = -J1ᵀ[0 0 B]ᵀ`.
pub fn restoring_vector(pose: &Pose, params: &VehicleParams) -> Vector6<f64> {
    let down = linear_rotation(pose).transpose() * Vector3::z();
    let f_g = down * params.weight;
    let f_b = -down * params.buoyancy;
    let force = -(f_g + f_b);
    let moment = -(params.r_g.cross(&f_g) + params.r_b.cross(&f_b));
    Vector6::new(force.x, force.y, force.z, moment.x, moment.y, moment.z)
}

/// `χ = C(ν)ν + D(ν)ν + g(η)`.
pub fn chi(nu: &Velocity, pose: &Pose, params: &VehicleParams) -> Vector6<f64> {
    let v = nu.to_vector();
    coriolis_matrix(nu, params) * v
        + damping_matrix(nu, params) * v
        + restoring_vector(pose, params)
}

/// Solves the dynamics for `ν̇ = M⁻¹(τ + τʷ − χ)`.
pub fn accel(
    state: &VehicleState,
    tau: &Wrench,
    tau_w: &Vector6<f64>,
    params: &VehicleParams,
) -> Vector6<f64> {
    let rhs = tau.0 + tau_w - chi(&state.nu, &state.pose, params);
    params
        .mass_matrix
        .cholesky()
        .expect("mass matrix is positive definite")
        .solve(&rhs)
}

fn derivative(
    eta: &Vector6<f64>,
    nu: &Vector6<f64>,
    tau: &Wrench,
    tau_w: &Vector6<f64>,
    params: &VehicleParams,
) -> Result<(Vector6<f64>, Vector6<f64>), DynamicsError> {
    let state = VehicleState::new(Pose::from_vector(eta), Velocity::from_vector(nu));
    let eta_dot = rotation_matrix(&state.pose, params.pitch_margin)? * nu;
    Ok((eta_dot, accel(&state, tau, tau_w, params)))
}

/// One classical Runge-Kutta step with τ and τʷ held over the interval.
pub fn step_truth(
    state: &VehicleState,
    tau: &Wrench,
    tau_w: &Vector6<f64>,
    params: &VehicleParams,
    ts: f64,
) -> Result<VehicleState, DynamicsError> {
    debug_assert!(ts > 0.0);
    let eta = state.pose.to_vector();
    let nu = state.nu.to_vector();
    let (k1e, k1n) = derivative(&eta, &nu, tau, tau_w, params)?;
    let (k2e, k2n) = derivative(
        &(eta + k1e * (ts / 2.0)),
        &(nu + k1n * (ts / 2.0)),
        tau,
        tau_w,
        params,
    )?;
    let (k3e, k3n) = derivative(
        &(eta + k2e * (ts / 2.0)),
        &(nu + k2n * (ts / 2.0)),
        tau,
        tau_w,
        params,
    )?;
    let (k4e, k4n) = derivative(&(eta + k3e * ts), &(nu + k3n * ts), tau, tau_w, params)?;
    let eta_next = eta + (k1e + k2e * 2.0 + k3e * 2.0 + k4e) * (ts / 6.0);
    let nu_next = nu + (k1n + k2n * 2.0 + k3n * 2.0 + k4n) * (ts / 6.0);
    let pose = Pose::from_vector(&eta_next);
    pose.check_pitch(params.pitch_margin)?;
    Ok(VehicleState::new(pose, Velocity::from_vector(&nu_next)))
}

/// Generalized forces realizing a velocity increment over one sample:
/// `τ = (M / Ts)·Δν + χ(ν_prev, η)`. No saturation is applied.
pub fn inverse_dynamics(
    delta_nu: &Vector6<f64>,
    nu_prev: &Velocity,
    pose: &Pose,
    params: &VehicleParams,
    ts: f64,
) -> Wrench {
    Wrench(params.mass_matrix * delta_nu / ts + chi(nu_prev, pose, params))
}
