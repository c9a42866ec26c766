//! Minimax model predictive control on a frozen LPV kinematic model.
//!
//! The prediction state is `x = [η; ν]` and the decision variables are
//! velocity increments:
//!
//! ```text
//! x(k+1) = [I J(k); 0 I] x(k) + [J(k); I] Δν(k),   J(k) = J(η(k))·Ts
//! ```
//!
//! `J(k)` is frozen at the current pose over the horizon, and increments
//! beyond the control horizon are zero. A bounded disturbance is added to
//! every stacked prediction block. Because each output component then enters
//! the cost as `Q_i (a_i + d_i)²` with `|d_i| ≤ d̄_i`, the inner maximum is
//! `Q_i (|a_i| + d̄_i)²` in closed form. Replacing `|a_i|` with an epigraph
//! variable `t_i ≥ ±a_i` gives a convex QP whose optimum is the minimax
//! optimum; the cross term `2 Q_i d̄_i t_i` acts as an L1 penalty on the
//! predicted tracking error.
//!
//! Input bounds are imposed on `τ = (M/Ts)Δν + χ(ν_prev)` for every
//! increment in the control horizon, with χ frozen at the measured velocity.

pub mod qp;

use nalgebra::{DMatrix, DVector, SMatrix, SVector, Vector6};
use thiserror::Error;

pub use qp::{solve_qp, GoldfarbIdnani, QpError, QpProblem, QpSolution, QpSolver, QpStatus};

use crate::guidance::LosReference;
use crate::vehicle::{
    chi, inverse_dynamics, rotation_matrix, DynamicsError, Pose, VehicleParams, VehicleState,
    Velocity, Wrench,
};
use crate::wrap_angle;

pub type StateVector = SVector<f64, 12>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error("{field}: {reason}")]
    InvalidTuning { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpvModel {
    pub a: SMatrix<f64, 12, 12>,
    pub b: SMatrix<f64, 12, 6>,
    pub frozen_pose: Pose,
    pub ts: f64,
}

impl LpvModel {
    pub fn propagate(&self, x: &StateVector, delta_nu: &Vector6<f64>) -> StateVector {
        self.a * x + self.b * delta_nu
    }
}

pub fn build_lpv(pose: &Pose, ts: f64, pitch_margin: f64) -> Result<LpvModel, DynamicsError> {
    let j = rotation_matrix(pose, pitch_margin)? * ts;
    let mut a = SMatrix::<f64, 12, 12>::identity();
    a.fixed_view_mut::<6, 6>(0, 6).copy_from(&j);
    let mut b = SMatrix::<f64, 12, 6>::zeros();
    b.fixed_view_mut::<6, 6>(0, 0).copy_from(&j);
    b.fixed_view_mut::<6, 6>(6, 0)
        .copy_from(&SMatrix::<f64, 6, 6>::identity());
    Ok(LpvModel {
        a,
        b,
        frozen_pose: *pose,
        ts,
    })
}

/// Stacked predictions `X = Ã x + B̃ U` over `horizon` steps with
/// `control_horizon` free increments.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionOperators {
    pub a_tilde: DMatrix<f64>,
    pub b_tilde: DMatrix<f64>,
    pub g_tilde: DMatrix<f64>,
    pub horizon: usize,
    pub control_horizon: usize,
}

pub fn build_prediction(
    model: &LpvModel,
    horizon: usize,
    control_horizon: usize,
) -> Result<PredictionOperators, ControlError> {
    check_horizons(horizon, control_horizon)?;
    let mut powers = Vec::with_capacity(horizon + 1);
    powers.push(SMatrix::<f64, 12, 12>::identity());
    for k in 0..horizon {
        powers.push(powers[k] * model.a);
    }
    let mut a_tilde = DMatrix::zeros(12 * horizon, 12);
    let mut b_tilde = DMatrix::zeros(12 * horizon, 6 * control_horizon);
    let mut g_tilde = DMatrix::zeros(6 * horizon, 12 * horizon);
    for j in 0..horizon {
        a_tilde
            .fixed_view_mut::<12, 12>(12 * j, 0)
            .copy_from(&powers[j + 1]);
        for i in 0..control_horizon.min(j + 1) {
            b_tilde
                .fixed_view_mut::<12, 6>(12 * j, 6 * i)
                .copy_from(&(powers[j - i] * model.b));
        }
        g_tilde
            .fixed_view_mut::<6, 6>(6 * j, 12 * j)
            .fill_with_identity();
    }
    Ok(PredictionOperators {
        a_tilde,
        b_tilde,
        g_tilde,
        horizon,
        control_horizon,
    })
}

fn check_horizons(horizon: usize, control_horizon: usize) -> Result<(), ControlError> {
    if control_horizon == 0 || control_horizon > horizon {
        return Err(ControlError::InvalidTuning {
            field: "tuning.Nu",
            reason: format!("need 1 <= Nu <= N, got Nu = {control_horizon}, N = {horizon}"),
        });
    }
    Ok(())
}

/// Controller tuning and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McTuning {
    /// Diagonal output weights.
    pub q: Vector6<f64>,
    /// Diagonal increment weights.
    pub r: Vector6<f64>,
    pub horizon: usize,
    pub control_horizon: usize,
    /// Bounds on the lumped 12-component disturbance. Only the first six
    /// (output-visible) components affect the cost.
    pub d_bar: SVector<f64, 12>,
    pub tau_bar: f64,
    pub ts: f64,
    pub qp_tol: f64,
    pub qp_max_iter: usize,
}

impl McTuning {
    /// The reference tuning: Q = diag(5,5,5,0.1,0.1,0.1), R = 18·I, N = 10,
    /// Nu = 2, d̄ = 0.5, τ̄ = 2000, Ts = 0.1.
    pub fn reference() -> Self {
        Self {
            q: Vector6::new(5.0, 5.0, 5.0, 0.1, 0.1, 0.1),
            r: Vector6::repeat(18.0),
            horizon: 10,
            control_horizon: 2,
            d_bar: SVector::repeat(0.5),
            tau_bar: 2000.0,
            ts: 0.1,
            qp_tol: 1e-6,
            qp_max_iter: 4000,
        }
    }

    pub fn output_bounds(&self) -> Vector6<f64> {
        self.d_bar.fixed_rows::<6>(0).into_owned()
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        let bad = |field, reason: &str| {
            Err(ControlError::InvalidTuning {
                field,
                reason: reason.to_owned(),
            })
        };
        if self.q.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("tuning.Q", "weights must be positive");
        }
        if self.r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("tuning.R", "weights must be positive");
        }
        if self.horizon == 0 {
            return bad("tuning.N", "must be at least 1");
        }
        check_horizons(self.horizon, self.control_horizon)?;
        if self.d_bar.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("tuning.d_bar", "bounds must be nonnegative");
        }
        if !(self.tau_bar.is_finite() && self.tau_bar > 0.0) {
            return bad("vehicle.tau_bar", "must be positive");
        }
        if !(self.ts.is_finite() && self.ts > 0.0) {
            return bad("Ts", "must be positive");
        }
        if !(self.qp_tol.is_finite() && self.qp_tol > 0.0) {
            return bad("tuning.qp_tol", "must be positive");
        }
        if self.qp_max_iter == 0 {
            return bad("tuning.qp_max_iter", "must be at least 1");
        }
        Ok(())
    }
}

/// Reference stacked over the horizon and held constant. Angle references
/// are shifted so that each angle error relative to the current pose lies in
/// `(-π, π]`.
pub fn stacked_references(pose: &Pose, reference: &LosReference, horizon: usize) -> DVector<f64> {
    let current = pose.to_vector();
    let mut r = reference.to_array();
    for k in 3..6 {
        r[k] = current[k] + wrap_angle(r[k] - current[k]);
    }
    DVector::from_fn(6 * horizon, |i, _| r[i % 6])
}

fn output_map(ops: &PredictionOperators) -> DMatrix<f64> {
    &ops.g_tilde * &ops.b_tilde
}

/// Predicted output error `a(U) = G̃(Ãx + B̃U) − refs`.
pub fn tracking_residual(
    u: &DVector<f64>,
    x: &StateVector,
    refs: &DVector<f64>,
    ops: &PredictionOperators,
) -> DVector<f64> {
    let xs = &ops.a_tilde * x + &ops.b_tilde * u;
    &ops.g_tilde * xs - refs
}

fn increment_cost(u: &DVector<f64>, tuning: &McTuning) -> f64 {
    u.iter()
        .enumerate()
        .map(|(i, v)| tuning.r[i % 6] * v * v)
        .sum()
}

/// Cost without disturbance.
pub fn nominal_cost(
    u: &DVector<f64>,
    x: &StateVector,
    refs: &DVector<f64>,
    ops: &PredictionOperators,
    tuning: &McTuning,
) -> f64 {
    let a = tracking_residual(u, x, refs, ops);
    let track: f64 = a
        .iter()
        .enumerate()
        .map(|(i, v)| tuning.q[i % 6] * v * v)
        .sum();
    track + increment_cost(u, tuning)
}

/// Exact maximum of the cost over the disturbance box:
/// `Σ Q_i (|a_i| + d̄_i)² + Σ R_i Δν_i²`.
pub fn worst_case_cost(
    u: &DVector<f64>,
    x: &StateVector,
    refs: &DVector<f64>,
    ops: &PredictionOperators,
    tuning: &McTuning,
) -> f64 {
    let a = tracking_residual(u, x, refs, ops);
    let d = tuning.output_bounds();
    let track: f64 = a
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let e = v.abs() + d[i % 6];
            tuning.q[i % 6] * e * e
        })
        .sum();
    track + increment_cost(u, tuning)
}

/// Epigraph QP over `[U; t]`.
///
/// Rows are ordered: `6N` pairs `(a − t ≤ 0, −a − t ≤ 0)` interleaved per
/// output, then `6·Nu` pairs `(τ ≤ τ̄, −τ ≤ τ̄)` interleaved per increment.
#[allow(clippy::too_many_arguments)]
pub fn build_qp(
    x: &StateVector,
    refs: &DVector<f64>,
    ops: &PredictionOperators,
    tuning: &McTuning,
    nu_prev: &Velocity,
    pose: &Pose,
    params: &VehicleParams,
) -> QpProblem {
    let nu_len = 6 * ops.control_horizon;
    let t_len = 6 * ops.horizon;
    let n = nu_len + t_len;
    let d = tuning.output_bounds();

    let mut h = DMatrix::zeros(n, n);
    let mut f = DVector::zeros(n);
    for i in 0..nu_len {
        h[(i, i)] = 2.0 * tuning.r[i % 6];
    }
    let mut constant_offset = 0.0;
    for k in 0..t_len {
        let (qi, di) = (tuning.q[k % 6], d[k % 6]);
        h[(nu_len + k, nu_len + k)] = 2.0 * qi;
        f[nu_len + k] = 2.0 * qi * di;
        constant_offset += qi * di * di;
    }

    let s = output_map(ops);
    let s0 = &ops.g_tilde * (&ops.a_tilde * x) - refs;
    let rows = 2 * t_len + 2 * nu_len;
    let mut c = DMatrix::zeros(rows, n);
    let mut b = DVector::zeros(rows);
    for k in 0..t_len {
        for col in 0..nu_len {
            c[(2 * k, col)] = s[(k, col)];
            c[(2 * k + 1, col)] = -s[(k, col)];
        }
        c[(2 * k, nu_len + k)] = -1.0;
        c[(2 * k + 1, nu_len + k)] = -1.0;
        b[2 * k] = -s0[k];
        b[2 * k + 1] = s0[k];
    }

    let m_bar = params.mass_matrix / tuning.ts;
    let chi_prev = chi(nu_prev, pose, params);
    let base = 2 * t_len;
    for j in 0..ops.control_horizon {
        for i in 0..6 {
            let row = base + 2 * (6 * j + i);
            for col in 0..6 {
                c[(row, 6 * j + col)] = m_bar[(i, col)];
                c[(row + 1, 6 * j + col)] = -m_bar[(i, col)];
            }
            b[row] = tuning.tau_bar - chi_prev[i];
            b[row + 1] = tuning.tau_bar + chi_prev[i];
        }
    }

    QpProblem {
        h,
        f,
        c_ineq: c,
        b_ineq: b,
        constant_offset,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    Infeasible,
    MaxIter,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIter => "max_iter",
        }
    }
}

impl From<QpStatus> for SolveStatus {
    fn from(s: QpStatus) -> Self {
        match s {
            QpStatus::Solved => SolveStatus::Solved,
            QpStatus::Infeasible => SolveStatus::Infeasible,
            QpStatus::MaxIter => SolveStatus::MaxIter,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSolution {
    /// Optimal increments over the control horizon.
    pub u_star: DVector<f64>,
    pub delta_nu_star: Vector6<f64>,
    /// Epigraph variables at the optimum; equal `|a(U*)|`.
    pub epigraph: DVector<f64>,
    pub worst_case_cost: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Intermediate products of one controller evaluation.
#[derive(Debug, Clone)]
pub struct MpcProblem {
    pub model: LpvModel,
    pub ops: PredictionOperators,
    pub x: StateVector,
    pub refs: DVector<f64>,
    pub qp: QpProblem,
}

pub fn assemble_problem(
    state: &VehicleState,
    nu_prev: &Velocity,
    reference: &LosReference,
    tuning: &McTuning,
    params: &VehicleParams,
) -> Result<MpcProblem, ControlError> {
    let model = build_lpv(&state.pose, tuning.ts, params.pitch_margin)?;
    let ops = build_prediction(&model, tuning.horizon, tuning.control_horizon)?;
    let mut x = StateVector::zeros();
    x.fixed_rows_mut::<6>(0).copy_from(&state.pose.to_vector());
    x.fixed_rows_mut::<6>(6).copy_from(&state.nu.to_vector());
    let refs = stacked_references(&state.pose, reference, tuning.horizon);
    let qp = build_qp(&x, &refs, &ops, tuning, nu_prev, &state.pose, params);
    Ok(MpcProblem {
        model,
        ops,
        x,
        refs,
        qp,
    })
}

/// One controller evaluation with the default solver.
pub fn mpc_step(
    state: &VehicleState,
    nu_prev: &Velocity,
    reference: &LosReference,
    tuning: &McTuning,
    params: &VehicleParams,
) -> Result<(Wrench, ControlSolution), ControlError> {
    let solver = GoldfarbIdnani {
        tol: tuning.qp_tol,
        max_iter: tuning.qp_max_iter,
    };
    mpc_step_with(&solver, state, nu_prev, reference, tuning, params)
}

/// One controller evaluation with an explicit QP backend.
///
/// On a solved QP the first increment is mapped through inverse dynamics;
/// rounding overshoot of the input bound is clipped. Otherwise the
/// zero-increment wrench `χ(ν_prev)` saturated to `±τ̄` is returned and the
/// status carries the failure.
pub fn mpc_step_with(
    solver: &dyn QpSolver,
    state: &VehicleState,
    nu_prev: &Velocity,
    reference: &LosReference,
    tuning: &McTuning,
    params: &VehicleParams,
) -> Result<(Wrench, ControlSolution), ControlError> {
    let problem = assemble_problem(state, nu_prev, reference, tuning, params)?;
    let sol = solver.solve(&problem.qp)?;
    let status = SolveStatus::from(sol.status);
    let nu_len = 6 * tuning.control_horizon;

    let (u_star, epigraph) = if status == SolveStatus::Solved {
        (
            sol.z.rows(0, nu_len).into_owned(),
            sol.z.rows(nu_len, sol.z.len() - nu_len).into_owned(),
        )
    } else {
        let u = DVector::zeros(nu_len);
        let a = tracking_residual(&u, &problem.x, &problem.refs, &problem.ops);
        (u, a.abs())
    };
    let delta_nu_star = Vector6::from_iterator(u_star.iter().take(6).copied());
    let wrench = if status == SolveStatus::Solved {
        inverse_dynamics(&delta_nu_star, nu_prev, &state.pose, params, tuning.ts)
    } else {
        Wrench(chi(nu_prev, &state.pose, params))
    }
    .saturate(tuning.tau_bar);
    let worst = worst_case_cost(&u_star, &problem.x, &problem.refs, &problem.ops, tuning);

    Ok((
        wrench,
        ControlSolution {
            u_star,
            delta_nu_star,
            epigraph,
            worst_case_cost: worst,
            iterations: sol.iterations,
            status,
        },
    ))
}
