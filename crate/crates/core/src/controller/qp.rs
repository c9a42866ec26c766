//! Dense strictly convex QP solver.
//!
//! Solves
//!
//! ```text
//! minimize    ½ zᵀHz + fᵀz + c
//! subject to  C z ≤ b
//! ```
//!
//! with the dual active-set method of Goldfarb and Idnani. The method starts
//! from the unconstrained minimizer and adds the most violated constraint
//! each iteration, so every iterate is optimal for the constraints it has
//! seen so far and infeasibility is detected exactly. `J = L⁻ᵀQ` and the
//! triangular `R` are kept up to date with Givens rotations.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub c_ineq: DMatrix<f64>,
    pub b_ineq: DVector<f64>,
    pub constant_offset: f64,
}

impl QpProblem {
    pub fn unconstrained(h: DMatrix<f64>, f: DVector<f64>) -> Self {
        let n = f.len();
        Self {
            h,
            f,
            c_ineq: DMatrix::zeros(0, n),
            b_ineq: DVector::zeros(0),
            constant_offset: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.h * z)) + self.f.dot(z) + self.constant_offset
    }

    /// Largest violation `max(C z − b)`, or 0 when feasible.
    pub fn max_violation(&self, z: &DVector<f64>) -> f64 {
        (&self.c_ineq * z - &self.b_ineq)
            .iter()
            .fold(0.0, |m, v| m.max(*v))
    }

    fn check(&self) -> Result<(), QpError> {
        let n = self.dim();
        if self.h.nrows() != n || self.h.ncols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "H is {}x{}, expected {n}x{n}",
                self.h.nrows(),
                self.h.ncols()
            )));
        }
        if self.c_ineq.ncols() != n || self.c_ineq.nrows() != self.b_ineq.len() {
            return Err(QpError::DimensionMismatch(format!(
                "C is {}x{} with {} bounds",
                self.c_ineq.nrows(),
                self.c_ineq.ncols(),
                self.b_ineq.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Solved,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: DVector<f64>,
    /// One nonnegative multiplier per inequality; zero for inactive rows.
    pub multipliers: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub status: QpStatus,
}

/// Pluggable QP backend.
pub trait QpSolver {
    fn solve(&self, problem: &QpProblem) -> Result<QpSolution, QpError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldfarbIdnani {
    /// Rows with `C_i z − b_i ≤ tol·max(1, |b_i|)` count as satisfied.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GoldfarbIdnani {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 4000,
        }
    }
}

pub fn solve_qp(problem: &QpProblem, tol: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    GoldfarbIdnani { tol, max_iter }.solve(problem)
}

/// Rotates columns `i`, `j` of `m` by `(c, s)`.
fn rotate_cols(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for k in 0..m.nrows() {
        let a = m[(k, i)];
        let b = m[(k, j)];
        m[(k, i)] = c * a + s * b;
        m[(k, j)] = -s * a + c * b;
    }
}

struct ActiveSet {
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    indices: Vec<usize>,
}

impl ActiveSet {
    fn len(&self) -> usize {
        self.indices.len()
    }

    /// Appends a constraint whose `d = Jᵀn` is given.
    fn add(&mut self, index: usize, mut d: DVector<f64>) {
        let q = self.len();
        let n = d.len();
        for k in (q + 1..n).rev() {
            if d[k] == 0.0 {
                continue;
            }
            let h = d[k - 1].hypot(d[k]);
            let (c, s) = (d[k - 1] / h, d[k] / h);
            d[k - 1] = h;
            d[k] = 0.0;
            rotate_cols(&mut self.j, k - 1, k, c, s);
        }
        for row in 0..=q {
            self.r[(row, q)] = d[row];
        }
        self.indices.push(index);
    }

    /// Removes the `l`-th active constraint.
    fn drop(&mut self, l: usize) {
        let q = self.len();
        for col in l..q - 1 {
            for row in 0..q {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..q {
            self.r[(row, q - 1)] = 0.0;
        }
        for k in l..q - 1 {
            let a = self.r[(k, k)];
            let b = self.r[(k + 1, k)];
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for col in k..q - 1 {
                let x = self.r[(k, col)];
                let y = self.r[(k + 1, col)];
                self.r[(k, col)] = c * x + s * y;
                self.r[(k + 1, col)] = -s * x + c * y;
            }
            rotate_cols(&mut self.j, k, k + 1, c, s);
        }
        self.indices.remove(l);
    }

    /// Solves `R[..q, ..q] r = d[..q]`.
    fn back_substitute(&self, d: &DVector<f64>) -> DVector<f64> {
        let q = self.len();
        let mut r = DVector::zeros(q);
        for i in (0..q).rev() {
            let mut acc = d[i];
            for k in i + 1..q {
                acc -= self.r[(i, k)] * r[k];
            }
            r[i] = acc / self.r[(i, i)];
        }
        r
    }
}

impl QpSolver for GoldfarbIdnani {
    fn solve(&self, problem: &QpProblem) -> Result<QpSolution, QpError> {
        problem.check()?;
        let n = problem.dim();
        let m = problem.b_ineq.len();
        let chol = problem
            .h
            .clone()
            .cholesky()
            .ok_or(QpError::NotPositiveDefinite)?;
        let mut z = -chol.solve(&problem.f);

        // constraints as nᵢᵀz ≥ b'ᵢ with nᵢ = −Cᵢ, b'ᵢ = −bᵢ
        let normals = -problem.c_ineq.transpose();
        let bounds = -&problem.b_ineq;
        let slack = |z: &DVector<f64>, i: usize| normals.column(i).dot(z) - bounds[i];

        let l_inv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or(QpError::NotPositiveDefinite)?;
        let mut active = ActiveSet {
            j: l_inv.transpose(),
            r: DMatrix::zeros(n, n),
            indices: Vec::new(),
        };
        let mut u: Vec<f64> = Vec::new();
        let mut iterations = 0;

        let finish = |z: DVector<f64>, active: &ActiveSet, u: &[f64], iterations, status| {
            let mut multipliers = DVector::zeros(m);
            for (k, &i) in active.indices.iter().enumerate() {
                multipliers[i] = u[k];
            }
            Ok(QpSolution {
                objective: problem.objective(&z),
                z,
                multipliers,
                iterations,
                status,
            })
        };

        loop {
            // most violated inactive constraint, scaled by its normal
            let mut chosen = None;
            let mut worst = 0.0;
            for i in 0..m {
                if active.indices.contains(&i) {
                    continue;
                }
                let s = slack(&z, i);
                if s < -self.tol * bounds[i].abs().max(1.0) {
                    let norm = normals.column(i).norm().max(f64::MIN_POSITIVE);
                    let scaled = s / norm;
                    if scaled < worst {
                        worst = scaled;
                        chosen = Some(i);
                    }
                }
            }
            let Some(p) = chosen else {
                return finish(z, &active, &u, iterations, QpStatus::Solved);
            };
            let np = normals.column(p).into_owned();
            let mut u_plus = u.clone();
            u_plus.push(0.0);

            loop {
                iterations += 1;
                if iterations > self.max_iter {
                    return finish(
                        z,
                        &active,
                        &u_plus[..active.len()],
                        iterations - 1,
                        QpStatus::MaxIter,
                    );
                }
                let q = active.len();
                let d = active.j.tr_mul(&np);
                let step = active.j.columns(q, n - q) * d.rows(q, n - q);
                let r = active.back_substitute(&d);

                // partial step: first active multiplier to reach zero
                let r_scale = r.amax().max(1.0);
                let mut t1 = f64::INFINITY;
                let mut drop_at = None;
                for k in 0..q {
                    if r[k] > 1e-12 * r_scale {
                        let ratio = u_plus[k] / r[k];
                        if ratio < t1 {
                            t1 = ratio;
                            drop_at = Some(k);
                        }
                    }
                }
                // full step: make constraint p active
                let dz = d.rows(q, n - q).norm_squared();
                let t2 = if dz <= 1e-20 * d.norm_squared() {
                    f64::INFINITY
                } else {
                    -slack(&z, p) / dz
                };

                if t1.is_infinite() && t2.is_infinite() {
                    return finish(z, &active, &u_plus[..q], iterations, QpStatus::Infeasible);
                }
                let t = t1.min(t2);
                if t2.is_finite() {
                    z += &step * t;
                }
                for k in 0..q {
                    u_plus[k] -= t * r[k];
                }
                u_plus[q] += t;

                if t2 <= t1 {
                    active.add(p, d);
                    u = u_plus;
                    break;
                }
                let l = drop_at.expect("partial step has a blocking constraint");
                active.drop(l);
                u_plus.remove(l);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn unconstrained_matches_linear_solve() {
        let h = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        let sol = solve_qp(&QpProblem::unconstrained(h.clone(), f.clone()), 1e-9, 100).unwrap();
        let expected = h.lu().solve(&(-f)).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert_eq!(sol.iterations, 0);
        assert!((sol.z - expected).amax() < 1e-12);
    }

    #[test]
    fn quadprog_doc_example() {
        // min ½x² + ½y² + x  s.t. x + 2y ≥ 1  →  (-0.6, 0.8)
        let p = QpProblem {
            h: diag(&[1.0, 1.0]),
            f: DVector::from_row_slice(&[1.0, 0.0]),
            c_ineq: DMatrix::from_row_slice(1, 2, &[-1.0, -2.0]),
            b_ineq: DVector::from_row_slice(&[-1.0]),
            constant_offset: 0.0,
        };
        let sol = solve_qp(&p, 1e-9, 100).unwrap();
        assert!((sol.z[0] + 0.6).abs() < 1e-12);
        assert!((sol.z[1] - 0.8).abs() < 1e-12);
        assert!((sol.multipliers[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn box_two_variable_kkt() {
        // min ½‖z − (2, −3)‖²  s.t. −1 ≤ z ≤ 1  →  (1, −1), multipliers (1, 2)
        let p = QpProblem {
            h: diag(&[1.0, 1.0]),
            f: DVector::from_row_slice(&[-2.0, 3.0]),
            c_ineq: DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]),
            b_ineq: DVector::from_row_slice(&[1.0, 1.0, 1.0, 1.0]),
            constant_offset: 6.5,
        };
        let sol = solve_qp(&p, 1e-9, 100).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((sol.z - DVector::from_row_slice(&[1.0, -1.0])).amax() < 1e-12);
        assert!((sol.multipliers - DVector::from_row_slice(&[1.0, 0.0, 0.0, 2.0])).amax() < 1e-12);
        assert!((sol.objective - 2.5).abs() < 1e-12);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        // z ≤ −1 and z ≥ 1
        let p = QpProblem {
            h: diag(&[1.0]),
            f: DVector::zeros(1),
            c_ineq: DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            b_ineq: DVector::from_row_slice(&[-1.0, -1.0]),
            constant_offset: 0.0,
        };
        assert_eq!(
            solve_qp(&p, 1e-9, 100).unwrap().status,
            QpStatus::Infeasible
        );
    }

    #[test]
    fn dependent_constraints_drop_correctly() {
        // three constraints through one vertex in 2-D; only two can be active
        let p = QpProblem {
            h: diag(&[1.0, 1.0]),
            f: DVector::from_row_slice(&[-3.0, -3.0]),
            c_ineq: DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            b_ineq: DVector::from_row_slice(&[1.0, 1.0, 2.0]),
            constant_offset: 0.0,
        };
        let sol = solve_qp(&p, 1e-9, 100).unwrap();
        assert_eq!(sol.status, QpStatus::Solved);
        assert!((&sol.z - DVector::from_row_slice(&[1.0, 1.0])).amax() < 1e-12);
        assert!(p.max_violation(&sol.z) < 1e-12);
    }

    #[test]
    fn max_iter_reported() {
        let p = QpProblem {
            h: diag(&[1.0, 1.0]),
            f: DVector::from_row_slice(&[-2.0, 3.0]),
            c_ineq: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            b_ineq: DVector::from_row_slice(&[1.0, 1.0]),
            constant_offset: 0.0,
        };
        assert_eq!(solve_qp(&p, 1e-9, 1).unwrap().status, QpStatus::MaxIter);
    }

    #[test]
    fn rejects_indefinite_hessian() {
        let p = QpProblem::unconstrained(diag(&[1.0, -1.0]), DVector::zeros(2));
        assert_eq!(solve_qp(&p, 1e-9, 10), Err(QpError::NotPositiveDefinite));
    }

    #[test]
    fn rejects_bad_dimensions() {
        let p = QpProblem::unconstrained(diag(&[1.0, 1.0]), DVector::zeros(3));
        assert!(matches!(
            solve_qp(&p, 1e-9, 10),
            Err(QpError::DimensionMismatch(_))
        ));
    }
}
