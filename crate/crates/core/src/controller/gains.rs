use std::ops::Deref;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw controller gains as they appear in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSet {
    /// Translational proportional gain per inertial axis.
    pub k_p: [f64; 3],
    /// Translational derivative gain per inertial axis.
    pub k_d: [f64; 3],
    pub k_r0: f64,
    pub k_omega0: f64,
    /// Cable direction gains.
    pub k_q: f64,
    pub k_omega: f64,
    /// Quadrotor attitude gains.
    pub k_r: f64,
    pub k_omega_inner: f64,
    pub c_q: f64,
    pub h_x0: f64,
    pub h_r0: f64,
    pub h_xi: f64,
    pub eta_m: f64,
    pub eta_j: f64,
    pub scale_m: f64,
    pub scale_j: f64,
    pub gamma_x: [f64; 3],
    pub gamma_r: [f64; 3],
    /// Lyapunov weighting `Q_j` per axis, row-major 2×2.
    pub q_x: [[[f64; 2]; 2]; 3],
    #[serde(default = "default_mass_floor")]
    pub mass_floor_kg: f64,
    #[serde(default = "default_inertia_floor")]
    pub inertia_floor_kg_m2: f64,
    /// Desired tensions below this norm keep the previous cable direction (N).
    #[serde(default = "default_tension_eps")]
    pub tension_eps_n: f64,
    /// Quadrotor forces below this norm keep the previous attitude setpoint (N).
    #[serde(default = "default_force_eps")]
    pub force_eps_n: f64,
    /// Lag applied to finite-differenced lower-level setpoint rates (s);
    /// zero gives plain backward differences.
    #[serde(default = "default_rate_filter")]
    pub setpoint_rate_filter_s: f64,
}

fn default_mass_floor() -> f64 {
    0.1
}
fn default_inertia_floor() -> f64 {
    0.01
}
fn default_tension_eps() -> f64 {
    1e-6
}
fn default_force_eps() -> f64 {
    1e-6
}
fn default_rate_filter() -> f64 {
    0.01
}

impl Default for GainSet {
    /// Gains of the reference simulation setup, with `k_q = 8`, `k_ω = 4`,
    /// `k_R = 8`, `k_Ω = 2` for the lower levels.
    fn default() -> Self {
        Self {
            k_p: [20.0, 20.0, 1000.0],
            k_d: [10.0, 10.0, 200.0],
            k_r0: 20.0,
            k_omega0: 10.0,
            k_q: 8.0,
            k_omega: 4.0,
            k_r: 8.0,
            k_omega_inner: 2.0,
            c_q: 0.01,
            h_x0: 1.0,
            h_r0: 0.1,
            h_xi: 0.1,
            eta_m: 0.01,
            eta_j: 0.01,
            scale_m: 0.01,
            scale_j: 0.01,
            gamma_x: [5000.0, 5000.0, 1000.0],
            gamma_r: [1500.0, 1500.0, 100.0],
            q_x: [
                [[1.0 / 20.0, 0.0], [0.0, 1.0 / 20.0]],
                [[1.0 / 20.0, 0.0], [0.0, 1.0 / 20.0]],
                [[1.0, 0.0], [0.0, 1.0]],
            ],
            mass_floor_kg: default_mass_floor(),
            inertia_floor_kg_m2: default_inertia_floor(),
            tension_eps_n: default_tension_eps(),
            force_eps_n: default_force_eps(),
            setpoint_rate_filter_s: default_rate_filter(),
        }
    }
}

/// Validated gains with the per-axis Lyapunov matrices `P_j` solved.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    set: GainSet,
    p: [Matrix2<f64>; 3],
}

impl Deref for ControllerGains {
    type Target = GainSet;

    fn deref(&self) -> &GainSet {
        &self.set
    }
}

impl ControllerGains {
    pub fn new(set: GainSet) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("gain {name} must be positive, got {v}")))
            }
        };
        for j in 0..3 {
            positive("k_p", set.k_p[j])?;
            positive("k_d", set.k_d[j])?;
            positive("gamma_x", set.gamma_x[j])?;
            positive("gamma_r", set.gamma_r[j])?;
        }
        for (name, v) in [
            ("k_r0", set.k_r0),
            ("k_omega0", set.k_omega0),
            ("k_q", set.k_q),
            ("k_omega", set.k_omega),
            ("k_r", set.k_r),
            ("k_omega_inner", set.k_omega_inner),
            ("c_q", set.c_q),
            ("h_x0", set.h_x0),
            ("h_r0", set.h_r0),
            ("h_xi", set.h_xi),
            ("eta_m", set.eta_m),
            ("eta_j", set.eta_j),
            ("scale_m", set.scale_m),
            ("scale_j", set.scale_j),
            ("mass_floor_kg", set.mass_floor_kg),
            ("inertia_floor_kg_m2", set.inertia_floor_kg_m2),
            ("tension_eps_n", set.tension_eps_n),
            ("force_eps_n", set.force_eps_n),
        ] {
            positive(name, v)?;
        }

        if !(set.setpoint_rate_filter_s >= 0.0 && set.setpoint_rate_filter_s.is_finite()) {
            return Err(Error::config(format!(
                "gain setpoint_rate_filter_s must be >= 0, got {}",
                set.setpoint_rate_filter_s
            )));
        }

        let z = cable_lyapunov_matrix(&set);
        if !(z[(0, 0)] > 0.0 && z.determinant() > 0.0) {
            return Err(Error::config(format!(
                "c_q = {} too large: cable Lyapunov matrix is not positive-definite",
                set.c_q
            )));
        }

        let mut p = [Matrix2::zeros(); 3];
        for j in 0..3 {
            let q = Matrix2::from_fn(|r, c| set.q_x[j][r][c]);
            if (q - q.transpose()).amax() > 0.0 || !(q[(0, 0)] > 0.0 && q.determinant() > 0.0) {
                return Err(Error::config(format!("q_x[{j}] must be symmetric positive-definite")));
            }
            p[j] = solve_lyapunov(&closed_loop_matrix(set.k_p[j], set.k_d[j]), &q)?;
            if !(p[j][(0, 0)] > 0.0 && p[j].determinant() > 0.0) {
                return Err(Error::config(format!("Lyapunov solution P_{j} is not positive-definite")));
            }
        }
        Ok(Self { set, p })
    }

    pub fn set(&self) -> &GainSet {
        &self.set
    }

    /// Lyapunov matrix for translational axis `j`.
    pub fn p(&self, axis: usize) -> &Matrix2<f64> {
        &self.p[axis]
    }

    pub fn q(&self, axis: usize) -> Matrix2<f64> {
        Matrix2::from_fn(|r, c| self.set.q_x[axis][r][c])
    }

    /// `ℰᵀ P_j B` with `B = (0, 1)ᵀ`.
    pub fn error_drive(&self, axis: usize, phase: [f64; 2]) -> f64 {
        let p = &self.p[axis];
        phase[0] * p[(0, 1)] + phase[1] * p[(1, 1)]
    }

    pub fn k_p_vec(&self) -> Vector3<f64> {
        Vector3::from(self.set.k_p)
    }

    pub fn k_d_vec(&self) -> Vector3<f64> {
        Vector3::from(self.set.k_d)
    }
}

/// `[[0, 1], [−k_p, −k_d]]`
pub fn closed_loop_matrix(k_p: f64, k_d: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -k_p, -k_d)
}

/// Cable cross-term matrix `[[c_q k_q, c_q k_ω/2], [c_q k_ω/2, k_ω − c_q]]`.
pub fn cable_lyapunov_matrix(set: &GainSet) -> Matrix2<f64> {
    let off = 0.5 * set.c_q * set.k_omega;
    Matrix2::new(set.c_q * set.k_q, off, off, set.k_omega - set.c_q)
}

/// Symmetric `P` with `ΛᵀP + PΛ = −Q`.
pub fn solve_lyapunov(lambda: &Matrix2<f64>, q: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let (a, b, c, d) = (lambda[(0, 0)], lambda[(0, 1)], lambda[(1, 0)], lambda[(1, 1)]);
    // unknowns (p11, p12, p22)
    let m = Matrix3::new(2.0 * a, 2.0 * c, 0.0, b, a + d, c, 0.0, 2.0 * b, 2.0 * d);
    let rhs = Vector3::new(-q[(0, 0)], -q[(0, 1)], -q[(1, 1)]);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::config("Lyapunov equation has no unique solution"))?;
    Ok(Matrix2::new(sol[0], sol[1], sol[1], sol[2]))
}
