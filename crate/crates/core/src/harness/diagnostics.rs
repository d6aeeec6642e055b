//! Lyapunov bookkeeping evaluated with the true plant and true disturbances.
//!
//! The ideal network weights are unknown; they are taken as zero, which is
//! exact when the plant has no unknown dynamics.

use crate::controller::ControllerGains;
use crate::dynamics::SystemParams;
use crate::geometry::project_parallel;
use crate::integrator::StepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LyapunovTerms {
    pub v_x: f64,
    pub v_r: f64,
    pub v_q: f64,
    pub v_delta: f64,
    pub total: f64,
}

pub fn lyapunov_terms(record: &StepRecord, gains: &ControllerGains, params: &SystemParams) -> LyapunovTerms {
    let est = &record.estimates;
    let e = &record.errors;
    let sq = |w: &[f64]| w.iter().map(|v| v * v).sum::<f64>();

    let mut v_x = 0.0;
    let mut v_r = gains.k_r0 * e.psi_r;
    for j in 0..3 {
        let phase = nalgebra::Vector2::from(e.phase(j));
        let m_tilde = 1.0 / params.payload_mass - 1.0 / est.mass[j];
        v_x += 0.5 * phase.dot(&(gains.p(j) * phase))
            + 0.5 * gains.eta_m * m_tilde * m_tilde
            + sq(&est.weights_x[j]) / (2.0 * gains.gamma_x[j]);

        let j_tilde = 1.0 / params.payload_inertia[(j, j)] - 1.0 / est.inertia[j];
        v_r += 0.5 * e.e_omega[j] * e.e_omega[j]
            + 0.5 * gains.eta_j * j_tilde * j_tilde
            + sq(&est.weights_r[j]) / (2.0 * gains.gamma_r[j]);
    }

    let v_q = record
        .cable_errors
        .iter()
        .map(|c| 0.5 * c.e_omega.norm_squared() + gains.k_q * c.psi_q + gains.c_q * c.e_q.dot(&c.e_omega))
        .sum::<f64>();

    let d = &record.disturbance.sample;
    let mut v_delta = (d.dx0 - est.payload_force).norm_squared() / (2.0 * gains.h_x0)
        + (d.dr0 - est.payload_moment).norm_squared() / (2.0 * gains.h_r0);
    for (i, cable) in record.state.cables.iter().enumerate() {
        let tilde = project_parallel(&cable.q, &(d.dxi[i] - est.quadrotor_force[i]));
        v_delta += tilde.norm_squared() / (2.0 * gains.h_xi);
    }

    LyapunovTerms { v_x, v_r, v_q, v_delta, total: v_x + v_r + v_q + v_delta }
}

/// Largest single-record increase of the total after `t_from`.
pub fn max_increase_after(times: &[f64], terms: &[LyapunovTerms], t_from: f64) -> f64 {
    times
        .windows(2)
        .zip(terms.windows(2))
        .filter(|(t, _)| t[0] >= t_from)
        .map(|(_, v)| v[1].total - v[0].total)
        .fold(f64::NEG_INFINITY, f64::max)
}
