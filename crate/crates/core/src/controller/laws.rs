//! Parameter adaptation, weight adaptation and integral compensation laws.
//! All laws are continuous-time rates, stepped here with explicit Euler.

use super::gains::ControllerGains;
use super::rbf::{rbf_activation, RbfNetwork};
use crate::dynamics::{SystemParams, SystemState};
use crate::geometry::{hat, project_parallel, CableErrors, PayloadErrors, Vec3};

/// Three-branch bounded adaptation rate for an inverse-scaled estimate.
///
/// `drive > 0`, or `drive ≤ 0` below `cap`: `−θ²/η · drive`.
/// `drive ≤ 0` at or above `cap`: `−scale · θ²/η`.
pub fn bounded_rate(estimate: f64, drive: f64, cap: f64, eta: f64, scale: f64) -> f64 {
    let base = -estimate * estimate / eta;
    if drive > 0.0 || estimate < cap {
        base * drive
    } else {
        scale * base
    }
}

/// One Euler step of the payload mass estimate along one axis.
///
/// `drive` is `ℰ_jᵀ P_j B · U_x^[j]`.
pub fn update_mass_estimate(estimate: f64, drive: f64, gains: &ControllerGains, max_mass: f64, dt: f64) -> f64 {
    let rate = bounded_rate(estimate, drive, max_mass, gains.eta_m, gains.scale_m);
    (estimate + dt * rate).max(gains.mass_floor_kg)
}

/// One Euler step of a payload inertia estimate (diagonal element `j`).
///
/// `drive` is `e_Ω0^[j] · U_R^[j]`.
pub fn update_inertia_estimate(
    estimate: f64,
    drive: f64,
    gains: &ControllerGains,
    max_inertia: f64,
    dt: f64,
) -> f64 {
    let rate = bounded_rate(estimate, drive, max_inertia, gains.eta_j, gains.scale_j);
    (estimate + dt * rate).max(gains.inertia_floor_kg_m2)
}

/// `W̄ ← W̄ + dt · γ · drive · ħ(x)`; the update is always parallel to `ħ(x)`.
pub fn update_weights(net: &mut RbfNetwork, input: [f64; 2], drive: f64, gamma: f64, dt: f64) {
    if drive == 0.0 {
        return;
    }
    let h = rbf_activation(input, net);
    for (w, h) in net.weights.iter_mut().zip(h) {
        *w += dt * gamma * drive * h;
    }
}

/// Integral disturbance estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceEstimates {
    /// Payload force estimate (N).
    pub payload_force: Vec3,
    /// Payload moment estimate (N·m).
    pub payload_moment: Vec3,
    /// Per-quadrotor force estimates (N).
    pub quadrotor_force: Vec<Vec3>,
}

impl DisturbanceEstimates {
    pub fn zero(n: usize) -> Self {
        Self { payload_force: Vec3::zeros(), payload_moment: Vec3::zeros(), quadrotor_force: vec![Vec3::zeros(); n] }
    }

    /// Cable-parallel part of quadrotor `i`'s estimate at direction `q`.
    pub fn parallel(&self, i: usize, q: &Vec3) -> Vec3 {
        project_parallel(q, &self.quadrotor_force[i])
    }
}

/// Rates of the integral compensations.
pub fn disturbance_estimate_rates(
    errors: &PayloadErrors,
    cable_errors: &[CableErrors],
    state: &SystemState,
    gains: &ControllerGains,
    params: &SystemParams,
) -> DisturbanceEstimates {
    let m_ref = params.reference.mass;
    let j_ref = &params.reference.inertia;
    let drives = Vec3::from_fn(|j, _| gains.error_drive(j, errors.phase(j)));

    let payload_force = drives * (gains.h_x0 / m_ref);
    let payload_moment = Vec3::from_fn(|j, _| gains.h_r0 / j_ref[(j, j)] * errors.e_omega[j]);

    let j_ref_inv = j_ref.try_inverse().expect("reference inertia validated SPD");
    let translational = drives / m_ref;
    let quadrotor_force = (0..params.n())
        .map(|i| {
            let quad = &params.quadrotors[i];
            let q = &state.cables[i].q;
            let ce = &cable_errors[i];
            let inner = translational - j_ref_inv * (state.r0 * (hat(&quad.attachment) * errors.e_omega))
                + gains.h_xi / (quad.mass * quad.cable_length) * q.cross(&(ce.e_omega + gains.c_q * ce.e_q));
            gains.h_xi * project_parallel(q, &inner)
        })
        .collect();

    DisturbanceEstimates { payload_force, payload_moment, quadrotor_force }
}

/// One Euler step of every integral compensation.
pub fn update_disturbance_estimates(
    estimates: &DisturbanceEstimates,
    errors: &PayloadErrors,
    cable_errors: &[CableErrors],
    state: &SystemState,
    gains: &ControllerGains,
    params: &SystemParams,
    dt: f64,
) -> DisturbanceEstimates {
    let rates = disturbance_estimate_rates(errors, cable_errors, state, gains, params);
    DisturbanceEstimates {
        payload_force: estimates.payload_force + dt * rates.payload_force,
        payload_moment: estimates.payload_moment + dt * rates.payload_moment,
        quadrotor_force: estimates
            .quadrotor_force
            .iter()
            .zip(&rates.quadrotor_force)
            .map(|(est, rate)| est + dt * rate)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::gains::GainSet;
    use crate::controller::rbf::RbfLayout;
    use crate::harness::scenario::default_system_params;

    fn gains() -> ControllerGains {
        ControllerGains::new(GainSet::default()).unwrap()
    }

    #[test]
    fn mass_law_branches() {
        let g = gains();
        // zero drive below the cap: frozen
        assert_eq!(update_mass_estimate(2.0, 0.0, &g, 6.0, 1e-3), 2.0);
        // at the cap with non-positive drive: pushed back by scale·θ²/η
        let rate = bounded_rate(6.0, -0.3, 6.0, g.eta_m, g.scale_m);
        assert!((rate - (-0.01 * 36.0 / 0.01)).abs() < 1e-12);
        assert!(update_mass_estimate(6.0, -0.3, &g, 6.0, 1e-3) < 6.0);
        // positive drive always decreases
        assert!(bounded_rate(3.0, 0.2, 6.0, g.eta_m, g.scale_m) < 0.0);
        assert!(bounded_rate(7.0, 0.2, 6.0, g.eta_m, g.scale_m) < 0.0);
        // negative drive below the cap increases
        assert!(bounded_rate(3.0, -0.2, 6.0, g.eta_m, g.scale_m) > 0.0);
    }

    #[test]
    fn estimates_respect_floor() {
        let g = gains();
        assert_eq!(update_mass_estimate(0.2, 1e6, &g, 6.0, 1e-3), g.mass_floor_kg);
        assert_eq!(update_inertia_estimate(0.02, 1e6, &g, 0.75, 1e-3), g.inertia_floor_kg_m2);
    }

    #[test]
    fn inertia_law_branches() {
        let g = gains();
        assert_eq!(update_inertia_estimate(0.3, 0.0, &g, 0.75, 1e-3), 0.3);
        assert!(update_inertia_estimate(0.75, -1.0, &g, 0.75, 1e-3) < 0.75);
        assert!(update_inertia_estimate(0.3, 1.0, &g, 0.75, 1e-3) < 0.3);
    }

    #[test]
    fn weight_update_unit_drive_at_center() {
        let mut net = RbfLayout::default().build();
        update_weights(&mut net, [0.0, 0.0], 0.0, 5000.0, 1e-3);
        assert!(net.weights.iter().all(|w| *w == 0.0));

        let center = net.centers[2];
        update_weights(&mut net, center, 1.0, 5000.0, 1e-3);
        assert!((net.weights[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn weight_update_is_rank_one() {
        let mut net = RbfLayout::default().build();
        net.weights = vec![0.1, -0.2, 0.3, 0.0, 0.5];
        let before = net.weights.clone();
        let x = [0.4, -0.9];
        update_weights(&mut net, x, -0.037, 1500.0, 1e-3);
        let h = rbf_activation(x, &net);
        let delta: Vec<f64> = net.weights.iter().zip(&before).map(|(a, b)| a - b).collect();
        let ratio = delta[0] / h[0];
        for k in 0..5 {
            assert!((delta[k] - ratio * h[k]).abs() <= 1e-14);
        }
    }

    #[test]
    fn disturbance_estimates_frozen_without_errors() {
        let params = default_system_params(1.0, crate::harness::scenario::reference_inertia());
        let state = SystemState::hover(Vec3::zeros(), 3);
        let errors = crate::geometry::payload_errors(
            &state.r0, &state.r0, &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &state.x0, &state.v0,
        );
        let cable = vec![CableErrors::zero(-Vec3::z()); 3];
        let est = DisturbanceEstimates::zero(3);
        let next = update_disturbance_estimates(&est, &errors, &cable, &state, &gains(), &params, 1e-3);
        assert_eq!(next, est);
    }

    #[test]
    fn constant_rotational_error_integrates_linearly() {
        let params = default_system_params(1.0, crate::harness::scenario::reference_inertia());
        let g = gains();
        let state = SystemState::hover(Vec3::zeros(), 3);
        let mut errors = crate::geometry::payload_errors(
            &state.r0, &state.r0, &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &state.x0, &state.v0,
        );
        errors.e_omega = Vec3::new(0.0, 0.0, 1.0);
        let cable = vec![CableErrors::zero(-Vec3::z()); 3];
        let (dt, t_end) = (1e-3, 2.0);
        let mut est = DisturbanceEstimates::zero(3);
        for _ in 0..(t_end / dt) as usize {
            est = update_disturbance_estimates(&est, &errors, &cable, &state, &g, &params, dt);
        }
        let expected = g.h_r0 / params.reference.inertia[(2, 2)] * t_end;
        assert!((est.payload_moment.z - expected).abs() < 1e-9);
    }

    #[test]
    fn quadrotor_estimate_rate_lies_along_cable() {
        let params = default_system_params(1.0, crate::harness::scenario::reference_inertia());
        let mut state = SystemState::hover(Vec3::zeros(), 3);
        state.cables[1].q = Vec3::new(0.3, -0.2, -0.9).normalize();
        let mut errors = crate::geometry::payload_errors(
            &state.r0, &state.r0, &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &state.x0, &state.v0,
        );
        errors.e_x = Vec3::new(0.2, -0.1, 0.05);
        errors.e_v = Vec3::new(-0.3, 0.1, 0.2);
        errors.e_omega = Vec3::new(0.1, 0.4, -0.2);
        let mut cable = vec![CableErrors::zero(-Vec3::z()); 3];
        cable[1].e_q = Vec3::new(0.1, 0.2, 0.0);
        cable[1].e_omega = Vec3::new(-0.3, 0.0, 0.1);
        let rates = disturbance_estimate_rates(&errors, &cable, &state, &gains(), &params);
        for (i, r) in rates.quadrotor_force.iter().enumerate() {
            let q = state.cables[i].q;
            assert!((r - q * q.dot(r)).amax() <= 1e-15);
        }
    }
}
