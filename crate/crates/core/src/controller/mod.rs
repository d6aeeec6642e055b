//! Adaptive-neuro geometric control stack.
//!
//! The cascade runs `{F_d, M_d} → {μ_i_d} → {μ_i} → {u_i∥, u_i⊥} → {f_i, M_i}`.
//! Only the first level differs between [`Mode::Adaptive`] and
//! [`Mode::Baseline`]: the baseline freezes the payload model at its
//! reference values and switches the networks off, while keeping the
//! integral compensations.

pub mod gains;
pub mod laws;
pub mod lower;
pub mod rbf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    allocate_cable_forces, connection_acceleration, parallel_control_component, ControlOutput, SystemParams,
    SystemState,
};
use crate::geometry::{cable_errors, hat, payload_errors, project_parallel, CableErrors, Mat3, PayloadErrors, Vec3};

pub use gains::{ControllerGains, GainSet};
pub use laws::DisturbanceEstimates;
pub use lower::{AttitudeSetpointMemory, CableSetpointMemory};
pub use rbf::{nn_estimate, rbf_activation, RbfLayout, RbfNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Adaptive,
    Baseline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Adaptive => "adaptive",
            Mode::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "adaptive" => Ok(Mode::Adaptive),
            "baseline" => Ok(Mode::Baseline),
            other => Err(format!("unknown mode `{other}` (expected adaptive or baseline)")),
        }
    }
}

/// Desired payload pose and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setpoint {
    pub x_d: Vec3,
    pub v_d: Vec3,
    pub a_d: Vec3,
    pub r_d: Mat3,
    pub omega_d: Vec3,
    pub alpha_d: Vec3,
}

impl Setpoint {
    pub fn hold(x_d: Vec3) -> Self {
        Self {
            x_d,
            v_d: Vec3::zeros(),
            a_d: Vec3::zeros(),
            r_d: Mat3::identity(),
            omega_d: Vec3::zeros(),
            alpha_d: Vec3::zeros(),
        }
    }
}

/// Estimator memory carried between control steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    /// Per-axis payload mass estimates (kg).
    pub mass: Vec3,
    /// Diagonal payload inertia estimates (kg·m²).
    pub inertia: Vec3,
    pub nets_x: [RbfNetwork; 3],
    pub nets_r: [RbfNetwork; 3],
    pub disturbances: DisturbanceEstimates,
    pub cable_setpoints: Vec<CableSetpointMemory>,
    pub attitude_setpoints: Vec<AttitudeSetpointMemory>,
}

impl ControllerState {
    /// Reference-model estimates, zero weights and zero disturbance estimates.
    pub fn new(params: &SystemParams, layout: &RbfLayout) -> Self {
        let j = &params.reference.inertia;
        let net = layout.build();
        let n = params.n();
        Self {
            mass: Vec3::repeat(params.reference.mass),
            inertia: Vec3::new(j[(0, 0)], j[(1, 1)], j[(2, 2)]),
            nets_x: [net.clone(), net.clone(), net.clone()],
            nets_r: [net.clone(), net.clone(), net],
            disturbances: DisturbanceEstimates::zero(n),
            cable_setpoints: vec![CableSetpointMemory::default(); n],
            attitude_setpoints: vec![AttitudeSetpointMemory::default(); n],
        }
    }
}

/// The payload model seen by the first-level control: per-axis mass and
/// inertia scalings and the network outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstLevelModel {
    pub mass: Vec3,
    pub inertia: Vec3,
    pub phi_x: Vec3,
    pub phi_r: Vec3,
}

impl FirstLevelModel {
    pub fn for_mode(mode: Mode, cs: &ControllerState, errors: &PayloadErrors, params: &SystemParams) -> Self {
        match mode {
            Mode::Adaptive => Self {
                mass: cs.mass,
                inertia: cs.inertia,
                phi_x: Vec3::from_fn(|j, _| nn_estimate(&cs.nets_x[j], errors.phase(j))),
                phi_r: Vec3::from_fn(|j, _| nn_estimate(&cs.nets_r[j], errors.rotational_phase(j))),
            },
            Mode::Baseline => {
                let j = &params.reference.inertia;
                Self {
                    mass: Vec3::repeat(params.reference.mass),
                    inertia: Vec3::new(j[(0, 0)], j[(1, 1)], j[(2, 2)]),
                    phi_x: Vec3::zeros(),
                    phi_r: Vec3::zeros(),
                }
            }
        }
    }
}

/// Translational adaptive-neuro control, per axis
/// `m̄_j (−k_p e − k_d ė + ẍ_d + g δ_j3 − φ̄_x)`.
pub fn translational_control(
    errors: &PayloadErrors,
    setpoint: &Setpoint,
    model: &FirstLevelModel,
    gains: &ControllerGains,
    gravity: f64,
) -> Vec3 {
    Vec3::from_fn(|j, _| {
        let pd = gains.k_p[j] * errors.e_x[j] + gains.k_d[j] * errors.e_v[j];
        let g = if j == 2 { gravity } else { 0.0 };
        model.mass[j] * (-pd + setpoint.a_d[j] + g - model.phi_x[j])
    })
}

/// Rotational adaptive-neuro control, per body axis
/// `J̄_j (−k_R e_R − k_Ω e_Ω − ([Ω]× RᵀR_d Ω_d) + RᵀR_d Ω̇_d − φ̄_R)`.
pub fn rotational_control(
    errors: &PayloadErrors,
    state: &SystemState,
    setpoint: &Setpoint,
    model: &FirstLevelModel,
    gains: &ControllerGains,
) -> Vec3 {
    let rt_rd = state.r0.transpose() * setpoint.r_d;
    let coriolis = hat(&state.omega0) * (rt_rd * setpoint.omega_d);
    let feedforward = rt_rd * setpoint.alpha_d;
    Vec3::from_fn(|j, _| {
        model.inertia[j]
            * (-gains.k_r0 * errors.e_r[j] - gains.k_omega0 * errors.e_omega[j] - coriolis[j] + feedforward[j]
                - model.phi_r[j])
    })
}

/// Enhanced first-level wrench: the adaptive-neuro terms minus the integral
/// disturbance compensation.
pub fn first_level_control(
    u_x: &Vec3,
    u_r: &Vec3,
    estimates: &DisturbanceEstimates,
    state: &SystemState,
    params: &SystemParams,
) -> (Vec3, Vec3) {
    let mut f_d = u_x - estimates.payload_force;
    let mut m_d = u_r - estimates.payload_moment;
    let r0_t = state.r0.transpose();
    for i in 0..params.n() {
        let par = estimates.parallel(i, &state.cables[i].q);
        f_d -= par;
        m_d -= hat(params.attachment(i)) * (r0_t * par);
    }
    (f_d, m_d)
}

/// Everything produced by one controller evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlStep {
    pub output: ControlOutput,
    /// Estimator state to use at the next step.
    pub next: ControllerState,
    pub errors: PayloadErrors,
    pub cable_errors: Vec<CableErrors>,
    pub u_x: Vec3,
    pub u_r: Vec3,
    /// Network outputs used in this step (zero in baseline mode).
    pub phi_x: Vec3,
    pub phi_r: Vec3,
}

/// Payload accelerations the first level expects to produce:
/// `ẍ0 = U_x ⊘ m̄ − g e3 + φ̄_x`, `Ω̇0 = J̄⁻¹(U_R − Ω0 × J̄Ω0) + φ̄_R`.
/// The network outputs are added back because they cancel the unknown
/// dynamics rather than accelerate the payload.
pub fn predicted_payload_acceleration(
    u_x: &Vec3,
    u_r: &Vec3,
    model: &FirstLevelModel,
    state: &SystemState,
    gravity: f64,
) -> (Vec3, Vec3) {
    let acc0 = u_x.component_div(&model.mass) - gravity * Vec3::z() + model.phi_x;
    let j_bar = Mat3::from_diagonal(&model.inertia);
    let alpha0 = (u_r - state.omega0.cross(&(j_bar * state.omega0))).component_div(&model.inertia) + model.phi_r;
    (acc0, alpha0)
}

/// Runs the full cascade for one control period of length `dt` and steps
/// every estimator with explicit Euler.
///
/// Connection-point accelerations for the lower levels use
/// [`predicted_payload_acceleration`].
pub fn step_controller(
    state: &SystemState,
    setpoint: &Setpoint,
    cs: &ControllerState,
    gains: &ControllerGains,
    params: &SystemParams,
    dt: f64,
    mode: Mode,
) -> ControlStep {
    let n = params.n();
    let g = params.gravity;
    let errors = payload_errors(
        &setpoint.r_d,
        &state.r0,
        &setpoint.omega_d,
        &state.omega0,
        &setpoint.x_d,
        &setpoint.v_d,
        &state.x0,
        &state.v0,
    );
    let model = FirstLevelModel::for_mode(mode, cs, &errors, params);
    let u_x = translational_control(&errors, setpoint, &model, gains, g);
    let u_r = rotational_control(&errors, state, setpoint, &model, gains);
    let (f_d, m_d) = first_level_control(&u_x, &u_r, &cs.disturbances, state, params);

    let mu_d = allocate_cable_forces(&f_d, &m_d, &state.r0, params);
    let mu: Vec<Vec3> = mu_d.iter().zip(&state.cables).map(|(m, c)| project_parallel(&c.q, m)).collect();

    let (acc0, alpha0) = predicted_payload_acceleration(&u_x, &u_r, &model, state, g);

    let mut next = cs.clone();
    let mut output = ControlOutput::zero(n);
    output.f_d = f_d;
    output.m_d = m_d;
    let mut cable_errs = Vec::with_capacity(n);
    for i in 0..n {
        let a_i = connection_acceleration(state, &acc0, &alpha0, i, params);
        let sp = next.cable_setpoints[i].step(&mu_d[i], gains.tension_eps_n, dt, gains.setpoint_rate_filter_s);
        let cable = &state.cables[i];
        let ce = cable_errors(&sp.q_d, &sp.q_d_dot, &cable.q, &cable.omega);
        let u_par = parallel_control_component(&mu[i], state, &a_i, i, params);
        let u_perp = lower::cable_attitude_control(&ce, &sp.omega_d_dot, state, &a_i, i, gains, params);
        let u = u_par + u_perp;
        let cmd = next.attitude_setpoints[i].step(&u, state, i, gains, params, dt);
        output.u_par[i] = u_par;
        output.u_perp[i] = u_perp;
        output.u[i] = u;
        output.thrust[i] = cmd.thrust;
        output.moment[i] = cmd.moment;
        cable_errs.push(ce);
    }
    output.mu_d = mu_d;
    output.mu = mu;

    if mode == Mode::Adaptive {
        let j_max = &params.reference.max_inertia;
        for j in 0..3 {
            let drive_x = gains.error_drive(j, errors.phase(j));
            next.mass[j] =
                laws::update_mass_estimate(cs.mass[j], drive_x * u_x[j], gains, params.reference.max_mass, dt);
            next.inertia[j] =
                laws::update_inertia_estimate(cs.inertia[j], errors.e_omega[j] * u_r[j], gains, j_max[(j, j)], dt);
            laws::update_weights(&mut next.nets_x[j], errors.phase(j), drive_x, gains.gamma_x[j], dt);
            laws::update_weights(
                &mut next.nets_r[j],
                errors.rotational_phase(j),
                errors.e_omega[j],
                gains.gamma_r[j],
                dt,
            );
        }
    }
    next.disturbances =
        laws::update_disturbance_estimates(&cs.disturbances, &errors, &cable_errs, state, gains, params, dt);

    ControlStep {
        output,
        next,
        errors,
        cable_errors: cable_errs,
        u_x,
        u_r,
        phi_x: model.phi_x,
        phi_r: model.phi_r,
    }
}
