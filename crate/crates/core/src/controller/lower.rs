//! Lower control levels: cable direction tracking (`u_i⊥`) and the quadrotor
//! attitude loop (`f_i`, `M_i`). Setpoint derivatives come from backward
//! differences across control steps.

use super::gains::ControllerGains;
use crate::dynamics::{SystemParams, SystemState};
use crate::geometry::{hat, CableErrors, Mat3, Vec3};

/// Backward difference of a sampled signal, smoothed by a first-order lag
/// with time constant `tau` (`tau = 0` gives the plain difference). The
/// first sample has zero derivative; the derivative is marked valid only
/// after two samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Differentiator {
    last: Option<Vec3>,
    rate: Vec3,
}

/// One step of the first-order lag `y ← y + dt/(τ + dt) · (x − y)`.
pub fn lag(previous: &Vec3, input: &Vec3, dt: f64, tau: f64) -> Vec3 {
    previous + (dt / (tau + dt)) * (input - previous)
}

impl Differentiator {
    /// Returns `(derivative, valid)` and stores `value`.
    pub fn step(&mut self, value: Vec3, dt: f64, tau: f64) -> (Vec3, bool) {
        let valid = match self.last {
            Some(prev) => {
                self.rate = lag(&self.rate, &((value - prev) / dt), dt, tau);
                true
            }
            None => false,
        };
        self.last = Some(value);
        (self.rate, valid)
    }
}

/// Desired cable direction memory for one cable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CableSetpointMemory {
    q_d: Option<Vec3>,
    q_d_rate: Differentiator,
    omega_d_rate: Differentiator,
}

/// Desired direction, its rate, and the desired angular velocity and acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableSetpoint {
    pub q_d: Vec3,
    pub q_d_dot: Vec3,
    pub omega_d: Vec3,
    pub omega_d_dot: Vec3,
}

/// `q_d = −μ_d / ‖μ_d‖`, or the previous direction when `‖μ_d‖ < eps`
/// (straight down if there is none).
pub fn desired_cable_direction(mu_d: &Vec3, previous: Option<Vec3>, eps: f64) -> Vec3 {
    let norm = mu_d.norm();
    if norm < eps {
        previous.unwrap_or(-Vec3::z())
    } else {
        -mu_d / norm
    }
}

impl CableSetpointMemory {
    pub fn step(&mut self, mu_d: &Vec3, eps: f64, dt: f64, tau: f64) -> CableSetpoint {
        let q_d = desired_cable_direction(mu_d, self.q_d, eps);
        self.q_d = Some(q_d);
        let (q_d_dot, valid) = self.q_d_rate.step(q_d, dt, tau);
        let omega_d = q_d.cross(&q_d_dot);
        let omega_d_dot = if valid { self.omega_d_rate.step(omega_d, dt, tau).0 } else { Vec3::zeros() };
        CableSetpoint { q_d, q_d_dot, omega_d, omega_d_dot }
    }
}

/// Normal quadrotor force driving cable `i` toward its desired direction.
///
/// With the true connection acceleration `a_i` and no disturbance the cable
/// equations reduce to `−[q]×² ė_ω = −k_q e_q − k_ω e_ω`.
pub fn cable_attitude_control(
    errors: &CableErrors,
    omega_d_dot: &Vec3,
    state: &SystemState,
    a_i: &Vec3,
    i: usize,
    gains: &ControllerGains,
    params: &SystemParams,
) -> Vec3 {
    let quad = &params.quadrotors[i];
    let cable = &state.cables[i];
    let q_hat = hat(&cable.q);
    let q_hat2 = q_hat * q_hat;
    let q_dot = cable.omega.cross(&cable.q);
    let inner = -gains.k_q * errors.e_q
        - gains.k_omega * errors.e_omega
        - cable.q.dot(&errors.omega_d) * q_dot
        - q_hat2 * omega_d_dot;
    quad.mass * quad.cable_length * (q_hat * inner) - quad.mass * (q_hat2 * a_i)
}

/// Attitude setpoint memory for one quadrotor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttitudeSetpointMemory {
    r_d: Option<Mat3>,
    omega_d: Vec3,
    omega_d_rate: Differentiator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeCommand {
    pub thrust: f64,
    pub moment: Vec3,
    pub r_d: Mat3,
    pub e_r: Vec3,
    pub e_omega: Vec3,
}

/// Desired attitude whose third body axis is along `b3` with heading toward `e1`.
pub fn attitude_from_thrust_axis(b3: &Vec3) -> Mat3 {
    let mut b2 = b3.cross(&Vec3::x());
    if b2.norm() < 1e-6 {
        b2 = b3.cross(&Vec3::y());
    }
    let b2 = b2.normalize();
    let b1 = b2.cross(b3);
    Mat3::from_columns(&[b1, b2, *b3])
}

/// Geometric SO(3) tracking moment
/// `M = −k_R e_R − k_Ω e_Ω + Ω×JΩ − J(Ω̂ RᵀR_d Ω_d − RᵀR_d Ω̇_d)`.
pub fn attitude_moment(
    r: &Mat3,
    omega: &Vec3,
    r_d: &Mat3,
    omega_d: &Vec3,
    omega_d_dot: &Vec3,
    inertia: &Mat3,
    k_r: f64,
    k_omega: f64,
) -> (Vec3, Vec3, Vec3) {
    let rd_t_r = r_d.transpose() * r;
    let e_r = crate::geometry::vee_unchecked(&(0.5 * (rd_t_r - rd_t_r.transpose())));
    let rt_rd = r.transpose() * r_d;
    let e_omega = omega - rt_rd * omega_d;
    let moment = -k_r * e_r - k_omega * e_omega + omega.cross(&(inertia * omega))
        - inertia * (hat(omega) * rt_rd * omega_d - rt_rd * omega_d_dot);
    (moment, e_r, e_omega)
}

impl AttitudeSetpointMemory {
    /// Thrust and moment for quadrotor `i` realizing control force `u_i`.
    pub fn step(
        &mut self,
        u_i: &Vec3,
        state: &SystemState,
        i: usize,
        gains: &ControllerGains,
        params: &SystemParams,
        dt: f64,
    ) -> AttitudeCommand {
        let quad = &state.quadrotors[i];
        let r_d = if u_i.norm() < gains.force_eps_n {
            self.r_d.unwrap_or(quad.rotation)
        } else {
            attitude_from_thrust_axis(&u_i.normalize())
        };
        let tau = gains.setpoint_rate_filter_s;
        let (omega_d, omega_d_dot) = match self.r_d {
            Some(prev) => {
                let raw = crate::geometry::vee_unchecked(&(r_d.transpose() * (r_d - prev) / dt));
                self.omega_d = lag(&self.omega_d, &raw, dt, tau);
                let (rate, valid) = self.omega_d_rate.step(self.omega_d, dt, tau);
                (self.omega_d, if valid { rate } else { Vec3::zeros() })
            }
            None => (Vec3::zeros(), Vec3::zeros()),
        };
        self.r_d = Some(r_d);

        let thrust = u_i.dot(&(quad.rotation * Vec3::z()));
        let (moment, e_r, e_omega) = attitude_moment(
            &quad.rotation,
            &quad.omega,
            &r_d,
            &omega_d,
            &omega_d_dot,
            &params.quadrotors[i].inertia,
            gains.k_r,
            gains.k_omega_inner,
        );
        AttitudeCommand { thrust, moment, r_d, e_r, e_omega }
    }
}
