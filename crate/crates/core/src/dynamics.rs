//! Disturbance-augmented equations of motion for a rigid payload carried by
//! `n` quadrotors on massless rigid cables, plus the minimum-norm tension
//! allocation that maps a desired payload wrench onto the cables.
//!
//! The plant is written in the rearranged form where the first-level wrench
//! `{F_d, M_d}` enters the payload equations directly and the cables only
//! contribute through the tension deviation terms `Y_x`, `Y_R`.

use nalgebra::{DMatrix, Matrix6, Vector6};

use crate::error::{Error, Result};
use crate::geometry::{e3, hat, project_parallel, project_perpendicular, renormalize_rotation, Mat3, Vec3};

/// Standard gravity (m/s²).
pub const GRAVITY: f64 = 9.81;

/// Singular-value ratio below which the allocation matrix is treated as rank deficient.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrotorParams {
    /// kg
    pub mass: f64,
    /// kg·m²
    pub inertia: Mat3,
    /// m
    pub cable_length: f64,
    /// Cable attachment point in the payload frame (m).
    pub attachment: Vec3,
}

/// Controller-side knowledge of the payload: the reference model and the
/// preset upper bounds used by the adaptive laws.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceModel {
    pub mass: f64,
    pub inertia: Mat3,
    pub max_mass: f64,
    pub max_inertia: Mat3,
}

/// Wide `6×3n` map from stacked body-frame cable forces to the payload wrench,
/// with the inverse Gram matrix cached for the minimum-norm solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocator {
    attachments: Vec<Vec3>,
    gram_inv: Matrix6<f64>,
}

impl Allocator {
    pub fn new(attachments: &[Vec3]) -> Result<Self> {
        let a = allocation_matrix(attachments);
        let sv = a.singular_values();
        let (max, min) = (sv.max(), if sv.len() < 6 { 0.0 } else { sv.min() });
        if a.ncols() < 6 || !(min > RANK_TOL * max) {
            return Err(Error::config(format!(
                "cable attachment geometry is rank deficient (singular values {:?})",
                sv.as_slice()
            )));
        }
        let gram: Matrix6<f64> = (&a * a.transpose()).fixed_view::<6, 6>(0, 0).into_owned();
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::config("allocation Gram matrix is singular"))?;
        Ok(Self { attachments: attachments.to_vec(), gram_inv })
    }

    /// Minimum-norm body-frame cable forces `ν` with `Σν_i = f_body`, `Σ[ρ_i]×ν_i = m_body`.
    /// One step of iterative refinement on the wrench residual recovers the
    /// accuracy lost to the normal equations.
    pub fn solve_body(&self, f_body: &Vec3, m_body: &Vec3) -> Vec<Vec3> {
        let b = Vector6::new(f_body.x, f_body.y, f_body.z, m_body.x, m_body.y, m_body.z);
        let mut nu = self.min_norm(&b);
        let (f, m) = self.wrench(&nu);
        let r = b - Vector6::new(f.x, f.y, f.z, m.x, m.y, m.z);
        for (v, dv) in nu.iter_mut().zip(self.min_norm(&r)) {
            *v += dv;
        }
        nu
    }

    fn min_norm(&self, b: &Vector6<f64>) -> Vec<Vec3> {
        let lambda = self.gram_inv * b;
        let lf = Vec3::new(lambda[0], lambda[1], lambda[2]);
        let lm = Vec3::new(lambda[3], lambda[4], lambda[5]);
        // Aᵀλ block i: λ_f + [ρ_i]×ᵀ λ_m = λ_f + λ_m × ρ_i
        self.attachments.iter().map(|rho| lf + lm.cross(rho)).collect()
    }

    /// Body-frame payload force and moment produced by cable forces `nu`.
    pub fn wrench(&self, nu: &[Vec3]) -> (Vec3, Vec3) {
        nu.iter().zip(&self.attachments).fold((Vec3::zeros(), Vec3::zeros()), |(f, m), (v, rho)| {
            (f + v, m + rho.cross(v))
        })
    }
}

/// `[I … I; [ρ_1]× … [ρ_n]×]`
pub fn allocation_matrix(attachments: &[Vec3]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(6, 3 * attachments.len());
    for (i, rho) in attachments.iter().enumerate() {
        a.fixed_view_mut::<3, 3>(0, 3 * i).copy_from(&Mat3::identity());
        a.fixed_view_mut::<3, 3>(3, 3 * i).copy_from(&hat(rho));
    }
    a
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// True payload mass (kg).
    pub payload_mass: f64,
    /// True payload inertia (kg·m²), payload frame.
    pub payload_inertia: Mat3,
    pub quadrotors: Vec<QuadrotorParams>,
    pub gravity: f64,
    pub reference: ReferenceModel,
    allocator: Allocator,
    payload_inertia_inv: Mat3,
}

impl SystemParams {
    pub fn new(
        payload_mass: f64,
        payload_inertia: Mat3,
        quadrotors: Vec<QuadrotorParams>,
        reference: ReferenceModel,
        gravity: f64,
    ) -> Result<Self> {
        if quadrotors.is_empty() {
            return Err(Error::config("at least one quadrotor is required"));
        }
        check_positive("payload mass", payload_mass)?;
        check_positive("gravity", gravity)?;
        check_spd("payload inertia", &payload_inertia)?;
        check_positive("reference mass", reference.mass)?;
        check_positive("max payload mass", reference.max_mass)?;
        check_spd("reference inertia", &reference.inertia)?;
        check_spd("max payload inertia", &reference.max_inertia)?;
        for (i, quad) in quadrotors.iter().enumerate() {
            check_positive(&format!("quadrotor {i} mass"), quad.mass)?;
            check_positive(&format!("quadrotor {i} cable length"), quad.cable_length)?;
            check_spd(&format!("quadrotor {i} inertia"), &quad.inertia)?;
            if !quad.attachment.iter().all(|c| c.is_finite()) {
                return Err(Error::config(format!("quadrotor {i} attachment is not finite")));
            }
        }
        let attachments: Vec<Vec3> = quadrotors.iter().map(|q| q.attachment).collect();
        let allocator = Allocator::new(&attachments)?;
        let payload_inertia_inv = payload_inertia.try_inverse().expect("checked SPD");
        Ok(Self {
            payload_mass,
            payload_inertia,
            quadrotors,
            gravity,
            reference,
            allocator,
            payload_inertia_inv,
        })
    }

    pub fn n(&self) -> usize {
        self.quadrotors.len()
    }

    pub fn allocator(&self) -> &Allocator {
        &self.allocator
    }

    pub fn payload_inertia_inv(&self) -> &Mat3 {
        &self.payload_inertia_inv
    }

    pub fn attachment(&self, i: usize) -> &Vec3 {
        &self.quadrotors[i].attachment
    }
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!("{what} must be positive and finite, got {value}")))
    }
}

fn check_spd(what: &str, m: &Mat3) -> Result<()> {
    if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::config(format!("{what} must be symmetric")));
    }
    if m.cholesky().is_none() {
        return Err(Error::config(format!("{what} must be positive-definite")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableState {
    /// Unit vector from the quadrotor to its attachment point.
    pub q: Vec3,
    /// Cable angular velocity, perpendicular to `q` (rad/s).
    pub omega: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrotorState {
    pub rotation: Mat3,
    /// Body angular velocity (rad/s).
    pub omega: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub x0: Vec3,
    pub v0: Vec3,
    pub r0: Mat3,
    pub omega0: Vec3,
    pub cables: Vec<CableState>,
    pub quadrotors: Vec<QuadrotorState>,
}

/// Number of scalars in the flat layout of a state with `n` quadrotors.
pub const fn flat_len(n: usize) -> usize {
    18 + 18 * n
}

fn push3(out: &mut Vec<f64>, v: &Vec3) {
    out.extend_from_slice(v.as_slice());
}

fn push9(out: &mut Vec<f64>, m: &Mat3) {
    out.extend_from_slice(m.as_slice());
}

fn read3(y: &[f64], at: &mut usize) -> Vec3 {
    let v = Vec3::from_column_slice(&y[*at..*at + 3]);
    *at += 3;
    v
}

fn read9(y: &[f64], at: &mut usize) -> Mat3 {
    let m = Mat3::from_column_slice(&y[*at..*at + 9]);
    *at += 9;
    m
}

impl SystemState {
    /// Payload at rest at `x0` with identity attitude, cables hanging straight
    /// down and quadrotors level.
    pub fn hover(x0: Vec3, n: usize) -> Self {
        Self {
            x0,
            v0: Vec3::zeros(),
            r0: Mat3::identity(),
            omega0: Vec3::zeros(),
            cables: vec![CableState { q: -e3(), omega: Vec3::zeros() }; n],
            quadrotors: vec![QuadrotorState { rotation: Mat3::identity(), omega: Vec3::zeros() }; n],
        }
    }

    pub fn n(&self) -> usize {
        self.cables.len()
    }

    /// Layout: `x0, v0, R0 (column-major), Ω0`, then per agent `q, ω, R, Ω`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(flat_len(self.n()));
        push3(&mut out, &self.x0);
        push3(&mut out, &self.v0);
        push9(&mut out, &self.r0);
        push3(&mut out, &self.omega0);
        for (c, q) in self.cables.iter().zip(&self.quadrotors) {
            push3(&mut out, &c.q);
            push3(&mut out, &c.omega);
            push9(&mut out, &q.rotation);
            push3(&mut out, &q.omega);
        }
        out
    }

    pub fn from_flat(y: &[f64], n: usize) -> Self {
        assert_eq!(y.len(), flat_len(n), "flat state length mismatch");
        let mut at = 0;
        let x0 = read3(y, &mut at);
        let v0 = read3(y, &mut at);
        let r0 = read9(y, &mut at);
        let omega0 = read3(y, &mut at);
        let mut cables = Vec::with_capacity(n);
        let mut quadrotors = Vec::with_capacity(n);
        for _ in 0..n {
            cables.push(CableState { q: read3(y, &mut at), omega: read3(y, &mut at) });
            quadrotors.push(QuadrotorState { rotation: read9(y, &mut at), omega: read3(y, &mut at) });
        }
        Self { x0, v0, r0, omega0, cables, quadrotors }
    }

    /// Largest deviation of any rotation, unit vector or tangency constraint.
    pub fn manifold_residual(&self) -> f64 {
        let mut worst = crate::geometry::orthogonality_residual(&self.r0);
        for (c, q) in self.cables.iter().zip(&self.quadrotors) {
            worst = worst
                .max((c.q.norm() - 1.0).abs())
                .max(c.omega.dot(&c.q).abs())
                .max(crate::geometry::orthogonality_residual(&q.rotation));
        }
        worst
    }

    /// Projects every rotation back onto SO(3), rescales each `q_i` to unit
    /// length and removes the radial part of each `ω_i`.
    pub fn renormalize(&mut self) -> Result<()> {
        self.r0 = renormalize_rotation(&self.r0)?;
        for (c, q) in self.cables.iter_mut().zip(self.quadrotors.iter_mut()) {
            let norm = c.q.norm();
            if !((norm - 1.0).abs() <= crate::geometry::SO3_REPAIR_TOL) {
                return Err(Error::OffManifold(format!("cable direction norm {norm:.6}")));
            }
            c.q /= norm;
            c.omega = project_perpendicular(&c.q, &c.omega);
            q.rotation = renormalize_rotation(&q.rotation)?;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// External disturbances acting on the payload and on each quadrotor.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSample {
    /// Force on the payload (N).
    pub dx0: Vec3,
    /// Moment on the payload, body frame (N·m).
    pub dr0: Vec3,
    /// Force on each quadrotor (N).
    pub dxi: Vec<Vec3>,
    /// Moment on each quadrotor (N·m).
    pub dri: Vec<Vec3>,
}

impl DisturbanceSample {
    pub fn zero(n: usize) -> Self {
        Self { dx0: Vec3::zeros(), dr0: Vec3::zeros(), dxi: vec![Vec3::zeros(); n], dri: vec![Vec3::zeros(); n] }
    }

    /// Component of quadrotor `i`'s force along the cable direction `q`.
    pub fn parallel(&self, i: usize, q: &Vec3) -> Vec3 {
        project_parallel(q, &self.dxi[i])
    }

    /// Component of quadrotor `i`'s force normal to the cable direction `q`.
    pub fn perpendicular(&self, i: usize, q: &Vec3) -> Vec3 {
        project_perpendicular(q, &self.dxi[i])
    }
}

/// Full output of one controller evaluation, from the first-level wrench
/// down to per-quadrotor thrust and moment.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlOutput {
    /// Desired resultant force on the payload (N).
    pub f_d: Vec3,
    /// Desired resultant moment on the payload, body frame (N·m).
    pub m_d: Vec3,
    pub mu_d: Vec<Vec3>,
    pub mu: Vec<Vec3>,
    pub u: Vec<Vec3>,
    pub u_par: Vec<Vec3>,
    pub u_perp: Vec<Vec3>,
    pub thrust: Vec<f64>,
    pub moment: Vec<Vec3>,
}

impl ControlOutput {
    /// A wrench-only output with every lower-level quantity at zero.
    pub fn zero(n: usize) -> Self {
        Self {
            f_d: Vec3::zeros(),
            m_d: Vec3::zeros(),
            mu_d: vec![Vec3::zeros(); n],
            mu: vec![Vec3::zeros(); n],
            u: vec![Vec3::zeros(); n],
            u_par: vec![Vec3::zeros(); n],
            u_perp: vec![Vec3::zeros(); n],
            thrust: vec![0.0; n],
            moment: vec![Vec3::zeros(); n],
        }
    }
}

/// Minimum-norm desired cable forces (inertial frame) realizing `F_d` and the
/// body-frame moment `M_d`.
pub fn allocate_cable_forces(f_d: &Vec3, m_d: &Vec3, r0: &Mat3, params: &SystemParams) -> Vec<Vec3> {
    params
        .allocator
        .solve_body(&(r0.transpose() * f_d), m_d)
        .into_iter()
        .map(|nu| r0 * nu)
        .collect()
}

/// Acceleration of attachment point `i` plus gravity.
pub fn connection_acceleration(
    state: &SystemState,
    acc0: &Vec3,
    alpha0: &Vec3,
    i: usize,
    params: &SystemParams,
) -> Vec3 {
    let rho = params.attachment(i);
    let w = hat(&state.omega0);
    acc0 + params.gravity * e3() + state.r0 * (w * w * rho) - state.r0 * (hat(rho) * alpha0)
}

/// Cable-parallel quadrotor force that realizes tension `μ_i`.
pub fn parallel_control_component(
    mu: &Vec3,
    state: &SystemState,
    a_i: &Vec3,
    i: usize,
    params: &SystemParams,
) -> Vec3 {
    let quad = &params.quadrotors[i];
    let cable = &state.cables[i];
    mu + quad.mass * quad.cable_length * cable.omega.norm_squared() * cable.q
        + quad.mass * project_parallel(&cable.q, a_i)
}

/// Payload force and moment residuals caused by cables not pointing along
/// their desired directions, evaluated at the cable directions in `state`.
pub fn tension_deviation(state: &SystemState, mu_d: &[Vec3], params: &SystemParams) -> (Vec3, Vec3) {
    let mut force = Vec3::zeros();
    let mut moment = Vec3::zeros();
    for (i, (cable, mu_d)) in state.cables.iter().zip(mu_d).enumerate() {
        let dev = project_parallel(&cable.q, mu_d) - mu_d;
        force += dev;
        moment += hat(params.attachment(i)) * (state.r0.transpose() * dev);
    }
    (force / params.payload_mass, params.payload_inertia_inv() * moment)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CableDerivative {
    pub q_dot: Vec3,
    pub omega_dot: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrotorDerivative {
    pub rotation_dot: Mat3,
    pub omega_dot: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemStateDerivative {
    pub x0_dot: Vec3,
    pub v0_dot: Vec3,
    pub r0_dot: Mat3,
    pub omega0_dot: Vec3,
    pub cables: Vec<CableDerivative>,
    pub quadrotors: Vec<QuadrotorDerivative>,
    /// Attachment-point accelerations used by the cable equations.
    pub connection_acc: Vec<Vec3>,
}

impl SystemStateDerivative {
    /// Same layout as [`SystemState::to_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(flat_len(self.cables.len()));
        push3(&mut out, &self.x0_dot);
        push3(&mut out, &self.v0_dot);
        push9(&mut out, &self.r0_dot);
        push3(&mut out, &self.omega0_dot);
        for (c, q) in self.cables.iter().zip(&self.quadrotors) {
            push3(&mut out, &c.q_dot);
            push3(&mut out, &c.omega_dot);
            push9(&mut out, &q.rotation_dot);
            push3(&mut out, &q.omega_dot);
        }
        out
    }
}

/// Time derivative of the full state.
///
/// `ctrl` supplies the held first-level wrench, desired tensions, normal
/// forces `u_i⊥` and quadrotor moments. Realized tensions are re-projected
/// onto the cable directions in `state`, and the quadrotor disturbance forces
/// are split along the same directions.
pub fn system_derivative(
    state: &SystemState,
    ctrl: &ControlOutput,
    dist: &DisturbanceSample,
    phi_x: &Vec3,
    phi_r: &Vec3,
    params: &SystemParams,
) -> SystemStateDerivative {
    let n = params.n();
    let m0 = params.payload_mass;
    let r0_t = state.r0.transpose();

    let (y_x, y_r) = tension_deviation(state, &ctrl.mu_d, params);

    let mut dist_force = dist.dx0;
    let mut dist_moment = dist.dr0;
    for i in 0..n {
        let par = dist.parallel(i, &state.cables[i].q);
        dist_force += par;
        dist_moment += hat(params.attachment(i)) * (r0_t * par);
    }

    let acc0 = (ctrl.f_d + dist_force) / m0 - params.gravity * e3() + y_x + phi_x;
    let j0 = &params.payload_inertia;
    let alpha0 = params.payload_inertia_inv()
        * (ctrl.m_d - state.omega0.cross(&(j0 * state.omega0)) + dist_moment)
        + y_r
        + phi_r;

    let mut cables = Vec::with_capacity(n);
    let mut quadrotors = Vec::with_capacity(n);
    let mut connection_acc = Vec::with_capacity(n);
    for i in 0..n {
        let quad = &params.quadrotors[i];
        let cable = &state.cables[i];
        let a_i = connection_acceleration(state, &acc0, &alpha0, i, params);
        let q_hat = hat(&cable.q);
        let perp_force = ctrl.u_perp[i] + dist.perpendicular(i, &cable.q);
        cables.push(CableDerivative {
            q_dot: cable.omega.cross(&cable.q),
            omega_dot: q_hat * a_i / quad.cable_length
                - q_hat * perp_force / (quad.mass * quad.cable_length),
        });
        connection_acc.push(a_i);

        let qs = &state.quadrotors[i];
        let j_i = &quad.inertia;
        let torque = ctrl.moment[i] - qs.omega.cross(&(j_i * qs.omega)) + dist.dri[i];
        quadrotors.push(QuadrotorDerivative {
            rotation_dot: qs.rotation * hat(&qs.omega),
            omega_dot: j_i.cholesky().expect("checked SPD").solve(&torque),
        });
    }

    SystemStateDerivative {
        x0_dot: state.v0,
        v0_dot: acc0,
        r0_dot: state.r0 * hat(&state.omega0),
        omega0_dot: alpha0,
        cables,
        quadrotors,
        connection_acc,
    }
}

/// Second derivative of cable direction `i` written directly in terms of the
/// full quadrotor force `u_i`. Equal to `ω̇_i × q_i + ω_i × q̇_i` along
/// solutions with `ω_i ⟂ q_i`.
pub fn cable_direction_acceleration(
    state: &SystemState,
    u_i: &Vec3,
    dist_i: &Vec3,
    a_i: &Vec3,
    i: usize,
    params: &SystemParams,
) -> Vec3 {
    let quad = &params.quadrotors[i];
    let cable = &state.cables[i];
    let q_hat = hat(&cable.q);
    let q_dot = cable.omega.cross(&cable.q);
    q_hat * q_hat * (u_i + dist_i - quad.mass * a_i) / (quad.mass * quad.cable_length)
        - q_dot.norm_squared() * cable.q
}
