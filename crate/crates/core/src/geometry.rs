//! Fixed-size linear algebra on SO(3) and S², and the tracking-error maps
//! shared by the plant and the controller.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Skew tolerance accepted by [`vee`].
pub const SKEW_TOL: f64 = 1e-9;
/// Largest orthogonality residual [`renormalize_rotation`] will repair.
pub const SO3_REPAIR_TOL: f64 = 1e-3;

/// Unit basis vector `e_j` (0-based axis index).
pub fn basis(axis: usize) -> Vec3 {
    let mut v = Vec3::zeros();
    v[axis] = 1.0;
    v
}

pub fn e3() -> Vec3 {
    Vec3::z()
}

/// Skew-symmetric matrix with `hat(v) * w == v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric part exceeds [`SKEW_TOL`].
pub fn vee(m: &Mat3) -> Result<Vec3> {
    let asym = (m + m.transpose()).amax();
    if !(asym <= SKEW_TOL) {
        return Err(Error::NotSkew(asym));
    }
    Ok(vee_unchecked(m))
}

/// Vee of the skew part of `m`, without validation. Used in hot loops where
/// the argument is skew by construction.
pub fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rotation by `angle` about the unit `axis` (Rodrigues).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let k = hat(&axis.normalize());
    Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Rotation from a rotation vector (axis times angle).
pub fn exp_so3(phi: &Vec3) -> Mat3 {
    let angle = phi.norm();
    if angle < 1e-15 {
        return Mat3::identity() + hat(phi);
    }
    axis_angle(&(phi / angle), angle)
}

pub fn rot_z(angle: f64) -> Mat3 {
    axis_angle(&Vec3::z(), angle)
}

/// `(q ⊗ q) v`
pub fn project_parallel(q: &Vec3, v: &Vec3) -> Vec3 {
    q * q.dot(v)
}

/// `(I − q ⊗ q) v`
pub fn project_perpendicular(q: &Vec3, v: &Vec3) -> Vec3 {
    v - project_parallel(q, v)
}

/// `‖RᵀR − I‖` (max-abs entry).
pub fn orthogonality_residual(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).amax()
}

/// Nearest proper rotation to `r` (polar projection via SVD).
pub fn renormalize_rotation(r: &Mat3) -> Result<Mat3> {
    let residual = orthogonality_residual(r);
    if !(residual <= SO3_REPAIR_TOL) {
        return Err(Error::OffManifold(format!(
            "rotation orthogonality residual {residual:.3e} exceeds {SO3_REPAIR_TOL:.0e}"
        )));
    }
    if r.determinant() <= 0.0 {
        return Err(Error::OffManifold("rotation has non-positive determinant".into()));
    }
    let svd = r.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    Ok(u * v_t)
}

/// Payload tracking errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadErrors {
    pub e_x: Vec3,
    pub e_v: Vec3,
    pub e_r: Vec3,
    pub e_omega: Vec3,
    /// `½ tr[I − R_dᵀR]`, in [0, 2] for rotations.
    pub psi_r: f64,
}

impl PayloadErrors {
    /// Error phase pair `(e_x, ė_x)` along inertial axis `j`.
    pub fn phase(&self, axis: usize) -> [f64; 2] {
        [self.e_x[axis], self.e_v[axis]]
    }

    /// Rotational network input `(e_R, e_Ω)` along body axis `j`.
    pub fn rotational_phase(&self, axis: usize) -> [f64; 2] {
        [self.e_r[axis], self.e_omega[axis]]
    }
}

#[allow(clippy::too_many_arguments)]
pub fn payload_errors(
    r_d: &Mat3,
    r: &Mat3,
    omega_d: &Vec3,
    omega: &Vec3,
    x_d: &Vec3,
    v_d: &Vec3,
    x: &Vec3,
    v: &Vec3,
) -> PayloadErrors {
    let rd_t_r = r_d.transpose() * r;
    let e_r = vee_unchecked(&(0.5 * (rd_t_r - rd_t_r.transpose())));
    let e_omega = omega - r.transpose() * r_d * omega_d;
    let psi_r = 0.5 * (3.0 - rd_t_r.trace());
    PayloadErrors { e_x: x - x_d, e_v: v - v_d, e_r, e_omega, psi_r }
}

/// Cable direction tracking errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableErrors {
    pub e_q: Vec3,
    pub e_omega: Vec3,
    /// `1 − q·q_d`, in [0, 2].
    pub psi_q: f64,
    pub q_d: Vec3,
    pub omega_d: Vec3,
}

impl CableErrors {
    pub fn zero(q_d: Vec3) -> Self {
        Self { e_q: Vec3::zeros(), e_omega: Vec3::zeros(), psi_q: 0.0, q_d, omega_d: Vec3::zeros() }
    }
}

pub fn cable_errors(q_d: &Vec3, q_d_dot: &Vec3, q: &Vec3, omega: &Vec3) -> CableErrors {
    let omega_d = q_d.cross(q_d_dot);
    let q_hat = hat(q);
    CableErrors {
        e_q: q_d.cross(q),
        e_omega: omega + q_hat * q_hat * omega_d,
        psi_q: 1.0 - q.dot(q_d),
        q_d: *q_d,
        omega_d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    fn rand_vec(seed: &mut u64) -> Vec3 {
        Vec3::new(lcg(seed), lcg(seed), lcg(seed)) * 3.0
    }

    fn rand_rot(seed: &mut u64) -> Mat3 {
        exp_so3(&rand_vec(seed))
    }

    #[test]
    fn hat_basics() {
        assert_eq!(hat(&Vec3::zeros()), Mat3::zeros());
        let h = hat(&Vec3::z());
        assert_eq!(h[(0, 1)], -1.0);
        assert_eq!(h[(1, 0)], 1.0);
        assert_eq!(h * Vec3::x(), Vec3::y());
    }

    #[test]
    fn hat_matches_cross_product() {
        let mut seed = 7;
        for _ in 0..100 {
            let (v, w) = (rand_vec(&mut seed), rand_vec(&mut seed));
            let cross = Vec3::new(v.y * w.z - v.z * w.y, v.z * w.x - v.x * w.z, v.x * w.y - v.y * w.x);
            assert!((hat(&v) * w - cross).amax() <= 1e-14);
            assert!((hat(&v) + hat(&v).transpose()).amax() == 0.0);
        }
    }

    #[test]
    fn vee_inverts_hat() {
        assert_eq!(vee(&hat(&Vec3::new(1.0, 2.0, 3.0))).unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(vee(&Mat3::zeros()).unwrap(), Vec3::zeros());
        let mut seed = 11;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let v = rand_vec(&mut seed);
            worst = worst.max((vee(&hat(&v)).unwrap() - v).amax());
        }
        assert!(worst <= 1e-14);
    }

    #[test]
    fn vee_rejects_non_skew() {
        let mut m = hat(&Vec3::new(1.0, 2.0, 3.0));
        m[(0, 0)] = 1e-6;
        assert!(matches!(vee(&m), Err(Error::NotSkew(_))));
    }

    #[test]
    fn payload_errors_perfect_tracking() {
        let r = rot_z(0.4);
        let w = Vec3::new(0.1, 0.2, 0.3);
        let x = Vec3::new(1.0, 2.0, 3.0);
        let e = payload_errors(&r, &r, &w, &w, &x, &x, &x, &x);
        assert!(e.e_r.norm() < 1e-15 && e.e_omega.norm() < 1e-15 && e.psi_r.abs() < 1e-15);
    }

    #[test]
    fn payload_errors_quarter_turn() {
        let z = Vec3::zeros();
        let e = payload_errors(&Mat3::identity(), &rot_z(FRAC_PI_2), &z, &z, &z, &z, &Vec3::x(), &z);
        assert!((e.e_r - Vec3::z()).amax() < 1e-15);
        assert!((e.psi_r - 1.0).abs() < 1e-15);
        assert_eq!(e.e_x, Vec3::x());
    }

    #[test]
    fn psi_bounds_attitude_error() {
        let mut seed = 3;
        let z = Vec3::zeros();
        for _ in 0..1000 {
            let (rd, r) = (rand_rot(&mut seed), rand_rot(&mut seed));
            let e = payload_errors(&rd, &r, &z, &z, &z, &z, &z, &z);
            assert!(e.psi_r >= 0.25 * e.e_r.norm_squared() - 1e-14);
            assert!(e.e_r.amax() <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn payload_errors_left_invariant() {
        let mut seed = 5;
        let z = Vec3::zeros();
        for _ in 0..200 {
            let (rd, r, q) = (rand_rot(&mut seed), rand_rot(&mut seed), rand_rot(&mut seed));
            let a = payload_errors(&rd, &r, &z, &z, &z, &z, &z, &z);
            let b = payload_errors(&(q * rd), &(q * r), &z, &z, &z, &z, &z, &z);
            assert!((a.e_r - b.e_r).amax() <= 1e-12);
            assert!((a.psi_r - b.psi_r).abs() <= 1e-12);
        }
    }

    #[test]
    fn cable_errors_cases() {
        let e = cable_errors(&-Vec3::z(), &Vec3::zeros(), &-Vec3::z(), &Vec3::zeros());
        assert_eq!(e.e_q, Vec3::zeros());
        assert_eq!(e.psi_q, 0.0);

        let e = cable_errors(&-Vec3::z(), &Vec3::zeros(), &-Vec3::x(), &Vec3::zeros());
        assert_eq!(e.e_q, Vec3::y());
        assert_eq!(e.psi_q, 1.0);

        let q = Vec3::new(0.3, -0.4, 0.5).normalize();
        let e = cable_errors(&q, &Vec3::zeros(), &-q, &Vec3::zeros());
        assert!((e.psi_q - 2.0).abs() < 1e-15);
        assert!(e.e_q.norm() < 1e-15);
    }

    #[test]
    fn cable_attitude_error_is_perpendicular_to_desired() {
        let mut seed = 9;
        for _ in 0..100 {
            let q_d = rand_vec(&mut seed).normalize();
            let q = rand_vec(&mut seed).normalize();
            let e = cable_errors(&q_d, &rand_vec(&mut seed), &q, &rand_vec(&mut seed));
            assert!(e.e_q.dot(&q_d).abs() <= 1e-12);
            assert!((0.0..=2.0).contains(&e.psi_q));
        }
    }

    #[test]
    fn projections() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(project_parallel(&Vec3::z(), &v), Vec3::new(0.0, 0.0, 3.0));
        assert_eq!(project_perpendicular(&Vec3::z(), &v), Vec3::new(1.0, 2.0, 0.0));
        let q = Vec3::new(1.0, -2.0, 0.5).normalize();
        assert!((project_parallel(&q, &q) - q).norm() < 1e-15);
        assert!(project_perpendicular(&q, &q).norm() < 1e-15);
    }

    #[test]
    fn renormalize_cases() {
        let r = exp_so3(&Vec3::new(0.3, -1.2, 0.7));
        assert!((renormalize_rotation(&r).unwrap() - r).amax() <= 1e-14);

        let nudged = Mat3::identity() + 1e-6 * hat(&Vec3::z());
        let fixed = renormalize_rotation(&nudged).unwrap();
        assert!(orthogonality_residual(&fixed) <= 1e-12);
        let again = renormalize_rotation(&fixed).unwrap();
        assert!((again - fixed).amax() <= 1e-12);

        let reflection = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(renormalize_rotation(&reflection).is_err());
        assert!(renormalize_rotation(&(Mat3::identity() * 1.1)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vec3> {
            prop::array::uniform3(-5.0f64..5.0).prop_map(Vec3::from)
        }

        proptest! {
            #[test]
            fn projections_split_and_are_idempotent(q in vec3(), v in vec3()) {
                prop_assume!(q.norm() > 1e-3);
                let q = q.normalize();
                let par = project_parallel(&q, &v);
                let perp = project_perpendicular(&q, &v);
                prop_assert!((par + perp - v).amax() <= 1e-14 * (1.0 + v.amax()));
                prop_assert!((project_parallel(&q, &par) - par).amax() <= 1e-13);
                prop_assert!(project_perpendicular(&q, &par).amax() <= 1e-13);
                prop_assert!(perp.dot(&q).abs() <= 1e-13);
            }

            #[test]
            fn hat_vee_roundtrip(v in vec3()) {
                prop_assert!((vee(&hat(&v)).unwrap() - v).amax() <= 1e-14);
            }
        }
    }
}
